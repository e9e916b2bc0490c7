//! Two-player variable-flipping formula games and their encoding as
//! public-action controller games.

use std::collections::BTreeSet;

use super::{bad, ControllerEncoding, RedResult};
use crate::dynamics::{ActionId, ActionModel, OwnerTag};
use crate::logic::{Agent, Atom, EpistemicModel, Formula, PointedModel, WorldId};

/// Widest conjunctive term an instance may carry.
pub const TERM_WIDTH_LIMIT: usize = 13;

/// A flipping game over `p1..pk` (controller-owned) and `q1..qk`
/// (environment-owned): turns alternate starting with the controller,
/// a move flips exactly one owned variable, and the score formula is a
/// disjunction of conjunctive terms of at most [`TERM_WIDTH_LIMIT`]
/// literals.
///
/// In the encoded game the controller wins as soon as the score formula
/// holds at a checked position, no matter whose move produced it; see the
/// note attached by [`g4_to_controller`]. [`g4_brute_force`] replays
/// exactly these encoded rules.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct G4Instance {
    k: usize,
    terms: Vec<Vec<(Atom, bool)>>,
    init: BTreeSet<Atom>,
}

impl G4Instance {
    pub fn new(
        k: usize,
        terms: Vec<Vec<(Atom, bool)>>,
        init: BTreeSet<Atom>,
    ) -> RedResult<Self> {
        if k == 0 {
            return Err(bad("k must be at least 1"));
        }
        let vars: BTreeSet<Atom> = (1..=k)
            .flat_map(|i| [Atom::new(format!("p{i}")), Atom::new(format!("q{i}"))])
            .collect();
        for term in &terms {
            if term.len() > TERM_WIDTH_LIMIT {
                return Err(bad(format!(
                    "a term has {} literals, more than the limit of {TERM_WIDTH_LIMIT}",
                    term.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for (atom, _) in term {
                if !vars.contains(atom) {
                    return Err(bad(format!(
                        "term literal `{atom}` is not one of p1..p{k}, q1..q{k}"
                    )));
                }
                if !seen.insert(atom.clone()) {
                    return Err(bad(format!("`{atom}` appears twice in one term")));
                }
            }
        }
        if let Some(stray) = init.iter().find(|a| !vars.contains(*a)) {
            return Err(bad(format!(
                "initial atom `{stray}` is not one of p1..p{k}, q1..q{k}"
            )));
        }
        Ok(G4Instance { k, terms, init })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[Vec<(Atom, bool)>] {
        &self.terms
    }

    pub fn init(&self) -> &BTreeSet<Atom> {
        &self.init
    }

    /// The score formula: a disjunction over the terms, each a conjunction
    /// of literals. No terms means an unsatisfiable score.
    pub fn score_formula(&self) -> Formula {
        Formula::big_or(self.terms.iter().map(|term| {
            Formula::big_and(term.iter().map(|(atom, positive)| {
                if *positive {
                    Formula::Atom(atom.clone())
                } else {
                    Formula::not(Formula::Atom(atom.clone()))
                }
            }))
        }))
    }
}

/// Encodes the flipping game over a single world: `flip_p<i>` negates
/// `p<i>` and belongs to the controller, `flip_q<i>` negates `q<i>` and
/// belongs to the environment, and the goal is the score formula.
pub fn g4_to_controller(g: &G4Instance) -> RedResult<ControllerEncoding> {
    let a = Agent::new("a");
    let mut model = EpistemicModel::new([a.clone()]);
    let start = WorldId::new("start");
    model.add_world(start.clone(), g.init.iter().cloned())?;
    model.close_reflexive();
    let model = PointedModel::new(model, start)?;

    let mut actions = ActionModel::new([a.clone()]);
    for i in 1..=g.k {
        for (prefix, owner) in [("p", OwnerTag::Controller), ("q", OwnerTag::Environment)] {
            let atom = Atom::new(format!("{prefix}{i}"));
            let id = ActionId::new(format!("flip_{prefix}{i}"));
            actions.add_action(id.clone(), Formula::True, owner)?;
            actions.set_post(&id, atom.clone(), Formula::not(Formula::Atom(atom)))?;
        }
    }
    actions.close_reflexive();

    Ok(ControllerEncoding {
        agents: vec![a],
        model,
        actions,
        goal: g.score_formula(),
        notes: vec![
            "In the source game the mover whose flip makes the score formula true wins; \
             here the controller wins whenever the formula holds at a checked position, \
             whoever produced it. Verdicts are compared against an oracle that replays \
             these encoded rules."
                .into(),
        ],
    })
}

/// Replays the encoded game exactly: positions are a valuation plus the
/// side to move, the controller moves first, the score formula is checked
/// at every position before a move, and the controller must force it
/// within `depth` moves. Positions number `2^(2k+1)`, so any `depth` at
/// least that makes the verdict exact; plays that dodge the score formula
/// forever are controller losses.
pub fn g4_brute_force(g: &G4Instance, depth: usize) -> bool {
    let k = g.k;
    assert!(k <= 12, "the brute force tabulates all 4^k valuations");
    let vals = 1usize << (2 * k);
    let terms: Vec<(usize, usize)> = g
        .terms
        .iter()
        .map(|term| {
            let mut want_set = 0usize;
            let mut want_clear = 0usize;
            for (atom, positive) in term {
                let bit = atom_bit(atom, k);
                if *positive {
                    want_set |= bit;
                } else {
                    want_clear |= bit;
                }
            }
            (want_set, want_clear)
        })
        .collect();
    let scored = |mask: usize| {
        terms
            .iter()
            .any(|(set, clear)| mask & set == *set && mask & clear == 0)
    };

    const CTRL: usize = 0;
    const ENV: usize = 1;
    let mut winning = vec![[false; 2]; vals];
    for mask in 0..vals {
        if scored(mask) {
            winning[mask] = [true, true];
        }
    }
    for _ in 0..depth {
        let reached = winning.clone();
        let mut changed = false;
        for mask in 0..vals {
            if !winning[mask][CTRL]
                && (0..k).any(|i| reached[mask ^ (1 << i)][ENV])
            {
                winning[mask][CTRL] = true;
                changed = true;
            }
            if !winning[mask][ENV]
                && (0..k).all(|i| reached[mask ^ (1 << (k + i))][CTRL])
            {
                winning[mask][ENV] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut init_mask = 0usize;
    for atom in &g.init {
        init_mask |= atom_bit(atom, k);
    }
    winning[init_mask][CTRL]
}

/// Bit for `p<i>` is `i-1`, for `q<i>` it is `k+i-1`.
fn atom_bit(atom: &Atom, k: usize) -> usize {
    let name = atom.as_str();
    let index: usize = name[1..].parse().expect("validated variable name");
    match name.as_bytes()[0] {
        b'p' => 1 << (index - 1),
        _ => 1 << (k + index - 1),
    }
}
