//! Action-type classification: propositional, S5, public, announcement,
//! and separability of same-component preconditions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ActionId, ActionModel};
use crate::logic::{Agent, Atom, EpistemicModel, Formula, WorldId};

/// Three-valued verdict for properties decided by bounded search.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Trilean {
    True,
    False,
    Unknown,
}

impl Trilean {
    pub fn is_true(self) -> bool {
        self == Trilean::True
    }
}

impl fmt::Display for Trilean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trilean::True => "true",
            Trilean::False => "false",
            Trilean::Unknown => "unknown",
        })
    }
}

/// Classification flags for an action model, all recomputable from the
/// model itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ActionClass {
    /// All preconditions and postconditions are modality-free.
    pub propositional: bool,
    /// Every agent's relation on actions is an equivalence relation.
    pub s5: bool,
    /// Set to the point when one was supplied and every agent's relation is
    /// the identity on actions.
    pub public_action: Option<ActionId>,
    /// Set when `public_action` is set and no action changes any fact.
    pub public_announcement: Option<ActionId>,
    /// Whether preconditions of any two distinct actions in the same
    /// connected component (union of all agents' relations) are jointly
    /// unsatisfiable. Decided exactly for propositional pairs; otherwise by
    /// model search up to a world bound, with `Unknown` beyond it.
    pub separable: Trilean,
}

const DEFAULT_SEPARABILITY_WORLD_BOUND: usize = 2;
const SEPARABILITY_ATOM_LIMIT: usize = 10;

/// Classifies with the default world bound for the separability search.
pub fn classify(a: &ActionModel, point: Option<&ActionId>) -> ActionClass {
    classify_with_bound(a, point, DEFAULT_SEPARABILITY_WORLD_BOUND)
}

pub fn classify_with_bound(
    a: &ActionModel,
    point: Option<&ActionId>,
    world_bound: usize,
) -> ActionClass {
    let propositional = a.actions().all(|id| {
        a.pre(id).is_ok_and(|f| f.is_propositional())
            && a.post_map(id)
                .is_ok_and(|m| m.values().all(|f| f.is_propositional()))
    });
    let public_action = point.filter(|_| a.has_identity_relations()).cloned();
    let public_announcement = public_action.clone().filter(|_| a.has_no_facts_change());
    ActionClass {
        propositional,
        s5: a.is_s5(),
        public_action,
        public_announcement,
        separable: separability(a, world_bound),
    }
}

fn separability(a: &ActionModel, world_bound: usize) -> Trilean {
    let mut verdict = Trilean::True;
    for component in components(a) {
        for (i, x) in component.iter().enumerate() {
            for y in &component[i + 1..] {
                let px = a.pre(x).expect("component members are declared");
                let py = a.pre(y).expect("component members are declared");
                match joint_satisfiability(px, py, world_bound) {
                    Trilean::True => return Trilean::False,
                    Trilean::Unknown => verdict = Trilean::Unknown,
                    Trilean::False => {}
                }
            }
        }
    }
    verdict
}

/// Connected components of the undirected union of all agents' relations.
fn components(a: &ActionModel) -> Vec<Vec<ActionId>> {
    let mut adjacency: BTreeMap<ActionId, BTreeSet<ActionId>> = BTreeMap::new();
    for agent in a.agents() {
        for (x, y) in a.edges(agent) {
            adjacency.entry(x.clone()).or_default().insert(y.clone());
            adjacency.entry(y).or_default().insert(x);
        }
    }
    let mut seen: BTreeSet<ActionId> = BTreeSet::new();
    let mut out = Vec::new();
    for start in a.actions() {
        if seen.contains(start) {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = vec![start.clone()];
        seen.insert(start.clone());
        while let Some(id) = queue.pop() {
            component.push(id.clone());
            for next in adjacency.get(&id).into_iter().flatten() {
                if seen.insert(next.clone()) {
                    queue.push(next.clone());
                }
            }
        }
        component.sort();
        out.push(component);
    }
    out
}

/// Whether `f ∧ g` has a model. Exact by valuation enumeration when both
/// formulas are propositional; otherwise an S5-model search up to
/// `world_bound` worlds, which can only ever answer `True` or `Unknown`.
fn joint_satisfiability(f: &Formula, g: &Formula, world_bound: usize) -> Trilean {
    let conj = Formula::and(f.clone(), g.clone());
    let atoms: Vec<Atom> = conj.atoms().into_iter().collect();
    if conj.is_propositional() {
        return if some_valuation_satisfies(&conj, &atoms) {
            Trilean::True
        } else {
            Trilean::False
        };
    }
    if atoms.len() > SEPARABILITY_ATOM_LIMIT {
        return Trilean::Unknown;
    }
    let agents: Vec<Agent> = conj.agents().into_iter().collect();
    for n in 1..=world_bound.max(1) {
        if some_s5_model_satisfies(&conj, &atoms, &agents, n) {
            return Trilean::True;
        }
    }
    Trilean::Unknown
}

fn some_valuation_satisfies(f: &Formula, atoms: &[Atom]) -> bool {
    for mask in 0u64..(1u64 << atoms.len()) {
        let v: BTreeSet<Atom> = atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, p)| p.clone())
            .collect();
        if f.eval_propositional(&v) == Some(true) {
            return true;
        }
    }
    false
}

/// Searches all S5 models with exactly `n` worlds, valuations over `atoms`,
/// and one partition per agent, for one satisfying `f` at the first world.
/// Checking only the first world is enough because every assignment of
/// valuations to worlds is enumerated.
fn some_s5_model_satisfies(f: &Formula, atoms: &[Atom], agents: &[Agent], n: usize) -> bool {
    let worlds: Vec<WorldId> = (0..n).map(|i| WorldId::new(format!("e{i}"))).collect();
    let valuations = 1u64 << atoms.len();
    let mut masks = vec![0u64; n];
    loop {
        if satisfied_under_some_partitions(f, atoms, agents, &worlds, &masks) {
            return true;
        }
        let mut carry = true;
        for m in masks.iter_mut() {
            if carry {
                *m += 1;
                if *m == valuations {
                    *m = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            return false;
        }
    }
}

fn satisfied_under_some_partitions(
    f: &Formula,
    atoms: &[Atom],
    agents: &[Agent],
    worlds: &[WorldId],
    masks: &[u64],
) -> bool {
    let mut assignments: Vec<Vec<usize>> = Vec::new();
    enumerate_partitions(worlds.len(), &mut vec![0; worlds.len()], 1, &mut assignments);
    let mut choice = vec![0usize; agents.len()];
    loop {
        let mut m = EpistemicModel::new(agents.iter().cloned());
        for (i, w) in worlds.iter().enumerate() {
            let atoms_here = atoms
                .iter()
                .enumerate()
                .filter(|(j, _)| masks[i] & (1 << j) != 0)
                .map(|(_, p)| p.clone());
            m.add_world(w.clone(), atoms_here).expect("fresh world");
        }
        for (k, agent) in agents.iter().enumerate() {
            let blocks = &assignments[choice[k]];
            for (i, wi) in worlds.iter().enumerate() {
                for (j, wj) in worlds.iter().enumerate() {
                    if blocks[i] == blocks[j] {
                        m.add_edge(agent, wi, wj).expect("declared worlds");
                    }
                }
            }
        }
        if m.eval(&worlds[0], f) == Ok(true) {
            return true;
        }
        let mut carry = true;
        for c in choice.iter_mut() {
            if carry {
                *c += 1;
                if *c == assignments.len() {
                    *c = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry || agents.is_empty() {
            return false;
        }
    }
}

/// All set partitions of {0..n} as block-index vectors, in restricted
/// growth form: position 0 is block 0 and each later position uses a block
/// index at most one past the current maximum.
fn enumerate_partitions(n: usize, current: &mut Vec<usize>, from: usize, out: &mut Vec<Vec<usize>>) {
    if from == n {
        out.push(current.clone());
        return;
    }
    let max_used = current[..from].iter().copied().max().unwrap_or(0);
    for block in 0..=max_used + 1 {
        current[from] = block;
        enumerate_partitions(n, current, from + 1, out);
    }
    current[from] = 0;
}
