//! Static support for the turn and action checks: which atoms an agent is
//! guaranteed to see agree across its observation cell at every reachable
//! configuration. The analysis enumerates complete valuations of the atoms
//! the instance mentions, restricted to those respecting detected
//! exactly-one atom groups, and shrinks a per-agent "aligned" atom set to a
//! fixpoint. Only action pairs that can fire from valuations agreeing on
//! the aligned atoms count against an agent, so a pair gated to different
//! phases of a round never registers as a violation.

use std::collections::{BTreeMap, BTreeSet};

use crate::dynamics::{post_valuation, ActionId, ActionModel, FiniteDomainVar};
use crate::logic::{Agent, Atom, PointedModel};

use super::DistResult;

const VALUATION_LIMIT: usize = 8192;
const ATOM_LIMIT: usize = 64;
const FAMILY_CASE_LIMIT: usize = 4096;

/// Atom groups holding exactly one member in every reachable valuation
/// (one-hot encoded variables, recognized by their `name@value` spelling),
/// plus the unconstrained rest.
struct ValuationSpace {
    families: Vec<Vec<Atom>>,
    loose: Vec<Atom>,
}

impl ValuationSpace {
    fn detect(m: &PointedModel, act: &ActionModel) -> DistResult<ValuationSpace> {
        let mut atoms: BTreeSet<Atom> = m.model().atoms();
        atoms.extend(act.atoms());

        let mut candidates: BTreeMap<String, Vec<Atom>> = BTreeMap::new();
        let mut loose: Vec<Atom> = Vec::new();
        for atom in &atoms {
            match atom.as_str().split_once('@') {
                Some((prefix, _)) if !prefix.is_empty() => candidates
                    .entry(prefix.to_string())
                    .or_default()
                    .push(atom.clone()),
                _ => loose.push(atom.clone()),
            }
        }

        let mut families = Vec::new();
        for (_, group) in candidates {
            if Self::exactly_one_invariant(&group, m, act)? {
                families.push(group);
            } else {
                loose.extend(group);
            }
        }
        Ok(ValuationSpace { families, loose })
    }

    /// Whether every initial world holds exactly one atom of `group` and
    /// every action provably keeps it that way: actions either leave the
    /// whole group unwritten or rewrite all of it so that exactly one
    /// member comes out true.
    fn exactly_one_invariant(
        group: &[Atom],
        m: &PointedModel,
        act: &ActionModel,
    ) -> DistResult<bool> {
        let members: BTreeSet<&Atom> = group.iter().collect();
        for w in m.model().worlds() {
            let atoms = m.model().world_atoms(w)?;
            if group.iter().filter(|t| atoms.contains(t)).count() != 1 {
                return Ok(false);
            }
        }
        for alpha in act.actions() {
            let posts = act.post_map(alpha)?;
            let written: Vec<&Atom> = group.iter().filter(|t| posts.contains_key(t)).collect();
            if written.is_empty() {
                continue;
            }
            if written.len() != group.len() {
                return Ok(false);
            }
            let mut deps: BTreeSet<Atom> = BTreeSet::new();
            for t in group {
                deps.extend(posts[t].atoms());
            }
            let extra: Vec<Atom> = deps.into_iter().filter(|d| !members.contains(d)).collect();
            let cases = group.len().checked_shl(extra.len() as u32);
            if cases.is_none_or(|c| c > FAMILY_CASE_LIMIT) || extra.len() >= usize::BITS as usize {
                return Ok(false);
            }
            for chosen in group {
                for mask in 0usize..(1 << extra.len()) {
                    let mut v: BTreeSet<Atom> = [chosen.clone()].into();
                    v.extend(
                        extra
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask & (1 << i) != 0)
                            .map(|(_, d)| d.clone()),
                    );
                    let mut true_after = 0usize;
                    for t in group {
                        match posts[t].eval_propositional(&v) {
                            Some(true) => true_after += 1,
                            Some(false) => {}
                            None => return Ok(false),
                        }
                    }
                    if true_after != 1 {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    fn atom_index(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = Vec::new();
        for family in &self.families {
            out.extend(family.iter().cloned());
        }
        out.extend(self.loose.iter().cloned());
        out.sort();
        out
    }

    fn enumerate(&self, index: &[Atom]) -> Option<Vec<u64>> {
        let mut count: usize = 1;
        for family in &self.families {
            count = count.checked_mul(family.len())?;
        }
        count = count.checked_shl(self.loose.len().min(63) as u32)?;
        if count > VALUATION_LIMIT || index.len() > ATOM_LIMIT {
            return None;
        }

        let bit = |atom: &Atom| -> u64 {
            1u64 << index.binary_search(atom).expect("indexed atom")
        };
        let mut masks: Vec<u64> = vec![0];
        for family in &self.families {
            masks = masks
                .iter()
                .flat_map(|&m| family.iter().map(move |t| m | bit(t)))
                .collect();
        }
        for t in &self.loose {
            masks = masks.iter().flat_map(|&m| [m, m | bit(t)]).collect();
        }
        Some(masks)
    }
}

/// The fixpoint result together with everything needed to rebuild
/// witnesses: the atom index, the enumerated valuations, and per-action
/// precondition and effect tables over them.
pub(super) struct Alignment {
    atoms: Vec<Atom>,
    masks: Vec<u64>,
    actions: Vec<ActionId>,
    /// `pre_sat[ai][vi]`: the precondition may hold there. Epistemic
    /// preconditions are kept satisfiable everywhere, which only widens
    /// what the fixpoint counts as a violation.
    pre_sat: Vec<Vec<bool>>,
    effect: Vec<Vec<u64>>,
    aligned: BTreeMap<Agent, u64>,
}

impl Alignment {
    /// `None` when the instance mentions too many atoms to enumerate.
    pub(super) fn analyze(m: &PointedModel, act: &ActionModel) -> DistResult<Option<Alignment>> {
        let space = ValuationSpace::detect(m, act)?;
        let atoms = space.atom_index();
        let Some(masks) = space.enumerate(&atoms) else {
            return Ok(None);
        };
        let sets: Vec<BTreeSet<Atom>> = masks
            .iter()
            .map(|&mask| {
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, t)| t.clone())
                    .collect()
            })
            .collect();

        let actions: Vec<ActionId> = act.actions().cloned().collect();
        let mut pre_sat = Vec::with_capacity(actions.len());
        let mut effect = Vec::with_capacity(actions.len());
        for alpha in &actions {
            let pre = act.pre(alpha)?;
            let mut sat = Vec::with_capacity(sets.len());
            let mut eff = Vec::with_capacity(sets.len());
            for v in &sets {
                let holds = pre.eval_propositional(v).unwrap_or(true);
                sat.push(holds);
                let after = if holds {
                    let next = post_valuation(v, act, alpha)?;
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(_, t)| next.contains(t))
                        .fold(0u64, |m, (i, _)| m | (1 << i))
                } else {
                    0
                };
                eff.push(after);
            }
            pre_sat.push(sat);
            effect.push(eff);
        }

        let full: u64 = if atoms.is_empty() {
            0
        } else {
            u64::MAX >> (64 - atoms.len())
        };
        let mut aligned: BTreeMap<Agent, u64> = BTreeMap::new();
        for x in m.model().agents() {
            let mut mask = full;
            for w in m.model().worlds() {
                let here = m.model().world_atoms(w)?;
                for u in m.model().successors(x, w)? {
                    let there = m.model().world_atoms(&u)?;
                    for (i, t) in atoms.iter().enumerate() {
                        if here.contains(t) != there.contains(t) {
                            mask &= !(1 << i);
                        }
                    }
                }
            }
            aligned.insert(x.clone(), mask);
        }

        let mut this = Alignment {
            atoms,
            masks,
            actions,
            pre_sat,
            effect,
            aligned,
        };
        for x in m.model().agents() {
            this.shrink(x, act, full);
        }
        Ok(Some(this))
    }

    fn action_ix(&self, alpha: &ActionId) -> usize {
        self.actions
            .binary_search(alpha)
            .expect("action ids are indexed at construction")
    }

    fn groups(&self, aligned: u64) -> BTreeMap<u64, Vec<usize>> {
        let mut out: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (vi, &mask) in self.masks.iter().enumerate() {
            out.entry(mask & aligned).or_default().push(vi);
        }
        out
    }

    fn shrink(&mut self, x: &Agent, act: &ActionModel, full: u64) {
        let pairs: Vec<(usize, usize)> = act
            .edges(x)
            .into_iter()
            .map(|(a, b)| (self.action_ix(&a), self.action_ix(&b)))
            .collect();
        let mut aligned = self.aligned[x];
        loop {
            let groups = self.groups(aligned);
            let mut seen_true = vec![vec![0u64; self.actions.len()]; groups.len()];
            let mut seen_false = vec![vec![0u64; self.actions.len()]; groups.len()];
            let mut fired = vec![vec![false; self.actions.len()]; groups.len()];
            for (gi, members) in groups.values().enumerate() {
                for &vi in members {
                    for ai in 0..self.actions.len() {
                        if self.pre_sat[ai][vi] {
                            fired[gi][ai] = true;
                            seen_true[gi][ai] |= self.effect[ai][vi];
                            seen_false[gi][ai] |= !self.effect[ai][vi] & full;
                        }
                    }
                }
            }
            let mut broken = 0u64;
            for gi in 0..groups.len() {
                for &(ai, bi) in &pairs {
                    if fired[gi][ai] && fired[gi][bi] {
                        broken |= (seen_true[gi][ai] | seen_true[gi][bi])
                            & (seen_false[gi][ai] | seen_false[gi][bi]);
                    }
                }
            }
            let next = aligned & !broken;
            if next == aligned {
                break;
            }
            aligned = next;
        }
        self.aligned.insert(x.clone(), aligned);
    }

    fn aligned_mask(&self, x: &Agent) -> u64 {
        self.aligned.get(x).copied().unwrap_or(0)
    }

    /// Whether every turn atom stays uniform within `x`'s cells.
    pub(super) fn turn_stays_aligned(&self, x: &Agent, turn: &FiniteDomainVar) -> bool {
        let aligned = self.aligned_mask(x);
        turn.atoms().iter().all(|t| match self.atoms.binary_search(t) {
            Ok(i) => aligned & (1 << i) != 0,
            Err(_) => true,
        })
    }

    /// A pair of `x`-related actions that can fire from one of `x`'s cells
    /// and move the turn to different values, with the two values read off.
    pub(super) fn turn_break(
        &self,
        x: &Agent,
        act: &ActionModel,
        turn: &FiniteDomainVar,
    ) -> Option<(ActionId, ActionId, String, String)> {
        let describe = |value: Option<&str>| match value {
            Some(v) => format!("`{v}`"),
            None => "nothing readable".to_string(),
        };
        for members in self.groups(self.aligned_mask(x)).values() {
            for (alpha, beta) in act.edges(x) {
                let ai = self.action_ix(&alpha);
                let bi = self.action_ix(&beta);
                for &vi in members {
                    if !self.pre_sat[ai][vi] {
                        continue;
                    }
                    let ra = turn.read(&self.set_of(self.effect[ai][vi]));
                    for &vj in members {
                        if !self.pre_sat[bi][vj] {
                            continue;
                        }
                        let rb = turn.read(&self.set_of(self.effect[bi][vj]));
                        if ra != rb {
                            return Some((alpha, beta, describe(ra), describe(rb)));
                        }
                    }
                }
            }
        }
        None
    }

    fn set_of(&self, mask: u64) -> BTreeSet<Atom> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| t.clone())
            .collect()
    }

    /// Whether within every cell `x` cannot refine, the set of `x`'s own
    /// executable actions is the same everywhere (a uniform choice) or a
    /// single action at each member (a move the world forces). Only sound
    /// when `x`'s own preconditions are all propositional. A `false` is
    /// inconclusive; callers fall back to scanning actual configurations.
    pub(super) fn uniform_or_forced(&self, x: &Agent, own: &[ActionId]) -> bool {
        let own_ix: Vec<usize> = own.iter().map(|alpha| self.action_ix(alpha)).collect();
        self.groups(self.aligned_mask(x)).values().all(|members| {
            let profiles: Vec<Vec<usize>> = members
                .iter()
                .map(|&vi| {
                    own_ix
                        .iter()
                        .copied()
                        .filter(|&ai| self.pre_sat[ai][vi])
                        .collect()
                })
                .collect();
            profiles.windows(2).all(|w| w[0] == w[1])
                || profiles.iter().all(|e| e.len() == 1)
        })
    }
}
