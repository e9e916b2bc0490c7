//! Model normalization: component restriction and bisimulation contraction.
//!
//! Search procedures apply both after every product update; together they
//! keep the models encountered during search small and make canonical keys
//! meaningful as memoization keys.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::formula::Agent;
use super::model::{EpistemicModel, PointedModel, WorldId};

/// Restricts a pointed model to the worlds connected to its point by any
/// chain of relation edges, in either direction and for any agent. Truth of
/// formulas at the point is unaffected.
pub fn restrict_to_component(pm: &PointedModel) -> PointedModel {
    let model = pm.model();
    let mut undirected: BTreeMap<WorldId, BTreeSet<WorldId>> = BTreeMap::new();
    for agent in model.agents() {
        for (from, to) in model.edges(agent).expect("agent from model") {
            undirected.entry(from.clone()).or_default().insert(to.clone());
            undirected.entry(to).or_default().insert(from);
        }
    }

    let mut keep: BTreeSet<WorldId> = BTreeSet::new();
    let mut queue = VecDeque::new();
    keep.insert(pm.point().clone());
    queue.push_back(pm.point().clone());
    while let Some(w) = queue.pop_front() {
        for next in undirected.get(&w).into_iter().flatten() {
            if keep.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }

    let mut out = EpistemicModel::new(model.agents().cloned());
    for w in model.worlds() {
        if keep.contains(w) {
            let atoms = model.world_atoms(w).expect("world from model").clone();
            out.add_world(w.clone(), atoms).expect("fresh world");
        }
    }
    for agent in model.agents() {
        for (from, to) in model.edges(agent).expect("agent from model") {
            if keep.contains(&from) && keep.contains(&to) {
                out.add_edge(agent, &from, &to).expect("kept endpoints");
            }
        }
    }
    PointedModel::new(out, pm.point().clone()).expect("point is kept")
}

/// Quotients a pointed model by its coarsest bisimulation. Two worlds are
/// merged when they carry the same valuation and, for every agent, their
/// successor sets land in the same blocks; the refinement below iterates
/// that condition to a fixpoint. Block representatives keep the smallest
/// member's name.
pub fn bisim_contract(pm: &PointedModel) -> PointedModel {
    let model = pm.model();
    let worlds: Vec<&WorldId> = model.worlds().collect();
    let agents: Vec<&Agent> = model.agents().collect();

    let mut block: BTreeMap<&WorldId, usize> = BTreeMap::new();
    {
        let mut by_valuation: BTreeMap<_, Vec<&WorldId>> = BTreeMap::new();
        for w in &worlds {
            by_valuation
                .entry(model.world_atoms(w).expect("world from model"))
                .or_default()
                .push(w);
        }
        for (id, members) in by_valuation.values().enumerate() {
            for w in members {
                block.insert(w, id);
            }
        }
    }

    loop {
        let mut signatures: BTreeMap<(usize, Vec<BTreeSet<usize>>), Vec<&WorldId>> =
            BTreeMap::new();
        for w in &worlds {
            let succ_blocks: Vec<BTreeSet<usize>> = agents
                .iter()
                .map(|a| {
                    model
                        .successors(a, w)
                        .expect("agent and world from model")
                        .iter()
                        .map(|u| block[u])
                        .collect()
                })
                .collect();
            signatures
                .entry((block[w], succ_blocks))
                .or_default()
                .push(w);
        }
        if signatures.len() == block.values().collect::<BTreeSet<_>>().len() {
            break;
        }
        block = BTreeMap::new();
        for (id, members) in signatures.values().enumerate() {
            for w in members {
                block.insert(w, id);
            }
        }
    }

    let mut representative: BTreeMap<usize, &WorldId> = BTreeMap::new();
    for w in &worlds {
        let entry = representative.entry(block[w]).or_insert(w);
        if *w < *entry {
            *entry = w;
        }
    }

    let mut out = EpistemicModel::new(model.agents().cloned());
    for rep in representative.values() {
        let atoms = model.world_atoms(rep).expect("world from model").clone();
        out.add_world((*rep).clone(), atoms).expect("fresh representative");
    }
    for agent in &agents {
        for (from, to) in model.edges(agent).expect("agent from model") {
            let from_rep = representative[&block[&from]].clone();
            let to_rep = representative[&block[&to]].clone();
            out.add_edge(agent, &from_rep, &to_rep).expect("representatives exist");
        }
    }
    let point_rep = representative[&block[pm.point()]].clone();
    PointedModel::new(out, point_rep).expect("representative point")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Atom, Formula};

    fn agent(s: &str) -> Agent {
        Agent::new(s)
    }

    fn wid(s: &str) -> WorldId {
        WorldId::new(s)
    }

    #[test]
    fn restriction_drops_disconnected_worlds() {
        let mut m = EpistemicModel::new([agent("a")]);
        m.add_world(wid("w"), [Atom::new("p")]).unwrap();
        m.add_world(wid("u"), []).unwrap();
        m.add_world(wid("island"), [Atom::new("q")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("w"), wid("u")]).unwrap();
        m.add_edge(&agent("a"), &wid("island"), &wid("island")).unwrap();
        let pm = PointedModel::new(m, wid("w")).unwrap();
        let restricted = restrict_to_component(&pm);
        assert_eq!(restricted.model().world_count(), 2);
        assert!(!restricted.model().has_world(&wid("island")));
        assert_eq!(restricted.point(), &wid("w"));
    }

    #[test]
    fn restriction_follows_edges_backwards() {
        let mut m = EpistemicModel::new([agent("a")]);
        m.add_world(wid("w"), []).unwrap();
        m.add_world(wid("u"), [Atom::new("p")]).unwrap();
        m.add_edge(&agent("a"), &wid("u"), &wid("w")).unwrap();
        let pm = PointedModel::new(m, wid("w")).unwrap();
        let restricted = restrict_to_component(&pm);
        assert!(restricted.model().has_world(&wid("u")));
    }

    #[test]
    fn contraction_merges_duplicate_worlds() {
        let mut m = EpistemicModel::new([agent("a")]);
        m.add_world(wid("u1"), []).unwrap();
        m.add_world(wid("u2"), []).unwrap();
        m.add_world(wid("w"), [Atom::new("p")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("u1"), wid("u2"), wid("w")])
            .unwrap();
        let pm = PointedModel::new(m, wid("u2")).unwrap();
        let contracted = bisim_contract(&pm);
        assert_eq!(contracted.model().world_count(), 2);
        assert_eq!(contracted.point(), &wid("u1"));

        let f = Formula::poss(agent("a"), Formula::atom("p"));
        assert_eq!(pm.eval(&f).unwrap(), contracted.eval(&f).unwrap());
    }

    #[test]
    fn contraction_respects_successor_structure() {
        // v1 and v2 share a valuation but only v2 reaches the p-world, so
        // they must stay distinct.
        let mut m = EpistemicModel::new([agent("a")]);
        m.add_world(wid("v1"), []).unwrap();
        m.add_world(wid("v2"), []).unwrap();
        m.add_world(wid("t"), [Atom::new("p")]).unwrap();
        m.add_edge(&agent("a"), &wid("v2"), &wid("t")).unwrap();
        m.add_edge(&agent("a"), &wid("v1"), &wid("v2")).unwrap();
        let pm = PointedModel::new(m, wid("v1")).unwrap();
        let contracted = bisim_contract(&pm);
        assert_eq!(contracted.model().world_count(), 3);
    }

    #[test]
    fn contraction_preserves_truth_of_modal_formulas() {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w1"), [Atom::new("p")]).unwrap();
        m.add_world(wid("w2"), [Atom::new("p")]).unwrap();
        m.add_world(wid("u"), []).unwrap();
        m.add_obs_class(&agent("a"), &[wid("w1"), wid("w2")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("u")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("w1"), wid("w2"), wid("u")])
            .unwrap();
        let pm = PointedModel::new(m, wid("w1")).unwrap();
        let contracted = bisim_contract(&pm);
        assert_eq!(contracted.model().world_count(), 2);
        for f in [
            Formula::knows(agent("a"), Formula::atom("p")),
            Formula::knows(agent("b"), Formula::atom("p")),
            Formula::poss(agent("b"), Formula::not(Formula::atom("p"))),
        ] {
            assert_eq!(pm.eval(&f).unwrap(), contracted.eval(&f).unwrap(), "{f}");
        }
    }
}
