//! Canonical keys for pointed models.
//!
//! Two pointed models get the same key exactly when their contracted,
//! point-connected cores are isomorphic (same atoms, same agents, matching
//! relations and point). Keys are the memoization currency of every search
//! in this crate and the `key` entries of strategy certificates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};

use super::model::{PointedModel, WorldId};
use super::normalize::{bisim_contract, restrict_to_component};

/// Canonical key of a pointed model. Holds the full canonical serialization;
/// [`CanonicalKey::digest`] gives the short form used in certificate files.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.0.as_bytes());
        let out = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in out {
            use fmt::Write;
            write!(hex, "{byte:02x}").expect("writing to string");
        }
        hex
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Computes the canonical key of a pointed model. The input is first
/// restricted to the point's component and contracted; the contracted
/// worlds are then ordered breadth-first from the point with ties broken by
/// refined colors, and the ordered model is serialized.
pub fn canonical_key(pm: &PointedModel) -> CanonicalKey {
    let core = bisim_contract(&restrict_to_component(pm));
    let order = canonical_order(&core);
    CanonicalKey(serialize(&core, &order))
}

/// Stable colors for the worlds of a contracted model: the initial color is
/// the valuation's rank, refined by per-agent successor color sets until
/// stable. On a contracted model the fixpoint separates every world, since
/// the refinement computes exactly the bisimulation partition.
fn refined_colors(core: &PointedModel) -> BTreeMap<WorldId, usize> {
    let model = core.model();
    let worlds: Vec<WorldId> = model.worlds().cloned().collect();
    let agents: Vec<_> = model.agents().cloned().collect();

    let mut color: BTreeMap<WorldId, usize> = BTreeMap::new();
    {
        let distinct: BTreeSet<_> = worlds
            .iter()
            .map(|w| model.world_atoms(w).expect("world from model"))
            .collect();
        let rank: BTreeMap<_, usize> =
            distinct.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
        for w in &worlds {
            color.insert(w.clone(), rank[model.world_atoms(w).expect("world from model")]);
        }
    }

    loop {
        let mut signatures: BTreeSet<(usize, Vec<BTreeSet<usize>>)> = BTreeSet::new();
        let mut sig_of: BTreeMap<WorldId, (usize, Vec<BTreeSet<usize>>)> = BTreeMap::new();
        for w in &worlds {
            let succ_colors: Vec<BTreeSet<usize>> = agents
                .iter()
                .map(|a| {
                    model
                        .successors(a, w)
                        .expect("agent and world from model")
                        .iter()
                        .map(|u| color[u])
                        .collect()
                })
                .collect();
            let sig = (color[w], succ_colors);
            signatures.insert(sig.clone());
            sig_of.insert(w.clone(), sig);
        }
        let rank: BTreeMap<_, usize> =
            signatures.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        let next: BTreeMap<WorldId, usize> =
            worlds.iter().map(|w| (w.clone(), rank[&sig_of[w]])).collect();
        let stable = worlds.iter().all(|w| {
            worlds
                .iter()
                .all(|u| (color[w] == color[u]) == (next[w] == next[u]))
        });
        color = next;
        if stable {
            return color;
        }
    }
}

/// Breadth-first world order from the point; within each expansion,
/// neighbors are taken in increasing color order. Colors are unique after
/// contraction, so the order is total; should a duplicate color ever appear
/// anyway, the tied group falls back to lexicographic world order, which is
/// still deterministic for a fixed input.
fn canonical_order(core: &PointedModel) -> Vec<WorldId> {
    let model = core.model();
    let color = refined_colors(core);
    debug_assert_eq!(
        color.values().collect::<BTreeSet<_>>().len(),
        model.world_count(),
        "refined colors must separate the worlds of a contracted model"
    );

    let mut neighbors: BTreeMap<WorldId, BTreeSet<WorldId>> = BTreeMap::new();
    for agent in model.agents() {
        for (from, to) in model.edges(agent).expect("agent from model") {
            neighbors.entry(from.clone()).or_default().insert(to.clone());
            neighbors.entry(to).or_default().insert(from);
        }
    }

    let mut order: Vec<WorldId> = Vec::with_capacity(model.world_count());
    let mut seen: BTreeSet<WorldId> = BTreeSet::new();
    let mut queue = VecDeque::new();
    order.push(core.point().clone());
    seen.insert(core.point().clone());
    queue.push_back(core.point().clone());
    while let Some(w) = queue.pop_front() {
        let mut next: Vec<&WorldId> = neighbors
            .get(&w)
            .into_iter()
            .flatten()
            .filter(|u| !seen.contains(*u))
            .collect();
        next.sort_by_key(|u| (color[*u], (*u).clone()));
        for u in next {
            seen.insert(u.clone());
            order.push(u.clone());
            queue.push_back(u.clone());
        }
    }
    debug_assert_eq!(order.len(), model.world_count(), "core must be connected");
    order
}

fn serialize(core: &PointedModel, order: &[WorldId]) -> String {
    let model = core.model();
    let index: BTreeMap<&WorldId, usize> =
        order.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let atoms: Vec<_> = model.atoms().into_iter().collect();
    let atom_index: BTreeMap<_, usize> =
        atoms.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();

    let mut out = String::new();
    out.push_str("ap=");
    for (i, p) in atoms.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(p.as_str());
    }
    out.push_str(";ag=");
    for (i, a) in model.agents().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(a.as_str());
    }
    out.push_str(&format!(";n={}", order.len()));
    for w in order {
        out.push_str(";v");
        let mut first = true;
        for p in model.world_atoms(w).expect("world from model") {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&atom_index[p].to_string());
        }
    }
    for agent in model.agents() {
        out.push_str(&format!(";r[{agent}]="));
        let mut pairs: Vec<(usize, usize)> = model
            .edges(agent)
            .expect("agent from model")
            .iter()
            .map(|(from, to)| (index[from], index[to]))
            .collect();
        pairs.sort_unstable();
        for (i, (from, to)) in pairs.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{from}>{to}"));
        }
    }
    out
}
