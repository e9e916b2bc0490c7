//! Pointed epistemic models and model checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::formula::{Agent, Atom, Formula};

/// World identifier. Worlds created by product updates get compound names
/// like `w*alpha`; names are carriers of identity only and never affect
/// canonical keys.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct WorldId(String);

impl WorldId {
    pub fn new(name: impl Into<String>) -> Self {
        WorldId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate world `{0}`")]
    DuplicateWorld(WorldId),
    #[error("unknown world `{0}`")]
    UnknownWorld(WorldId),
    #[error("unknown agent `{0}`")]
    UnknownAgent(Agent),
    #[error("model has no worlds")]
    Empty,
}

pub type ModelResult<T> = Result<T, ModelError>;

/// A failed equivalence-relation check, with the offending worlds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum S5Violation {
    Reflexivity { agent: Agent, world: WorldId },
    Symmetry { agent: Agent, from: WorldId, to: WorldId },
    Transitivity { agent: Agent, from: WorldId, via: WorldId, to: WorldId },
}

impl fmt::Display for S5Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            S5Violation::Reflexivity { agent, world } => {
                write!(f, "relation for `{agent}` misses reflexive pair at `{world}`")
            }
            S5Violation::Symmetry { agent, from, to } => {
                write!(f, "relation for `{agent}` has `{from}` -> `{to}` but not the converse")
            }
            S5Violation::Transitivity { agent, from, via, to } => write!(
                f,
                "relation for `{agent}` has `{from}` -> `{via}` -> `{to}` but not `{from}` -> `{to}`"
            ),
        }
    }
}

/// A multi-agent Kripke model: a nonempty set of worlds, one accessibility
/// relation per agent, and a valuation mapping each world to the set of
/// atoms true there (absent atoms are false).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EpistemicModel {
    valuation: BTreeMap<WorldId, BTreeSet<Atom>>,
    relations: BTreeMap<Agent, BTreeMap<WorldId, BTreeSet<WorldId>>>,
}

impl EpistemicModel {
    /// Creates a model with the given agent set and no worlds yet. Every
    /// declared agent gets a relation, possibly left empty.
    pub fn new(agents: impl IntoIterator<Item = Agent>) -> Self {
        EpistemicModel {
            valuation: BTreeMap::new(),
            relations: agents.into_iter().map(|a| (a, BTreeMap::new())).collect(),
        }
    }

    pub fn add_world(
        &mut self,
        id: WorldId,
        atoms: impl IntoIterator<Item = Atom>,
    ) -> ModelResult<()> {
        if self.valuation.contains_key(&id) {
            return Err(ModelError::DuplicateWorld(id));
        }
        self.valuation.insert(id, atoms.into_iter().collect());
        Ok(())
    }

    pub fn add_edge(&mut self, agent: &Agent, from: &WorldId, to: &WorldId) -> ModelResult<()> {
        if !self.valuation.contains_key(from) {
            return Err(ModelError::UnknownWorld(from.clone()));
        }
        if !self.valuation.contains_key(to) {
            return Err(ModelError::UnknownWorld(to.clone()));
        }
        let rel = self
            .relations
            .get_mut(agent)
            .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))?;
        rel.entry(from.clone()).or_default().insert(to.clone());
        Ok(())
    }

    /// Adds a complete (reflexive, symmetric) block of edges over `class`
    /// for `agent`: the observational-equivalence reading of a partition
    /// cell.
    pub fn add_obs_class(&mut self, agent: &Agent, class: &[WorldId]) -> ModelResult<()> {
        for from in class {
            for to in class {
                self.add_edge(agent, from, to)?;
            }
        }
        Ok(())
    }

    /// Completes every agent's relation with the missing reflexive pairs.
    /// Used when a surface syntax treats unlisted worlds as singleton
    /// observation classes.
    pub fn close_reflexive(&mut self) {
        let worlds: Vec<WorldId> = self.valuation.keys().cloned().collect();
        for rel in self.relations.values_mut() {
            for w in &worlds {
                rel.entry(w.clone()).or_default().insert(w.clone());
            }
        }
    }

    pub fn world_count(&self) -> usize {
        self.valuation.len()
    }

    pub fn worlds(&self) -> impl Iterator<Item = &WorldId> {
        self.valuation.keys()
    }

    pub fn has_world(&self, w: &WorldId) -> bool {
        self.valuation.contains_key(w)
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.relations.keys()
    }

    pub fn has_agent(&self, a: &Agent) -> bool {
        self.relations.contains_key(a)
    }

    pub fn world_atoms(&self, w: &WorldId) -> ModelResult<&BTreeSet<Atom>> {
        self.valuation
            .get(w)
            .ok_or_else(|| ModelError::UnknownWorld(w.clone()))
    }

    /// Atoms occurring in some world's valuation.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.valuation.values().flatten().cloned().collect()
    }

    /// Successors of `w` under `agent`'s relation, in sorted order.
    pub fn successors(&self, agent: &Agent, w: &WorldId) -> ModelResult<Vec<WorldId>> {
        let rel = self
            .relations
            .get(agent)
            .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))?;
        if !self.valuation.contains_key(w) {
            return Err(ModelError::UnknownWorld(w.clone()));
        }
        Ok(rel.get(w).map(|s| s.iter().cloned().collect()).unwrap_or_default())
    }

    pub fn edges(&self, agent: &Agent) -> ModelResult<Vec<(WorldId, WorldId)>> {
        let rel = self
            .relations
            .get(agent)
            .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))?;
        Ok(rel
            .iter()
            .flat_map(|(w, succ)| succ.iter().map(move |u| (w.clone(), u.clone())))
            .collect())
    }

    /// Truth of `f` at world `w`. Atoms not listed in the valuation are
    /// false; an agent in `f` without a relation entry is an error.
    pub fn eval(&self, w: &WorldId, f: &Formula) -> ModelResult<bool> {
        let truth = self.world_atoms(w)?;
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Atom(p) => Ok(truth.contains(p)),
            Formula::Not(g) => Ok(!self.eval(w, g)?),
            Formula::And(l, r) => Ok(self.eval(w, l)? && self.eval(w, r)?),
            Formula::Or(l, r) => Ok(self.eval(w, l)? || self.eval(w, r)?),
            Formula::Implies(l, r) => Ok(!self.eval(w, l)? || self.eval(w, r)?),
            Formula::Knows(a, g) => {
                for u in self.successors(a, w)? {
                    if !self.eval(&u, g)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Poss(a, g) => {
                for u in self.successors(a, w)? {
                    if self.eval(&u, g)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Checks that every agent's relation is an equivalence relation over
    /// the whole world set.
    pub fn check_s5(&self) -> Result<(), S5Violation> {
        for (agent, rel) in &self.relations {
            for w in self.valuation.keys() {
                let succ_w = rel.get(w);
                if !succ_w.is_some_and(|s| s.contains(w)) {
                    return Err(S5Violation::Reflexivity {
                        agent: agent.clone(),
                        world: w.clone(),
                    });
                }
                for u in succ_w.into_iter().flatten() {
                    if !rel.get(u).is_some_and(|s| s.contains(w)) {
                        return Err(S5Violation::Symmetry {
                            agent: agent.clone(),
                            from: w.clone(),
                            to: u.clone(),
                        });
                    }
                    for v in rel.get(u).into_iter().flatten() {
                        if !rel.get(w).is_some_and(|s| s.contains(v)) {
                            return Err(S5Violation::Transitivity {
                                agent: agent.clone(),
                                from: w.clone(),
                                via: u.clone(),
                                to: v.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_s5(&self) -> bool {
        self.check_s5().is_ok()
    }
}

/// A model together with a designated actual world.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PointedModel {
    model: EpistemicModel,
    point: WorldId,
}

impl PointedModel {
    pub fn new(model: EpistemicModel, point: WorldId) -> ModelResult<Self> {
        if model.valuation.is_empty() {
            return Err(ModelError::Empty);
        }
        if !model.has_world(&point) {
            return Err(ModelError::UnknownWorld(point));
        }
        Ok(PointedModel { model, point })
    }

    pub fn model(&self) -> &EpistemicModel {
        &self.model
    }

    pub fn point(&self) -> &WorldId {
        &self.point
    }

    pub fn into_parts(self) -> (EpistemicModel, WorldId) {
        (self.model, self.point)
    }

    /// Re-points the same model at another of its worlds.
    pub fn repoint(&self, w: WorldId) -> ModelResult<Self> {
        PointedModel::new(self.model.clone(), w)
    }

    /// Truth of `f` at the point.
    pub fn eval(&self, f: &Formula) -> ModelResult<bool> {
        self.model.eval(&self.point, f)
    }
}
