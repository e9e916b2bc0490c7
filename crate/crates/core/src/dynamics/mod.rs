//! Action models, executability, the product update, and derived helpers.
//!
//! An action model describes a finite set of possible actions, each with an
//! epistemic precondition and a sparse propositional postcondition map, plus
//! per-agent indistinguishability relations over actions. Executing an action
//! model against an epistemic model yields the product: one world per
//! executable (world, action) pair, related pointwise.

mod classify;
mod fdvar;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use classify::{classify, classify_with_bound, ActionClass, Trilean};
pub use fdvar::{fdvar_assign, fdvar_test, BinaryVar, FiniteDomainVar};

use crate::logic::{
    bisim_contract, restrict_to_component, Agent, Atom, EpistemicModel, Formula, ModelError,
    PointedModel, WorldId,
};

/// Action identifier. Unlike world names, action names survive into plans and
/// strategy certificates, so they should stay human-readable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ActionId(String);

impl ActionId {
    pub fn new(name: impl Into<String>) -> Self {
        ActionId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Who may play an action. A problem uses either the two-sided
/// controller/environment split or the per-agent split, never a mixture;
/// that exclusivity is enforced where whole problems are assembled.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum OwnerTag {
    Controller,
    Environment,
    Agent(Agent),
}

impl fmt::Display for OwnerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OwnerTag::Controller => f.write_str("ctr"),
            OwnerTag::Environment => f.write_str("env"),
            OwnerTag::Agent(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("duplicate action `{0}`")]
    DuplicateAction(ActionId),
    #[error("unknown action `{0}`")]
    UnknownAction(ActionId),
    #[error("unknown agent `{0}`")]
    UnknownAgent(Agent),
    #[error("action model has no actions")]
    Empty,
    #[error("postcondition for `{atom}` in action `{action}` must be propositional, got `{formula}`")]
    ModalPost {
        action: ActionId,
        atom: Atom,
        formula: Formula,
    },
    #[error("action `{0}` is not executable at the current point")]
    NotExecutable(ActionId),
    #[error("action models to merge disagree on the agent set")]
    AgentSetMismatch,
    #[error("value `{value}` is not in the domain of `{var}`")]
    UnknownDomainValue { var: String, value: String },
    #[error("assignment map for `{var}` must cover its whole domain")]
    PartialAssignmentMap { var: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type DynResult<T> = Result<T, DynamicsError>;

/// A finite set of actions with preconditions, sparse postconditions, owner
/// tags, and per-agent relations. An absent postcondition entry for
/// `(action, p)` leaves `p` unchanged; inserting the explicit identity
/// `p := p` is normalized away, so an announcement-like action has an empty
/// postcondition map.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ActionModel {
    pre: BTreeMap<ActionId, Formula>,
    post: BTreeMap<ActionId, BTreeMap<Atom, Formula>>,
    owner: BTreeMap<ActionId, OwnerTag>,
    relations: BTreeMap<Agent, BTreeMap<ActionId, BTreeSet<ActionId>>>,
}

impl ActionModel {
    /// Creates an action model over the given agent set with no actions yet.
    pub fn new(agents: impl IntoIterator<Item = Agent>) -> Self {
        ActionModel {
            pre: BTreeMap::new(),
            post: BTreeMap::new(),
            owner: BTreeMap::new(),
            relations: agents.into_iter().map(|a| (a, BTreeMap::new())).collect(),
        }
    }

    pub fn add_action(&mut self, id: ActionId, pre: Formula, owner: OwnerTag) -> DynResult<()> {
        if self.pre.contains_key(&id) {
            return Err(DynamicsError::DuplicateAction(id));
        }
        self.pre.insert(id.clone(), pre);
        self.post.insert(id.clone(), BTreeMap::new());
        self.owner.insert(id, owner);
        Ok(())
    }

    /// Records `atom := formula` for `action`. The formula must be
    /// propositional; the identity assignment `p := p` is dropped rather
    /// than stored.
    pub fn set_post(&mut self, action: &ActionId, atom: Atom, formula: Formula) -> DynResult<()> {
        if !self.pre.contains_key(action) {
            return Err(DynamicsError::UnknownAction(action.clone()));
        }
        if !formula.is_propositional() {
            return Err(DynamicsError::ModalPost {
                action: action.clone(),
                atom,
                formula,
            });
        }
        let map = self.post.get_mut(action).expect("post map exists for every action");
        if formula == Formula::atom(atom.as_str()) {
            map.remove(&atom);
        } else {
            map.insert(atom, formula);
        }
        Ok(())
    }

    /// Replaces the precondition of an already-declared action.
    pub fn replace_pre(&mut self, id: &ActionId, pre: Formula) -> DynResult<()> {
        match self.pre.get_mut(id) {
            Some(slot) => {
                *slot = pre;
                Ok(())
            }
            None => Err(DynamicsError::UnknownAction(id.clone())),
        }
    }

    pub fn add_edge(&mut self, agent: &Agent, from: &ActionId, to: &ActionId) -> DynResult<()> {
        if !self.pre.contains_key(from) {
            return Err(DynamicsError::UnknownAction(from.clone()));
        }
        if !self.pre.contains_key(to) {
            return Err(DynamicsError::UnknownAction(to.clone()));
        }
        let rel = self
            .relations
            .get_mut(agent)
            .ok_or_else(|| DynamicsError::UnknownAgent(agent.clone()))?;
        rel.entry(from.clone()).or_default().insert(to.clone());
        Ok(())
    }

    /// Adds a complete block of edges over `class` for `agent`.
    pub fn add_obs_class(&mut self, agent: &Agent, class: &[ActionId]) -> DynResult<()> {
        for from in class {
            for to in class {
                self.add_edge(agent, from, to)?;
            }
        }
        Ok(())
    }

    /// Completes every agent's relation with the missing reflexive pairs.
    pub fn close_reflexive(&mut self) {
        let ids: Vec<ActionId> = self.pre.keys().cloned().collect();
        for rel in self.relations.values_mut() {
            for id in &ids {
                rel.entry(id.clone()).or_default().insert(id.clone());
            }
        }
    }

    pub fn action_count(&self) -> usize {
        self.pre.len()
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionId> {
        self.pre.keys()
    }

    pub fn has_action(&self, id: &ActionId) -> bool {
        self.pre.contains_key(id)
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.relations.keys()
    }

    pub fn has_agent(&self, a: &Agent) -> bool {
        self.relations.contains_key(a)
    }

    pub fn pre(&self, id: &ActionId) -> DynResult<&Formula> {
        self.pre
            .get(id)
            .ok_or_else(|| DynamicsError::UnknownAction(id.clone()))
    }

    /// The stored (already normalized) postcondition entries of `id`.
    pub fn post_map(&self, id: &ActionId) -> DynResult<&BTreeMap<Atom, Formula>> {
        self.post
            .get(id)
            .ok_or_else(|| DynamicsError::UnknownAction(id.clone()))
    }

    pub fn owner(&self, id: &ActionId) -> DynResult<&OwnerTag> {
        self.owner
            .get(id)
            .ok_or_else(|| DynamicsError::UnknownAction(id.clone()))
    }

    /// Action ids carrying the given owner tag, in sorted order.
    pub fn actions_owned_by(&self, tag: &OwnerTag) -> Vec<ActionId> {
        self.owner
            .iter()
            .filter(|(_, t)| *t == tag)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Every owner tag in use, deduplicated.
    pub fn owner_tags(&self) -> BTreeSet<OwnerTag> {
        self.owner.values().cloned().collect()
    }

    /// Successors of `id` under `agent`'s relation, in sorted order. An
    /// agent of the surrounding problem that this model does not mention is
    /// treated as seeing every action apart (identity relation).
    pub fn successors(&self, agent: &Agent, id: &ActionId) -> DynResult<Vec<ActionId>> {
        if !self.pre.contains_key(id) {
            return Err(DynamicsError::UnknownAction(id.clone()));
        }
        match self.relations.get(agent) {
            Some(rel) => Ok(rel.get(id).map(|s| s.iter().cloned().collect()).unwrap_or_default()),
            None => Ok(vec![id.clone()]),
        }
    }

    /// All related pairs under `agent`, with identity fallback for agents
    /// this model does not mention.
    pub fn edges(&self, agent: &Agent) -> Vec<(ActionId, ActionId)> {
        match self.relations.get(agent) {
            Some(rel) => rel
                .iter()
                .flat_map(|(a, succ)| succ.iter().map(move |b| (a.clone(), b.clone())))
                .collect(),
            None => self.pre.keys().map(|a| (a.clone(), a.clone())).collect(),
        }
    }

    /// Atoms mentioned anywhere in the model: precondition formulas,
    /// postcondition targets, and postcondition formulas.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for f in self.pre.values() {
            f.collect_atoms(&mut out);
        }
        for map in self.post.values() {
            for (atom, f) in map {
                out.insert(atom.clone());
                f.collect_atoms(&mut out);
            }
        }
        out
    }

    /// Whether every agent's relation is exactly the identity on actions,
    /// the defining frame condition of public actions.
    pub fn has_identity_relations(&self) -> bool {
        self.relations.keys().all(|agent| {
            self.pre.keys().all(|id| {
                self.successors(agent, id)
                    .is_ok_and(|s| s.as_slice() == [id.clone()])
            })
        })
    }

    /// Whether no action changes any fact (all postcondition maps empty
    /// after identity normalization).
    pub fn has_no_facts_change(&self) -> bool {
        self.post.values().all(|m| m.is_empty())
    }

    /// Whether every agent's relation is an equivalence relation over the
    /// action set.
    pub fn is_s5(&self) -> bool {
        for rel in self.relations.values() {
            for id in self.pre.keys() {
                let succ = rel.get(id);
                if !succ.is_some_and(|s| s.contains(id)) {
                    return false;
                }
                for b in succ.into_iter().flatten() {
                    if !rel.get(b).is_some_and(|s| s.contains(id)) {
                        return false;
                    }
                    for c in rel.get(b).into_iter().flatten() {
                        if !rel.get(id).is_some_and(|s| s.contains(c)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Whether `agent` relates `a` and `b` (identity fallback for unknown
    /// agents, as in [`ActionModel::successors`]).
    pub fn related(&self, agent: &Agent, a: &ActionId, b: &ActionId) -> bool {
        match self.relations.get(agent) {
            Some(rel) => rel.get(a).is_some_and(|s| s.contains(b)),
            None => a == b,
        }
    }
}

/// An action model with a designated actual action.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PointedActionModel {
    model: ActionModel,
    point: ActionId,
}

impl PointedActionModel {
    pub fn new(model: ActionModel, point: ActionId) -> DynResult<Self> {
        if model.pre.is_empty() {
            return Err(DynamicsError::Empty);
        }
        if !model.has_action(&point) {
            return Err(DynamicsError::UnknownAction(point));
        }
        Ok(PointedActionModel { model, point })
    }

    pub fn model(&self) -> &ActionModel {
        &self.model
    }

    pub fn point(&self) -> &ActionId {
        &self.point
    }
}

/// Whether `alpha`'s precondition holds at the point of `m`.
pub fn executable(m: &PointedModel, a: &ActionModel, alpha: &ActionId) -> DynResult<bool> {
    let pre = a.pre(alpha)?;
    Ok(m.eval(pre)?)
}

/// The valuation after executing `alpha` on the bare valuation `v`:
/// mentioned atoms take the truth value of their postcondition formula under
/// `v`, unmentioned atoms keep their old value.
pub fn post_valuation(
    v: &BTreeSet<Atom>,
    a: &ActionModel,
    alpha: &ActionId,
) -> DynResult<BTreeSet<Atom>> {
    let map = a.post_map(alpha)?;
    let mut out: BTreeSet<Atom> = v.iter().filter(|p| !map.contains_key(p)).cloned().collect();
    for (atom, formula) in map {
        let value = formula.eval_propositional(v).ok_or_else(|| DynamicsError::ModalPost {
            action: alpha.clone(),
            atom: atom.clone(),
            formula: formula.clone(),
        })?;
        if value {
            out.insert(atom.clone());
        }
    }
    Ok(out)
}

/// [`post_valuation`] applied to the valuation of a world of `m`.
pub fn post_valuation_at(
    m: &EpistemicModel,
    w: &WorldId,
    a: &ActionModel,
    alpha: &ActionId,
) -> DynResult<BTreeSet<Atom>> {
    post_valuation(m.world_atoms(w)?, a, alpha)
}

/// Name of the product world built from `w` and `alpha`. Splitting at the
/// last `*` recovers the pair, because action ids never contain `*`.
pub fn product_world_name(w: &WorldId, alpha: &ActionId) -> WorldId {
    WorldId::new(format!("{w}*{alpha}"))
}

/// The full product of `m` and `a`: one world per executable
/// (world, action) pair, valuations rewritten by the postconditions,
/// relations pointwise. The result carries `m`'s agent set; agents missing
/// from `a` see every action apart. A product with no executable pair comes
/// back with zero worlds, which no pointed model can be built from, so
/// point-level callers must guard with [`executable`] first.
pub fn product(m: &EpistemicModel, a: &ActionModel) -> DynResult<EpistemicModel> {
    let mut out = EpistemicModel::new(m.agents().cloned());
    let mut pairs: Vec<(WorldId, ActionId, WorldId)> = Vec::new();
    for w in m.worlds() {
        for alpha in a.actions() {
            if m.eval(w, a.pre(alpha)?)? {
                let name = product_world_name(w, alpha);
                out.add_world(name.clone(), post_valuation_at(m, w, a, alpha)?)?;
                pairs.push((w.clone(), alpha.clone(), name));
            }
        }
    }
    let index: BTreeMap<(WorldId, ActionId), WorldId> = pairs
        .iter()
        .map(|(w, alpha, name)| ((w.clone(), alpha.clone()), name.clone()))
        .collect();
    for agent in m.agents() {
        for (w, w2) in m.edges(agent)? {
            for (alpha, alpha2) in a.edges(agent) {
                let from = index.get(&(w.clone(), alpha.clone()));
                let to = index.get(&(w2.clone(), alpha2.clone()));
                if let (Some(from), Some(to)) = (from, to) {
                    out.add_edge(agent, from, to)?;
                }
            }
        }
    }
    Ok(out)
}

/// Executes `alpha` at the point of `m`: product, re-point at the updated
/// point, then cut away unreachable worlds and contract bisimilar ones.
pub fn apply_pointed(m: &PointedModel, a: &ActionModel, alpha: &ActionId) -> DynResult<PointedModel> {
    Ok(bisim_contract(&apply_pointed_no_contract(m, a, alpha)?))
}

/// [`apply_pointed`] without the final bisimulation contraction. The result
/// is still restricted to the point's connected component.
pub fn apply_pointed_no_contract(
    m: &PointedModel,
    a: &ActionModel,
    alpha: &ActionId,
) -> DynResult<PointedModel> {
    if !executable(m, a, alpha)? {
        return Err(DynamicsError::NotExecutable(alpha.clone()));
    }
    let prod = product(m.model(), a)?;
    let pointed = PointedModel::new(prod, product_world_name(m.point(), alpha))?;
    Ok(restrict_to_component(&pointed))
}

/// Disjoint union of several pointed action models over a shared agent set.
/// Actions are renamed apart with a per-input prefix; the second component
/// maps each input position to the renamed id of its point.
pub fn merge_pointed_actions(
    inputs: &[PointedActionModel],
) -> DynResult<(ActionModel, Vec<ActionId>)> {
    let Some(first) = inputs.first() else {
        return Err(DynamicsError::Empty);
    };
    let agents: BTreeSet<Agent> = first.model().agents().cloned().collect();
    for input in inputs {
        let theirs: BTreeSet<Agent> = input.model().agents().cloned().collect();
        if theirs != agents {
            return Err(DynamicsError::AgentSetMismatch);
        }
    }
    let mut out = ActionModel::new(agents.iter().cloned());
    let mut points = Vec::with_capacity(inputs.len());
    for (i, input) in inputs.iter().enumerate() {
        let rename = |id: &ActionId| ActionId::new(format!("m{i}_{id}"));
        let model = input.model();
        for id in model.actions() {
            out.add_action(
                rename(id),
                model.pre(id)?.clone(),
                model.owner(id)?.clone(),
            )?;
        }
        for id in model.actions() {
            for (atom, f) in model.post_map(id)? {
                out.set_post(&rename(id), atom.clone(), f.clone())?;
            }
        }
        for agent in &agents {
            for (from, to) in model.edges(agent) {
                out.add_edge(agent, &rename(&from), &rename(&to))?;
            }
        }
        points.push(rename(input.point()));
    }
    Ok((out, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::canonical_key;

    fn agent(s: &str) -> Agent {
        Agent::new(s)
    }

    fn aid(s: &str) -> ActionId {
        ActionId::new(s)
    }

    fn wid(s: &str) -> WorldId {
        WorldId::new(s)
    }

    /// Two worlds `w`:{p} and `u`:{}, indistinguishable to both agents.
    fn base_model() -> PointedModel {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p")]).unwrap();
        m.add_world(wid("u"), []).unwrap();
        m.add_obs_class(&agent("a"), &[wid("w"), wid("u")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("w"), wid("u")]).unwrap();
        PointedModel::new(m, wid("w")).unwrap()
    }

    /// Two actions: `alpha` (pre p, sets p false) and `alphap` (pre true,
    /// no change); agent a tells them apart, agent b does not.
    fn base_actions() -> ActionModel {
        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(aid("alpha"), Formula::atom("p"), OwnerTag::Controller)
            .unwrap();
        a.add_action(aid("alphap"), Formula::True, OwnerTag::Controller)
            .unwrap();
        a.set_post(&aid("alpha"), Atom::new("p"), Formula::False)
            .unwrap();
        a.add_obs_class(&agent("a"), &[aid("alpha")]).unwrap();
        a.add_obs_class(&agent("a"), &[aid("alphap")]).unwrap();
        a.add_obs_class(&agent("b"), &[aid("alpha"), aid("alphap")])
            .unwrap();
        a
    }

    #[test]
    fn executability_is_precondition_truth() {
        let pm = base_model();
        let a = base_actions();
        assert!(executable(&pm, &a, &aid("alpha")).unwrap());
        assert!(executable(&pm, &a, &aid("alphap")).unwrap());
        let at_u = pm.repoint(wid("u")).unwrap();
        assert!(!executable(&at_u, &a, &aid("alpha")).unwrap());
        assert!(matches!(
            executable(&pm, &a, &aid("missing")),
            Err(DynamicsError::UnknownAction(_))
        ));
    }

    #[test]
    fn post_valuation_examples() {
        let a = base_actions();
        let v: BTreeSet<Atom> = [Atom::new("p")].into();
        assert!(post_valuation(&v, &a, &aid("alpha")).unwrap().is_empty());
        let v2: BTreeSet<Atom> = [Atom::new("p"), Atom::new("q")].into();
        assert_eq!(post_valuation(&v2, &a, &aid("alphap")).unwrap(), v2);

        let mut swap = ActionModel::new([agent("a")]);
        swap.add_action(aid("s"), Formula::True, OwnerTag::Controller)
            .unwrap();
        swap.set_post(&aid("s"), Atom::new("p"), Formula::atom("q"))
            .unwrap();
        swap.set_post(&aid("s"), Atom::new("q"), Formula::False)
            .unwrap();
        let v3: BTreeSet<Atom> = [Atom::new("q")].into();
        let expected: BTreeSet<Atom> = [Atom::new("p")].into();
        assert_eq!(post_valuation(&v3, &swap, &aid("s")).unwrap(), expected);
    }

    #[test]
    fn identity_post_is_normalized_away() {
        let mut a = ActionModel::new([agent("a")]);
        a.add_action(aid("x"), Formula::True, OwnerTag::Controller)
            .unwrap();
        a.set_post(&aid("x"), Atom::new("p"), Formula::atom("p"))
            .unwrap();
        assert!(a.post_map(&aid("x")).unwrap().is_empty());
        a.set_post(&aid("x"), Atom::new("p"), Formula::False).unwrap();
        assert_eq!(a.post_map(&aid("x")).unwrap().len(), 1);
        a.set_post(&aid("x"), Atom::new("p"), Formula::atom("p"))
            .unwrap();
        assert!(a.post_map(&aid("x")).unwrap().is_empty());
    }

    #[test]
    fn modal_post_rejected() {
        let mut a = ActionModel::new([agent("a")]);
        a.add_action(aid("x"), Formula::True, OwnerTag::Controller)
            .unwrap();
        let modal = Formula::knows(agent("a"), Formula::atom("p"));
        assert!(matches!(
            a.set_post(&aid("x"), Atom::new("p"), modal),
            Err(DynamicsError::ModalPost { .. })
        ));
    }

    #[test]
    fn product_of_two_world_model_and_learning_action() {
        let pm = base_model();
        let a = base_actions();
        let prod = product(pm.model(), &a).unwrap();
        assert_eq!(prod.world_count(), 3);
        let w_alpha = wid("w*alpha");
        let w_alphap = wid("w*alphap");
        let u_alphap = wid("u*alphap");
        assert!(prod.world_atoms(&w_alpha).unwrap().is_empty());
        assert!(prod.world_atoms(&w_alphap).unwrap().contains(&Atom::new("p")));
        assert!(prod.world_atoms(&u_alphap).unwrap().is_empty());

        let not_p = Formula::not(Formula::atom("p"));
        let ka_not_p = Formula::knows(agent("a"), not_p.clone());
        let kb_p = Formula::knows(agent("b"), Formula::atom("p"));
        let kb_not_p = Formula::knows(agent("b"), not_p);
        assert!(prod.eval(&w_alpha, &ka_not_p).unwrap());
        assert!(!prod.eval(&w_alpha, &kb_p).unwrap());
        assert!(!prod.eval(&w_alpha, &kb_not_p).unwrap());
    }

    #[test]
    fn identity_action_preserves_canonical_key() {
        let pm = base_model();
        let mut id = ActionModel::new([agent("a"), agent("b")]);
        id.add_action(aid("skip"), Formula::True, OwnerTag::Controller)
            .unwrap();
        id.close_reflexive();
        let prod = product(pm.model(), &id).unwrap();
        assert_eq!(prod.world_count(), pm.model().world_count());
        let applied = apply_pointed(&pm, &id, &aid("skip")).unwrap();
        assert_eq!(canonical_key(&applied), canonical_key(&pm));
    }

    #[test]
    fn apply_pointed_learning_action() {
        let pm = base_model();
        let a = base_actions();
        let after = apply_pointed(&pm, &a, &aid("alpha")).unwrap();
        let ka_not_p = Formula::knows(agent("a"), Formula::not(Formula::atom("p")));
        assert!(after.eval(&ka_not_p).unwrap());

        let at_u = pm.repoint(wid("u")).unwrap();
        assert!(matches!(
            apply_pointed(&at_u, &a, &aid("alpha")),
            Err(DynamicsError::NotExecutable(_))
        ));
    }

    #[test]
    fn public_announcement_filters_worlds() {
        let pm = base_model();
        let mut ann = ActionModel::new([agent("a"), agent("b")]);
        ann.add_action(aid("say_p"), Formula::atom("p"), OwnerTag::Controller)
            .unwrap();
        ann.close_reflexive();
        let after = apply_pointed(&pm, &ann, &aid("say_p")).unwrap();
        assert_eq!(after.model().world_count(), 1);
        let p = Formula::atom("p");
        assert!(after.eval(&Formula::knows(agent("a"), p.clone())).unwrap());
        assert!(after.eval(&Formula::knows(agent("b"), p)).unwrap());
    }

    #[test]
    fn empty_product_is_representable_but_not_pointable() {
        let pm = base_model();
        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(aid("never"), Formula::False, OwnerTag::Controller)
            .unwrap();
        a.close_reflexive();
        let prod = product(pm.model(), &a).unwrap();
        assert_eq!(prod.world_count(), 0);
        assert!(matches!(
            apply_pointed(&pm, &a, &aid("never")),
            Err(DynamicsError::NotExecutable(_))
        ));
    }

    #[test]
    fn product_preserves_s5() {
        let pm = base_model();
        let a = base_actions();
        assert!(a.is_s5());
        assert!(product(pm.model(), &a).unwrap().is_s5());
    }

    #[test]
    fn merge_renames_apart_and_tracks_points() {
        let mut one = ActionModel::new([agent("a")]);
        one.add_action(aid("x"), Formula::atom("p"), OwnerTag::Controller)
            .unwrap();
        one.close_reflexive();
        let mut two = ActionModel::new([agent("a")]);
        two.add_action(aid("x"), Formula::True, OwnerTag::Environment)
            .unwrap();
        two.close_reflexive();
        let inputs = [
            PointedActionModel::new(one, aid("x")).unwrap(),
            PointedActionModel::new(two, aid("x")).unwrap(),
        ];
        let (merged, points) = merge_pointed_actions(&inputs).unwrap();
        assert_eq!(merged.action_count(), 2);
        assert_eq!(points.len(), 2);
        assert_ne!(points[0], points[1]);
        assert_eq!(merged.owner(&points[0]).unwrap(), &OwnerTag::Controller);
        assert_eq!(merged.owner(&points[1]).unwrap(), &OwnerTag::Environment);
        assert!(!merged.related(&agent("a"), &points[0], &points[1]));

        let mut other_agents = ActionModel::new([agent("b")]);
        other_agents
            .add_action(aid("x"), Formula::True, OwnerTag::Controller)
            .unwrap();
        let bad = [
            inputs[0].clone(),
            PointedActionModel::new(other_agents, aid("x")).unwrap(),
        ];
        assert!(matches!(
            merge_pointed_actions(&bad),
            Err(DynamicsError::AgentSetMismatch)
        ));
    }

    #[test]
    fn merge_preserves_apply_semantics() {
        let pm = base_model();
        let base = base_actions();
        let inputs = [
            PointedActionModel::new(base.clone(), aid("alpha")).unwrap(),
            PointedActionModel::new(base.clone(), aid("alphap")).unwrap(),
        ];
        let (merged, points) = merge_pointed_actions(&inputs).unwrap();
        for (i, alpha) in [aid("alpha"), aid("alphap")].iter().enumerate() {
            let direct = apply_pointed(&pm, &base, alpha).unwrap();
            let via_merge = apply_pointed(&pm, &merged, &points[i]).unwrap();
            assert_eq!(canonical_key(&direct), canonical_key(&via_merge));
        }
    }
}
