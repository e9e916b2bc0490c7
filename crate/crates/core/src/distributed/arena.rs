//! Finite multiplayer arena for instances with propositional
//! preconditions, and the relation-containment check that identifies
//! hierarchical instances. Solving the arena is left to external tools;
//! this module only builds and inspects it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::dynamics::{classify, post_valuation, ActionId, ActionModel, FiniteDomainVar};
use crate::logic::{Agent, Atom, PointedModel};

use super::{DistResult, DistributedError, TeamSplit};

pub type MultiVertexIx = usize;

#[derive(Debug)]
struct MultiVertex {
    name: String,
    owner: Agent,
    atoms: BTreeSet<Atom>,
}

/// Turn-based arena whose vertices are owned by agents rather than by two
/// abstract players. Worlds of the model come first, then every `(action,
/// valuation)` pair reachable from them; ownership is read off the turn
/// atoms of each vertex's valuation.
#[derive(Debug)]
pub struct MultiArena {
    vertices: Vec<MultiVertex>,
    by_name: BTreeMap<String, MultiVertexIx>,
    initial: MultiVertexIx,
    edges: Vec<BTreeSet<MultiVertexIx>>,
    relations: BTreeMap<Agent, Vec<BTreeSet<MultiVertexIx>>>,
}

impl MultiArena {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn initial(&self) -> MultiVertexIx {
        self.initial
    }

    pub fn name(&self, v: MultiVertexIx) -> &str {
        &self.vertices[v].name
    }

    pub fn owner(&self, v: MultiVertexIx) -> &Agent {
        &self.vertices[v].owner
    }

    pub fn atoms(&self, v: MultiVertexIx) -> &BTreeSet<Atom> {
        &self.vertices[v].atoms
    }

    pub fn lookup(&self, name: &str) -> Option<MultiVertexIx> {
        self.by_name.get(name).copied()
    }

    pub fn successors(&self, v: MultiVertexIx) -> &BTreeSet<MultiVertexIx> {
        &self.edges[v]
    }

    /// Vertices the agent cannot tell apart from `v`, `v` excluded unless
    /// the relation is reflexive there.
    pub fn related(&self, agent: &Agent, v: MultiVertexIx) -> BTreeSet<MultiVertexIx> {
        self.relations
            .get(agent)
            .map(|rows| rows[v].clone())
            .unwrap_or_default()
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.relations.keys()
    }
}

fn tuple_name(alpha: &ActionId, v: &BTreeSet<Atom>) -> String {
    let atoms = v.iter().map(Atom::as_str).collect::<Vec<_>>().join(",");
    format!("({alpha}, {{{atoms}}})")
}

fn owner_of(turn: &FiniteDomainVar, name: &str, v: &BTreeSet<Atom>) -> DistResult<Agent> {
    match turn.read(v) {
        Some(value) => Ok(Agent::new(value)),
        None => Err(DistributedError::AmbiguousOwner {
            vertex: name.to_string(),
            values: turn.holding(v).join(", "),
        }),
    }
}

/// Builds the arena for an instance with propositional preconditions:
/// every world of the model becomes a vertex, execution steps go to
/// `(action, valuation)` vertices, and two tuple vertices are related for
/// an agent exactly when their actions are. The vertex count is capped by
/// the world count plus one vertex per action and reachable valuation.
pub fn build_multiplayer_arena(
    m: &PointedModel,
    a: &ActionModel,
    turn: &FiniteDomainVar,
) -> DistResult<MultiArena> {
    if !classify(a, None).propositional {
        return Err(DistributedError::MethodRequires(
            "propositional preconditions on every action",
        ));
    }

    let model = m.model();
    let mut vertices: Vec<MultiVertex> = Vec::new();
    let mut by_name: BTreeMap<String, MultiVertexIx> = BTreeMap::new();
    let mut tuple_of: Vec<Option<(ActionId, BTreeSet<Atom>)>> = Vec::new();

    for w in model.worlds() {
        let atoms = model.world_atoms(w)?.clone();
        let name = w.to_string();
        let owner = owner_of(turn, &name, &atoms)?;
        by_name.insert(name.clone(), vertices.len());
        vertices.push(MultiVertex { name, owner, atoms });
        tuple_of.push(None);
    }
    let world_vertices = vertices.len();

    let mut edges: Vec<BTreeSet<MultiVertexIx>> = vec![BTreeSet::new(); world_vertices];
    let mut queue: VecDeque<MultiVertexIx> = VecDeque::new();

    let actions: Vec<ActionId> = a.actions().cloned().collect();
    let reach_tuple = |alpha: &ActionId,
                           v: BTreeSet<Atom>,
                           vertices: &mut Vec<MultiVertex>,
                           by_name: &mut BTreeMap<String, MultiVertexIx>,
                           tuple_of: &mut Vec<Option<(ActionId, BTreeSet<Atom>)>>,
                           edges: &mut Vec<BTreeSet<MultiVertexIx>>,
                           queue: &mut VecDeque<MultiVertexIx>|
     -> DistResult<MultiVertexIx> {
        let name = tuple_name(alpha, &v);
        if let Some(&ix) = by_name.get(&name) {
            return Ok(ix);
        }
        let owner = owner_of(turn, &name, &v)?;
        let ix = vertices.len();
        by_name.insert(name.clone(), ix);
        vertices.push(MultiVertex {
            name,
            owner,
            atoms: v.clone(),
        });
        tuple_of.push(Some((alpha.clone(), v)));
        edges.push(BTreeSet::new());
        queue.push_back(ix);
        Ok(ix)
    };

    for w_ix in 0..world_vertices {
        for alpha in &actions {
            let pre = a.pre(alpha)?;
            let holds = pre
                .eval_propositional(&vertices[w_ix].atoms)
                .expect("propositional preconditions evaluate on valuations");
            if !holds {
                continue;
            }
            let next = post_valuation(&vertices[w_ix].atoms, a, alpha)?;
            let target = reach_tuple(
                alpha,
                next,
                &mut vertices,
                &mut by_name,
                &mut tuple_of,
                &mut edges,
                &mut queue,
            )?;
            edges[w_ix].insert(target);
        }
    }
    while let Some(ix) = queue.pop_front() {
        let atoms = vertices[ix].atoms.clone();
        for alpha in &actions {
            let pre = a.pre(alpha)?;
            let holds = pre
                .eval_propositional(&atoms)
                .expect("propositional preconditions evaluate on valuations");
            if !holds {
                continue;
            }
            let next = post_valuation(&atoms, a, alpha)?;
            let target = reach_tuple(
                alpha,
                next,
                &mut vertices,
                &mut by_name,
                &mut tuple_of,
                &mut edges,
                &mut queue,
            )?;
            edges[ix].insert(target);
        }
    }

    let total = vertices.len();
    let mut relations: BTreeMap<Agent, Vec<BTreeSet<MultiVertexIx>>> = BTreeMap::new();
    let model_agents: Vec<Agent> = model.agents().cloned().collect();
    for b in &model_agents {
        let mut rows = vec![BTreeSet::new(); total];
        for (from, to) in model.edges(b)? {
            let f = by_name[from.as_str()];
            let t = by_name[to.as_str()];
            rows[f].insert(t);
        }
        for i in world_vertices..total {
            let (alpha, _) = tuple_of[i].as_ref().expect("tuple vertex");
            for j in world_vertices..total {
                let (beta, _) = tuple_of[j].as_ref().expect("tuple vertex");
                if a.related(b, alpha, beta) {
                    rows[i].insert(j);
                }
            }
        }
        relations.insert(b.clone(), rows);
    }

    let initial = by_name[m.point().as_str()];
    Ok(MultiArena {
        vertices,
        by_name,
        initial,
        edges,
        relations,
    })
}

/// Verdict of the hierarchy check: either a total order of the
/// existential team in which each agent's observational power refines the
/// next one's, or a pair of agents whose powers are incomparable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Hierarchy {
    Ordered(Vec<Agent>),
    Incomparable(Agent, Agent),
}

impl Hierarchy {
    pub fn is_ordered(&self) -> bool {
        matches!(self, Hierarchy::Ordered(_))
    }
}

/// Whether everything `x` confuses, `y` confuses too, on worlds and on
/// actions alike.
fn refines(m: &PointedModel, a: &ActionModel, x: &Agent, y: &Agent) -> DistResult<bool> {
    for (from, to) in m.model().edges(x)? {
        if !m.model().successors(y, &from)?.iter().any(|w| *w == to) {
            return Ok(false);
        }
    }
    for (from, to) in a.edges(x) {
        if !a.related(y, &from, &to) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Orders the existential team from best informed to worst, when the
/// containments between their relations allow it. Ties pick the
/// lexicographically least agent; a singleton team is trivially ordered.
pub fn hierarchy(m: &PointedModel, a: &ActionModel, split: &TeamSplit) -> DistResult<Hierarchy> {
    let team: Vec<Agent> = split.existential().iter().cloned().collect();
    let mut leq: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    for (i, x) in team.iter().enumerate() {
        for (j, y) in team.iter().enumerate() {
            let ok = if i == j { true } else { refines(m, a, x, y)? };
            leq.insert((i, j), ok);
        }
    }

    let mut remaining: Vec<usize> = (0..team.len()).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let minimal = remaining
            .iter()
            .copied()
            .find(|&i| remaining.iter().all(|&j| leq[&(i, j)]));
        match minimal {
            Some(i) => {
                order.push(team[i].clone());
                remaining.retain(|&j| j != i);
            }
            None => {
                for (p, &i) in remaining.iter().enumerate() {
                    for &j in &remaining[p + 1..] {
                        if !leq[&(i, j)] && !leq[&(j, i)] {
                            return Ok(Hierarchy::Incomparable(
                                team[i].clone(),
                                team[j].clone(),
                            ));
                        }
                    }
                }
                let (i, j) = (remaining[0], remaining[1]);
                return Ok(Hierarchy::Incomparable(team[i].clone(), team[j].clone()));
            }
        }
    }
    Ok(Hierarchy::Ordered(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fdvar_assign, OwnerTag};
    use crate::logic::{EpistemicModel, Formula};

    fn agent(s: &str) -> Agent {
        Agent::new(s)
    }

    fn wid(s: &str) -> crate::logic::WorldId {
        crate::logic::WorldId::new(s)
    }

    fn aid(s: &str) -> ActionId {
        ActionId::new(s)
    }

    fn turn_var() -> FiniteDomainVar {
        FiniteDomainVar::new("turn", ["x".to_string(), "y".to_string()]).unwrap()
    }

    fn pass_turn(a: &mut ActionModel, alpha: &ActionId, to: &str) {
        for (atom, f) in fdvar_assign(&turn_var(), to).unwrap() {
            a.set_post(alpha, atom, f).unwrap();
        }
    }

    /// `x` may set `p` and yield; `y` can only yield back.
    fn flip_wait() -> (PointedModel, ActionModel) {
        let mut m = EpistemicModel::new([agent("x"), agent("y")]);
        m.add_world(wid("w1"), [Atom::new("turn@x")]).unwrap();
        m.add_world(wid("w2"), [Atom::new("p"), Atom::new("turn@x")])
            .unwrap();
        m.add_obs_class(&agent("x"), &[wid("w1")]).unwrap();
        m.add_obs_class(&agent("x"), &[wid("w2")]).unwrap();
        m.add_obs_class(&agent("y"), &[wid("w1"), wid("w2")]).unwrap();
        let m = PointedModel::new(m, wid("w1")).unwrap();

        let mut a = ActionModel::new([agent("x"), agent("y")]);
        a.add_action(aid("flip"), Formula::atom("turn@x"), OwnerTag::Agent(agent("x")))
            .unwrap();
        a.set_post(&aid("flip"), Atom::new("p"), Formula::True).unwrap();
        pass_turn(&mut a, &aid("flip"), "y");
        a.add_action(aid("wait"), Formula::atom("turn@y"), OwnerTag::Agent(agent("y")))
            .unwrap();
        pass_turn(&mut a, &aid("wait"), "x");
        a.close_reflexive();
        (m, a)
    }

    #[test]
    fn the_arena_holds_worlds_and_reachable_outcomes() {
        let (m, a) = flip_wait();
        let g = build_multiplayer_arena(&m, &a, &turn_var()).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.name(g.initial()), "w1");
        assert_eq!(g.owner(g.initial()), &agent("x"));

        let after_flip = g.lookup("(flip, {p,turn@y})").expect("missing flip outcome");
        assert_eq!(g.owner(after_flip), &agent("y"));
        let after_wait = g.lookup("(wait, {p,turn@x})").expect("missing wait outcome");
        assert_eq!(g.owner(after_wait), &agent("x"));

        assert!(g.successors(g.initial()).contains(&after_flip));
        assert!(g.successors(after_flip).contains(&after_wait));
        assert!(g.successors(after_wait).contains(&after_flip));

        let w2 = g.lookup("w2").unwrap();
        assert!(g.related(&agent("y"), g.initial()).contains(&w2));
        assert!(!g.related(&agent("x"), g.initial()).contains(&w2));
        assert!(g.related(&agent("x"), after_flip).contains(&after_flip));
    }

    #[test]
    fn a_world_without_a_turn_holder_is_rejected() {
        let mut m = EpistemicModel::new([agent("x"), agent("y")]);
        m.add_world(wid("w1"), [Atom::new("p")]).unwrap();
        m.close_reflexive();
        let m = PointedModel::new(m, wid("w1")).unwrap();
        let mut a = ActionModel::new([agent("x"), agent("y")]);
        a.close_reflexive();

        let err = build_multiplayer_arena(&m, &a, &turn_var()).unwrap_err();
        let DistributedError::AmbiguousOwner { vertex, .. } = err else {
            panic!("expected an owner error, got {err}");
        };
        assert_eq!(vertex, "w1");
    }

    #[test]
    fn epistemic_preconditions_are_out_of_scope() {
        let (m, mut a) = flip_wait();
        a.replace_pre(&aid("flip"), Formula::knows(agent("x"), Formula::atom("turn@x")))
            .unwrap();
        let err = build_multiplayer_arena(&m, &a, &turn_var()).unwrap_err();
        assert!(matches!(err, DistributedError::MethodRequires(_)));
    }

    #[test]
    fn sharper_observers_come_first_in_the_hierarchy() {
        let (m, a) = flip_wait();
        let split = TeamSplit::new([agent("x"), agent("y")], [] as [Agent; 0]).unwrap();
        let h = hierarchy(&m, &a, &split).unwrap();
        let Hierarchy::Ordered(order) = h else {
            panic!("expected an ordering, got {h:?}");
        };
        assert_eq!(order, vec![agent("x"), agent("y")]);
    }

    #[test]
    fn overlapping_views_have_no_hierarchy() {
        let mut m = EpistemicModel::new([agent("x"), agent("y")]);
        m.add_world(wid("w1"), [Atom::new("turn@x")]).unwrap();
        m.add_world(wid("w2"), [Atom::new("turn@x")]).unwrap();
        m.add_world(wid("w3"), [Atom::new("turn@x")]).unwrap();
        m.add_obs_class(&agent("x"), &[wid("w1"), wid("w2")]).unwrap();
        m.add_obs_class(&agent("x"), &[wid("w3")]).unwrap();
        m.add_obs_class(&agent("y"), &[wid("w1")]).unwrap();
        m.add_obs_class(&agent("y"), &[wid("w2"), wid("w3")]).unwrap();
        let m = PointedModel::new(m, wid("w1")).unwrap();
        let mut a = ActionModel::new([agent("x"), agent("y")]);
        a.close_reflexive();

        let split = TeamSplit::new([agent("x"), agent("y")], [] as [Agent; 0]).unwrap();
        let h = hierarchy(&m, &a, &split).unwrap();
        let Hierarchy::Incomparable(i, j) = h else {
            panic!("expected incomparable agents, got {h:?}");
        };
        assert_eq!((i, j), (agent("x"), agent("y")));
    }

    #[test]
    fn a_single_agent_is_trivially_ordered() {
        let (m, a) = flip_wait();
        let split = TeamSplit::new([agent("x")], [agent("y")]).unwrap();
        let h = hierarchy(&m, &a, &split).unwrap();
        assert!(h.is_ordered());
    }
}
