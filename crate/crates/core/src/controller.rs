//! Controller-vs-environment synthesis: which side can force the goal when
//! the controller picks its own actions and the environment answers.
//!
//! Four methods, from most restrictive to most general: a round-bounded
//! alternating search for announcement-only instances, a fixpoint over
//! canonical configurations for public or separable instances, an arena
//! construction with information-set expansion for propositional instances
//! with shallow epistemic goals, and a bounded three-valued search that
//! works on anything but may answer Unknown.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::dynamics::{
    apply_pointed, classify, executable, post_valuation, ActionId, ActionModel, DynamicsError,
    OwnerTag,
};
use crate::game::{
    solve_attractor, DeadlockMode, GameArena, GameError, Player, VertexIx,
};
use crate::logic::{
    canonical_key, Agent, Atom, CanonicalKey, Formula, ModelError, PointedModel,
};

/// Horizon used by the bounded fallback when the caller does not pick one.
pub const DEFAULT_CONTROLLER_HORIZON: usize = 10;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("this method requires {0}")]
    MethodRequires(&'static str),
    #[error("controller synthesis needs every action owned by ctr or env; `{0}` is not")]
    BadOwner(ActionId),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Game(#[from] GameError),
}

pub type CtrlResult<T> = Result<T, ControllerError>;

/// A winning recipe for the controller, in the currency of the method that
/// produced it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ControllerStrategy {
    /// Action per (canonical key, round) pair, from the round-bounded
    /// methods; `bound` is the round at which play stops.
    ByRound {
        bound: usize,
        entries: BTreeMap<(CanonicalKey, usize), ActionId>,
    },
    /// Action per canonical key, round-independent, from the configuration
    /// fixpoint.
    Positional {
        entries: BTreeMap<CanonicalKey, ActionId>,
    },
    /// Successor vertex per arena vertex, for propositional goals.
    ArenaMoves { entries: BTreeMap<String, String> },
    /// Successor vertex per information-set-expanded vertex, for goals with
    /// one level of knowledge.
    ExpandedMoves { entries: BTreeMap<String, String> },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SolveVerdict {
    Yes(ControllerStrategy),
    No,
    Unknown { horizon: usize },
}

impl SolveVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, SolveVerdict::Yes(_))
    }
}

/// Method selector for [`solve_controller`].
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ControllerMethod {
    /// Most specific applicable method, falling back to bounded search.
    #[default]
    Auto,
    /// Round-bounded alternating search; announcements only.
    Announcements,
    /// Configuration-graph fixpoint; public or separable actions.
    Public,
    /// Arena + information sets; propositional actions.
    Arena,
    /// Bounded three-valued search; no restrictions, may answer Unknown.
    Bounded,
}

fn split_owned(a: &ActionModel) -> CtrlResult<(Vec<ActionId>, Vec<ActionId>)> {
    let mut ctr = Vec::new();
    let mut env = Vec::new();
    for id in a.actions() {
        match a.owner(id)? {
            OwnerTag::Controller => ctr.push(id.clone()),
            OwnerTag::Environment => env.push(id.clone()),
            OwnerTag::Agent(_) => return Err(ControllerError::BadOwner(id.clone())),
        }
    }
    Ok((ctr, env))
}

/// Dispatches to the chosen method. `Auto` tries, in order: announcements,
/// configuration fixpoint (public or separable actions), arena (all
/// preconditions and effects propositional), bounded search.
pub fn solve_controller(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    method: ControllerMethod,
    mode: DeadlockMode,
    horizon: Option<usize>,
) -> CtrlResult<SolveVerdict> {
    match method {
        ControllerMethod::Announcements => solve_controller_announcements(m, a, goal, mode),
        ControllerMethod::Public => solve_controller_public(m, a, goal, mode),
        ControllerMethod::Arena => solve_controller_propositional(m, a, goal, mode, horizon),
        ControllerMethod::Bounded => solve_controller_bounded(
            m,
            a,
            goal,
            mode,
            horizon.unwrap_or(DEFAULT_CONTROLLER_HORIZON),
        ),
        ControllerMethod::Auto => {
            if a.has_identity_relations() && a.has_no_facts_change() {
                solve_controller_announcements(m, a, goal, mode)
            } else if a.has_identity_relations() || classify(a, None).separable.is_true() {
                solve_controller_public(m, a, goal, mode)
            } else if classify(a, None).propositional {
                solve_controller_propositional(m, a, goal, mode, horizon)
            } else {
                solve_controller_bounded(
                    m,
                    a,
                    goal,
                    mode,
                    horizon.unwrap_or(DEFAULT_CONTROLLER_HORIZON),
                )
            }
        }
    }
}

/// Alternating search for announcement-only instances: the goal is checked
/// before every move, the controller picks at even rounds, the environment
/// at odd ones, a side with no executable action loses (under
/// [`DeadlockMode::Lose`]), and play stops after as many rounds as the
/// initial model has worlds. Complete for this action class, so the answer
/// is never Unknown.
pub fn solve_controller_announcements(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    mode: DeadlockMode,
) -> CtrlResult<SolveVerdict> {
    if !(a.has_identity_relations() && a.has_no_facts_change()) {
        return Err(ControllerError::MethodRequires(
            "every action to be a public announcement",
        ));
    }
    let (ctr, env) = split_owned(a)?;
    let mut search = RoundSearch {
        a,
        goal,
        ctr,
        env,
        bound: m.model().world_count(),
        mode,
        horizon_cuts: false,
        memo: BTreeMap::new(),
        entries: BTreeMap::new(),
    };
    match search.win(m, 0)? {
        Round::Win => Ok(SolveVerdict::Yes(ControllerStrategy::ByRound {
            bound: search.bound,
            entries: search.entries,
        })),
        Round::Lose => Ok(SolveVerdict::No),
        Round::Cut => unreachable!("announcement search does not cut"),
    }
}

/// Bounded three-valued alternating search over pointed models. Sound on
/// both definite answers: Yes ships a replayable strategy, and No is only
/// reported when every play ends within the horizon. Unknown means the
/// horizon truncated some branch that could still matter.
pub fn solve_controller_bounded(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    mode: DeadlockMode,
    horizon: usize,
) -> CtrlResult<SolveVerdict> {
    let (ctr, env) = split_owned(a)?;
    let mut search = RoundSearch {
        a,
        goal,
        ctr,
        env,
        bound: horizon,
        mode,
        horizon_cuts: true,
        memo: BTreeMap::new(),
        entries: BTreeMap::new(),
    };
    match search.win(m, 0)? {
        Round::Win => Ok(SolveVerdict::Yes(ControllerStrategy::ByRound {
            bound: horizon,
            entries: search.entries,
        })),
        Round::Lose => Ok(SolveVerdict::No),
        Round::Cut => Ok(SolveVerdict::Unknown { horizon }),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Round {
    Win,
    Lose,
    /// The round limit interfered; the true value is unknown.
    Cut,
}

struct RoundSearch<'s> {
    a: &'s ActionModel,
    goal: &'s Formula,
    ctr: Vec<ActionId>,
    env: Vec<ActionId>,
    bound: usize,
    mode: DeadlockMode,
    /// Whether hitting `bound` is a truncation (`Cut`) rather than a loss.
    horizon_cuts: bool,
    memo: BTreeMap<(CanonicalKey, usize), Round>,
    entries: BTreeMap<(CanonicalKey, usize), ActionId>,
}

impl RoundSearch<'_> {
    fn win(&mut self, pm: &PointedModel, i: usize) -> CtrlResult<Round> {
        if pm.eval(self.goal)? {
            return Ok(Round::Win);
        }
        if i >= self.bound {
            return Ok(if self.horizon_cuts { Round::Cut } else { Round::Lose });
        }
        let key = canonical_key(pm);
        if let Some(&cached) = self.memo.get(&(key.clone(), i)) {
            return Ok(cached);
        }
        let controller_turn = i % 2 == 0;
        let moves = if controller_turn {
            self.ctr.clone()
        } else {
            self.env.clone()
        };
        let mut result = if controller_turn {
            Round::Lose
        } else {
            Round::Win
        };
        let mut any_move = false;
        for alpha in &moves {
            if !executable(pm, self.a, alpha)? {
                continue;
            }
            any_move = true;
            let outcome = self.win(&apply_pointed(pm, self.a, alpha)?, i + 1)?;
            if controller_turn {
                match outcome {
                    Round::Win => {
                        self.entries.insert((key.clone(), i), alpha.clone());
                        result = Round::Win;
                        break;
                    }
                    Round::Cut => result = Round::Cut,
                    Round::Lose => {}
                }
            } else {
                match outcome {
                    Round::Lose => {
                        result = Round::Lose;
                        break;
                    }
                    Round::Cut => {
                        if result == Round::Win {
                            result = Round::Cut;
                        }
                    }
                    Round::Win => {}
                }
            }
        }
        if !any_move {
            result = if controller_turn || self.mode == DeadlockMode::Lose {
                Round::Lose
            } else {
                Round::Win
            };
        }
        self.memo.insert((key, i), result);
        Ok(result)
    }
}

/// Fixpoint method: explores the finite graph of (canonical configuration,
/// side-to-move) pairs and solves the reachability game on it. Requires
/// actions that keep the configuration space finite: identity relations, or
/// preconditions that are pairwise unsatisfiable within each connected
/// component of the action relations.
pub fn solve_controller_public(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    mode: DeadlockMode,
) -> CtrlResult<SolveVerdict> {
    if !(a.has_identity_relations() || classify(a, None).separable.is_true()) {
        return Err(ControllerError::MethodRequires(
            "public actions or pairwise-unsatisfiable component preconditions",
        ));
    }
    let (ctr, env) = split_owned(a)?;

    let mut g = GameArena::new();
    let mut reps: Vec<PointedModel> = Vec::new();
    let mut keys: Vec<CanonicalKey> = Vec::new();
    let mut index: BTreeMap<(CanonicalKey, bool), VertexIx> = BTreeMap::new();
    let mut labels: BTreeMap<(VertexIx, VertexIx), ActionId> = BTreeMap::new();
    let mut goal_at: Vec<bool> = Vec::new();

    let materialize = |g: &mut GameArena,
                           reps: &mut Vec<PointedModel>,
                           keys: &mut Vec<CanonicalKey>,
                           goal_at: &mut Vec<bool>,
                           index: &mut BTreeMap<(CanonicalKey, bool), VertexIx>,
                           pm: PointedModel,
                           controller_turn: bool|
     -> CtrlResult<(VertexIx, bool)> {
        let key = canonical_key(&pm);
        if let Some(&ix) = index.get(&(key.clone(), controller_turn)) {
            return Ok((ix, false));
        }
        let owner = if controller_turn { Player::Zero } else { Player::One };
        let name = format!("{}#{}", key.digest(), u8::from(!controller_turn));
        let ix = g.add_vertex(name, owner, [])?;
        goal_at.push(pm.eval(goal)?);
        reps.push(pm);
        keys.push(key.clone());
        index.insert((key, controller_turn), ix);
        Ok((ix, true))
    };

    let (start, _) = materialize(
        &mut g,
        &mut reps,
        &mut keys,
        &mut goal_at,
        &mut index,
        m.clone(),
        true,
    )?;
    g.set_initial(start)?;
    let mut queue: VecDeque<VertexIx> = [start].into();
    while let Some(v) = queue.pop_front() {
        let controller_turn = g.owner(v) == Player::Zero;
        let moves = if controller_turn { &ctr } else { &env };
        for alpha in moves {
            let rep = &reps[v];
            if !executable(rep, a, alpha)? {
                continue;
            }
            let child = apply_pointed(rep, a, alpha)?;
            let (u, fresh) = materialize(
                &mut g,
                &mut reps,
                &mut keys,
                &mut goal_at,
                &mut index,
                child,
                !controller_turn,
            )?;
            g.add_edge(v, u)?;
            labels.entry((v, u)).or_insert_with(|| alpha.clone());
            if fresh {
                queue.push_back(u);
            }
        }
    }

    let att = solve_attractor(&g, |v| goal_at[v], mode);
    if !att.winning.contains(&start) {
        return Ok(SolveVerdict::No);
    }
    let mut entries = BTreeMap::new();
    for (&v, &u) in &att.strategy {
        if g.owner(v) == Player::Zero {
            entries.insert(keys[v].clone(), labels[&(v, u)].clone());
        }
    }
    Ok(SolveVerdict::Yes(ControllerStrategy::Positional { entries }))
}

fn propositional_truth(f: &Formula, atoms: &BTreeSet<Atom>) -> bool {
    f.eval_propositional(atoms)
        .expect("formula checked propositional")
}

/// Unfolds a propositional instance into a finite arena: the model's worlds
/// plus vertices (action, valuation, side-to-move) for every combination
/// reachable by play. The controller owns the worlds and the side-0
/// vertices. Indistinguishability carries over from the model on worlds and
/// from the action relations on (action, valuation, side) vertices, which
/// are related exactly when their actions are.
pub fn build_arena(m: &PointedModel, a: &ActionModel) -> CtrlResult<GameArena> {
    if !classify(a, None).propositional {
        return Err(ControllerError::MethodRequires(
            "propositional pre- and postconditions",
        ));
    }
    let (ctr, env) = split_owned(a)?;
    let model = m.model();

    let mut g = GameArena::new();
    let mut world_ix: BTreeMap<&crate::logic::WorldId, VertexIx> = BTreeMap::new();
    for w in model.worlds() {
        let ix = g.add_vertex(w.as_str(), Player::Zero, model.world_atoms(w)?.clone())?;
        world_ix.insert(w, ix);
    }
    g.set_initial(world_ix[m.point()])?;
    for agent in model.agents() {
        for (x, y) in model.edges(agent)? {
            g.add_relation(agent, world_ix[&x], world_ix[&y])?;
        }
    }

    type TupleKey = (ActionId, BTreeSet<Atom>, bool);
    let mut tuple_ix: BTreeMap<TupleKey, VertexIx> = BTreeMap::new();
    let mut queue: VecDeque<TupleKey> = VecDeque::new();
    let materialize = |g: &mut GameArena,
                           tuple_ix: &mut BTreeMap<TupleKey, VertexIx>,
                           queue: &mut VecDeque<TupleKey>,
                           key: TupleKey|
     -> CtrlResult<VertexIx> {
        if let Some(&ix) = tuple_ix.get(&key) {
            return Ok(ix);
        }
        let (alpha, v, env_turn) = &key;
        let atoms: Vec<&str> = v.iter().map(Atom::as_str).collect();
        let name = format!(
            "({alpha}, {{{}}}, {})",
            atoms.join(","),
            u8::from(*env_turn)
        );
        let owner = if *env_turn { Player::One } else { Player::Zero };
        let ix = g.add_vertex(name, owner, v.iter().cloned())?;
        tuple_ix.insert(key.clone(), ix);
        queue.push_back(key);
        Ok(ix)
    };

    for w in model.worlds() {
        let atoms = model.world_atoms(w)?;
        for alpha in &ctr {
            if !propositional_truth(a.pre(alpha)?, atoms) {
                continue;
            }
            let next = post_valuation(atoms, a, alpha)?;
            let to = materialize(&mut g, &mut tuple_ix, &mut queue, (alpha.clone(), next, true))?;
            g.add_edge(world_ix[w], to)?;
        }
    }
    while let Some(key) = queue.pop_front() {
        let from = tuple_ix[&key];
        let (_, v, env_turn) = key;
        let moves = if env_turn { &env } else { &ctr };
        for alpha in moves {
            if !propositional_truth(a.pre(alpha)?, &v) {
                continue;
            }
            let next = post_valuation(&v, a, alpha)?;
            let to = materialize(
                &mut g,
                &mut tuple_ix,
                &mut queue,
                (alpha.clone(), next, !env_turn),
            )?;
            g.add_edge(from, to)?;
        }
    }

    let tuples: Vec<(TupleKey, VertexIx)> = tuple_ix.into_iter().collect();
    for agent in a.agents() {
        for ((alpha, _, side), ix) in &tuples {
            for ((beta, _, other_side), jx) in &tuples {
                if side == other_side && a.related(agent, alpha, beta) {
                    g.add_relation(agent, *ix, *jx)?;
                }
            }
        }
    }
    Ok(g)
}

/// Rebuilds an arena whose vertices carry, per agent named in the goal, the
/// set of base vertices that agent cannot rule out after the play so far:
/// initially the agent's relation successors of the initial vertex, then on
/// each move to `u` the relation successors of `u` that are move-successors
/// of some previously possible vertex. Returns the expanded arena and the
/// set of its vertices where the goal holds, with `Knows`/`Poss` read over
/// the tracked sets.
pub fn expand_knowledge_depth1(
    g: &GameArena,
    goal: &Formula,
) -> CtrlResult<(GameArena, BTreeSet<VertexIx>)> {
    if goal.modal_depth() > 1 {
        return Err(ControllerError::MethodRequires(
            "a goal with at most one level of knowledge",
        ));
    }
    let tracked = goal.agents();
    if tracked.is_empty() {
        let winning = (0..g.vertex_count())
            .filter(|&v| propositional_truth(goal, g.atoms(v)))
            .collect();
        return Ok((g.clone(), winning));
    }

    type Sets = BTreeMap<Agent, BTreeSet<VertexIx>>;
    let init = g.initial()?;
    let init_sets: Sets = tracked
        .iter()
        .map(|b| (b.clone(), g.related(b, init)))
        .collect();

    let mut out = GameArena::new();
    let mut index: BTreeMap<(VertexIx, Sets), VertexIx> = BTreeMap::new();
    let mut states: Vec<(VertexIx, Sets)> = Vec::new();
    let mut winning = BTreeSet::new();

    let materialize = |out: &mut GameArena,
                           index: &mut BTreeMap<(VertexIx, Sets), VertexIx>,
                           states: &mut Vec<(VertexIx, Sets)>,
                           winning: &mut BTreeSet<VertexIx>,
                           v: VertexIx,
                           sets: Sets|
     -> CtrlResult<(VertexIx, bool)> {
        if let Some(&ix) = index.get(&(v, sets.clone())) {
            return Ok((ix, false));
        }
        let mut name = g.name(v).to_string();
        for (b, set) in &sets {
            let members: Vec<&str> = set.iter().map(|&u| g.name(u)).collect();
            name.push_str(&format!(" | {b}:{{{}}}", members.join(",")));
        }
        let ix = out.add_vertex(name, g.owner(v), g.atoms(v).iter().cloned())?;
        if eval_depth1(goal, g, v, &sets) {
            winning.insert(ix);
        }
        index.insert((v, sets.clone()), ix);
        states.push((v, sets));
        Ok((ix, true))
    };

    let (start, _) = materialize(
        &mut out,
        &mut index,
        &mut states,
        &mut winning,
        init,
        init_sets,
    )?;
    out.set_initial(start)?;
    let mut queue: VecDeque<VertexIx> = [start].into();
    while let Some(ix) = queue.pop_front() {
        let (v, sets) = states[ix].clone();
        for &u in g.successors(v) {
            let next_sets: Sets = sets
                .iter()
                .map(|(b, set)| {
                    let refined = g
                        .related(b, u)
                        .into_iter()
                        .filter(|cand| set.iter().any(|&x| g.successors(x).contains(cand)))
                        .collect();
                    (b.clone(), refined)
                })
                .collect();
            let (jx, fresh) = materialize(
                &mut out,
                &mut index,
                &mut states,
                &mut winning,
                u,
                next_sets,
            )?;
            out.add_edge(ix, jx)?;
            if fresh {
                queue.push_back(jx);
            }
        }
    }
    Ok((out, winning))
}

fn eval_depth1(f: &Formula, g: &GameArena, v: VertexIx, sets: &BTreeMap<Agent, BTreeSet<VertexIx>>) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(p) => g.atoms(v).contains(p),
        Formula::Not(inner) => !eval_depth1(inner, g, v, sets),
        Formula::And(l, r) => eval_depth1(l, g, v, sets) && eval_depth1(r, g, v, sets),
        Formula::Or(l, r) => eval_depth1(l, g, v, sets) || eval_depth1(r, g, v, sets),
        Formula::Implies(l, r) => !eval_depth1(l, g, v, sets) || eval_depth1(r, g, v, sets),
        Formula::Knows(b, inner) => sets[b]
            .iter()
            .all(|&u| propositional_truth(inner, g.atoms(u))),
        Formula::Poss(b, inner) => sets[b]
            .iter()
            .any(|&u| propositional_truth(inner, g.atoms(u))),
    }
}

/// Exact solver for propositional instances: arena plus information-set
/// expansion when the goal has at most one level of knowledge, bounded
/// search otherwise.
pub fn solve_controller_propositional(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    mode: DeadlockMode,
    horizon: Option<usize>,
) -> CtrlResult<SolveVerdict> {
    if goal.modal_depth() > 1 {
        return solve_controller_bounded(
            m,
            a,
            goal,
            mode,
            horizon.unwrap_or(DEFAULT_CONTROLLER_HORIZON),
        );
    }
    let arena = build_arena(m, a)?;
    let (expanded, winning) = expand_knowledge_depth1(&arena, goal)?;
    let att = solve_attractor(&expanded, |v| winning.contains(&v), mode);
    if !att.initial_wins(&expanded)? {
        return Ok(SolveVerdict::No);
    }
    let entries: BTreeMap<String, String> = att
        .strategy
        .iter()
        .filter(|&(&v, _)| expanded.owner(v) == Player::Zero)
        .map(|(&v, &u)| (expanded.name(v).to_string(), expanded.name(u).to_string()))
        .collect();
    Ok(SolveVerdict::Yes(if goal.agents().is_empty() {
        ControllerStrategy::ArenaMoves { entries }
    } else {
        ControllerStrategy::ExpandedMoves { entries }
    }))
}

/// Outcome of replaying a strategy against every environment behavior.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum VerifyOutcome {
    Verified,
    Failed { reason: String, trace: Vec<String> },
    Exhausted { fuel: usize },
}

impl VerifyOutcome {
    pub fn is_verified(&self) -> bool {
        matches!(self, VerifyOutcome::Verified)
    }

    fn fail(reason: impl Into<String>, trace: &[String]) -> Self {
        VerifyOutcome::Failed {
            reason: reason.into(),
            trace: trace.to_vec(),
        }
    }
}

/// Replays every play that follows `s` (the environment unconstrained) and
/// checks that each one reaches the goal: key-indexed strategies are
/// replayed on pointed models, arena strategies on the rebuilt (and, for
/// expanded strategies, re-expanded) arena. Revisiting a configuration
/// along one play without having reached the goal is an infinite escape and
/// fails. `fuel` caps the number of explored states.
pub fn verify_controller_strategy(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    s: &ControllerStrategy,
    mode: DeadlockMode,
    fuel: usize,
) -> CtrlResult<VerifyOutcome> {
    match s {
        ControllerStrategy::ByRound { bound, entries } => {
            verify_by_round(m, a, goal, *bound, entries, mode, fuel)
        }
        ControllerStrategy::Positional { entries } => {
            verify_positional(m, a, goal, entries, mode, fuel)
        }
        ControllerStrategy::ArenaMoves { entries } | ControllerStrategy::ExpandedMoves { entries } => {
            let arena = build_arena(m, a)?;
            let (expanded, winning) = expand_knowledge_depth1(&arena, goal)?;
            Ok(verify_on_arena(&expanded, &winning, entries, mode, fuel)?)
        }
    }
}

fn verify_by_round(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    bound: usize,
    entries: &BTreeMap<(CanonicalKey, usize), ActionId>,
    mode: DeadlockMode,
    fuel: usize,
) -> CtrlResult<VerifyOutcome> {
    let (ctr, env) = split_owned(a)?;
    let mut queue: VecDeque<(PointedModel, usize, Vec<String>)> =
        [(m.clone(), 0, Vec::new())].into();
    let mut visited: BTreeSet<(CanonicalKey, usize)> = BTreeSet::new();
    let mut spent = 0usize;
    while let Some((pm, i, trace)) = queue.pop_front() {
        spent += 1;
        if spent > fuel {
            return Ok(VerifyOutcome::Exhausted { fuel });
        }
        if pm.eval(goal)? {
            continue;
        }
        if i >= bound {
            return Ok(VerifyOutcome::fail(
                "round bound reached without the goal",
                &trace,
            ));
        }
        let key = canonical_key(&pm);
        if !visited.insert((key.clone(), i)) {
            continue;
        }
        if i % 2 == 0 {
            let Some(alpha) = entries.get(&(key.clone(), i)) else {
                return Ok(VerifyOutcome::fail(
                    format!("no entry for {} at round {i}", key.digest()),
                    &trace,
                ));
            };
            if !ctr.contains(alpha) {
                return Ok(VerifyOutcome::fail(
                    format!("entry `{alpha}` is not a controller action"),
                    &trace,
                ));
            }
            if !executable(&pm, a, alpha)? {
                return Ok(VerifyOutcome::fail(
                    format!("prescribed action `{alpha}` is not executable at round {i}"),
                    &trace,
                ));
            }
            let mut next_trace = trace.clone();
            next_trace.push(format!("round {i}: ctr plays {alpha}"));
            queue.push_back((apply_pointed(&pm, a, alpha)?, i + 1, next_trace));
        } else {
            let mut any = false;
            for alpha in &env {
                if !executable(&pm, a, alpha)? {
                    continue;
                }
                any = true;
                let mut next_trace = trace.clone();
                next_trace.push(format!("round {i}: env plays {alpha}"));
                queue.push_back((apply_pointed(&pm, a, alpha)?, i + 1, next_trace));
            }
            if !any && mode == DeadlockMode::Lose {
                return Ok(VerifyOutcome::fail(
                    "environment deadlock counts as a loss",
                    &trace,
                ));
            }
        }
    }
    Ok(VerifyOutcome::Verified)
}

fn verify_positional(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    entries: &BTreeMap<CanonicalKey, ActionId>,
    mode: DeadlockMode,
    fuel: usize,
) -> CtrlResult<VerifyOutcome> {
    let (ctr, env) = split_owned(a)?;

    enum Frame {
        Enter(PointedModel, bool, Vec<String>),
        Leave(CanonicalKey, bool),
    }
    let mut stack = vec![Frame::Enter(m.clone(), true, Vec::new())];
    let mut on_path: BTreeSet<(CanonicalKey, bool)> = BTreeSet::new();
    let mut done: BTreeSet<(CanonicalKey, bool)> = BTreeSet::new();
    let mut spent = 0usize;

    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Leave(key, turn) => {
                on_path.remove(&(key.clone(), turn));
                done.insert((key, turn));
            }
            Frame::Enter(pm, controller_turn, trace) => {
                spent += 1;
                if spent > fuel {
                    return Ok(VerifyOutcome::Exhausted { fuel });
                }
                if pm.eval(goal)? {
                    continue;
                }
                let key = canonical_key(&pm);
                let state = (key.clone(), controller_turn);
                if done.contains(&state) {
                    continue;
                }
                if on_path.contains(&state) {
                    return Ok(VerifyOutcome::fail(
                        format!(
                            "play can revisit {} without reaching the goal",
                            key.digest()
                        ),
                        &trace,
                    ));
                }
                on_path.insert(state.clone());
                stack.push(Frame::Leave(key.clone(), controller_turn));
                if controller_turn {
                    let Some(alpha) = entries.get(&key) else {
                        return Ok(VerifyOutcome::fail(
                            format!("no entry for {}", key.digest()),
                            &trace,
                        ));
                    };
                    if !ctr.contains(alpha) {
                        return Ok(VerifyOutcome::fail(
                            format!("entry `{alpha}` is not a controller action"),
                            &trace,
                        ));
                    }
                    if !executable(&pm, a, alpha)? {
                        return Ok(VerifyOutcome::fail(
                            format!("prescribed action `{alpha}` is not executable"),
                            &trace,
                        ));
                    }
                    let mut next_trace = trace.clone();
                    next_trace.push(format!("ctr plays {alpha}"));
                    stack.push(Frame::Enter(apply_pointed(&pm, a, alpha)?, false, next_trace));
                } else {
                    let mut any = false;
                    for alpha in &env {
                        if !executable(&pm, a, alpha)? {
                            continue;
                        }
                        any = true;
                        let mut next_trace = trace.clone();
                        next_trace.push(format!("env plays {alpha}"));
                        stack.push(Frame::Enter(
                            apply_pointed(&pm, a, alpha)?,
                            true,
                            next_trace,
                        ));
                    }
                    if !any && mode == DeadlockMode::Lose {
                        return Ok(VerifyOutcome::fail(
                            "environment deadlock counts as a loss",
                            &trace,
                        ));
                    }
                }
            }
        }
    }
    Ok(VerifyOutcome::Verified)
}

fn verify_on_arena(
    g: &GameArena,
    winning: &BTreeSet<VertexIx>,
    entries: &BTreeMap<String, String>,
    mode: DeadlockMode,
    fuel: usize,
) -> CtrlResult<VerifyOutcome> {
    enum Frame {
        Enter(VertexIx, Vec<String>),
        Leave(VertexIx),
    }
    let mut stack = vec![Frame::Enter(g.initial()?, Vec::new())];
    let mut on_path: BTreeSet<VertexIx> = BTreeSet::new();
    let mut done: BTreeSet<VertexIx> = BTreeSet::new();
    let mut spent = 0usize;

    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Leave(v) => {
                on_path.remove(&v);
                done.insert(v);
            }
            Frame::Enter(v, trace) => {
                spent += 1;
                if spent > fuel {
                    return Ok(VerifyOutcome::Exhausted { fuel });
                }
                if winning.contains(&v) {
                    continue;
                }
                if done.contains(&v) {
                    continue;
                }
                if on_path.contains(&v) {
                    return Ok(VerifyOutcome::fail(
                        format!("play can revisit `{}` without reaching the goal", g.name(v)),
                        &trace,
                    ));
                }
                on_path.insert(v);
                stack.push(Frame::Leave(v));
                match g.owner(v) {
                    Player::Zero => {
                        let Some(target) = entries.get(g.name(v)) else {
                            return Ok(VerifyOutcome::fail(
                                format!("no entry for vertex `{}`", g.name(v)),
                                &trace,
                            ));
                        };
                        let u = match g.lookup(target) {
                            Ok(u) => u,
                            Err(_) => {
                                return Ok(VerifyOutcome::fail(
                                    format!("entry points at unknown vertex `{target}`"),
                                    &trace,
                                ))
                            }
                        };
                        if !g.successors(v).contains(&u) {
                            return Ok(VerifyOutcome::fail(
                                format!(
                                    "prescribed move `{}` -> `{target}` is not an edge",
                                    g.name(v)
                                ),
                                &trace,
                            ));
                        }
                        let mut next_trace = trace.clone();
                        next_trace.push(format!("P0 moves to {target}"));
                        stack.push(Frame::Enter(u, next_trace));
                    }
                    Player::One => {
                        if g.successors(v).is_empty() && mode == DeadlockMode::Lose {
                            return Ok(VerifyOutcome::fail(
                                "opponent deadlock counts as a loss",
                                &trace,
                            ));
                        }
                        for &u in g.successors(v) {
                            let mut next_trace = trace.clone();
                            next_trace.push(format!("P1 moves to {}", g.name(u)));
                            stack.push(Frame::Enter(u, next_trace));
                        }
                    }
                }
            }
        }
    }
    Ok(VerifyOutcome::Verified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{EpistemicModel, WorldId};

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

    /// Announcements: ctr can say p, env can say nothing new.
    fn announcement_actions() -> ActionModel {
        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(aid("say_p"), Formula::atom("p"), OwnerTag::Controller)
            .unwrap();
        a.add_action(aid("say_true"), Formula::True, OwnerTag::Environment)
            .unwrap();
        a.close_reflexive();
        a
    }

    fn b_knows_p() -> Formula {
        Formula::knows(agent("b"), Formula::atom("p"))
    }

    #[test]
    fn announcements_goal_true_wins_before_any_move() {
        let v = solve_controller_announcements(
            &base_model(),
            &announcement_actions(),
            &Formula::True,
            DeadlockMode::Lose,
        )
        .unwrap();
        match v {
            SolveVerdict::Yes(ControllerStrategy::ByRound { entries, .. }) => {
                assert!(entries.is_empty())
            }
            other => panic!("expected yes with empty strategy, got {other:?}"),
        }
    }

    #[test]
    fn announcing_p_teaches_b() {
        let m = base_model();
        let a = announcement_actions();
        let v = solve_controller_announcements(&m, &a, &b_knows_p(), DeadlockMode::Lose).unwrap();
        let SolveVerdict::Yes(strategy) = &v else {
            panic!("expected yes, got {v:?}");
        };
        let outcome =
            verify_controller_strategy(&m, &a, &b_knows_p(), strategy, DeadlockMode::Lose, 10_000)
                .unwrap();
        assert!(outcome.is_verified(), "{outcome:?}");
    }

    #[test]
    fn truthful_announcements_cannot_teach_a_falsehood() {
        let goal = Formula::knows(agent("b"), Formula::not(Formula::atom("p")));
        let v = solve_controller_announcements(
            &base_model(),
            &announcement_actions(),
            &goal,
            DeadlockMode::Lose,
        )
        .unwrap();
        assert_eq!(v, SolveVerdict::No);
    }

    #[test]
    fn announcement_method_rejects_fact_changing_actions() {
        let mut a = announcement_actions();
        a.set_post(&aid("say_p"), Atom::new("p"), Formula::False)
            .unwrap();
        let r = solve_controller_announcements(
            &base_model(),
            &a,
            &Formula::True,
            DeadlockMode::Lose,
        );
        assert!(matches!(r, Err(ControllerError::MethodRequires(_))));
    }

    #[test]
    fn fixpoint_method_agrees_on_announcement_instances() {
        let m = base_model();
        let a = announcement_actions();
        for goal in [
            b_knows_p(),
            Formula::knows(agent("b"), Formula::not(Formula::atom("p"))),
            Formula::True,
        ] {
            let fig2 =
                solve_controller_announcements(&m, &a, &goal, DeadlockMode::Lose).unwrap();
            let fig3 = solve_controller_public(&m, &a, &goal, DeadlockMode::Lose).unwrap();
            assert_eq!(fig2.is_yes(), fig3.is_yes(), "goal {goal}");
            if let SolveVerdict::Yes(s) = &fig3 {
                let outcome =
                    verify_controller_strategy(&m, &a, &goal, s, DeadlockMode::Lose, 10_000)
                        .unwrap();
                assert!(outcome.is_verified(), "goal {goal}: {outcome:?}");
            }
        }
    }

    /// One world, a ctr action that sets p, an env reply that needs !p, and
    /// an unreachable goal: whether the environment's deadlock after the
    /// first move loses or closes the play depends on the mode.
    #[test]
    fn deadlock_mode_flips_the_fixpoint_verdict() {
        let mut m = EpistemicModel::new([agent("a")]);
        m.add_world(wid("w"), []).unwrap();
        m.close_reflexive();
        let pm = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a")]);
        a.add_action(aid("go"), Formula::True, OwnerTag::Controller)
            .unwrap();
        a.set_post(&aid("go"), Atom::new("p"), Formula::True).unwrap();
        a.add_action(aid("reply"), Formula::not(Formula::atom("p")), OwnerTag::Environment)
            .unwrap();
        a.close_reflexive();

        let goal = Formula::atom("q");
        let lose = solve_controller_public(&pm, &a, &goal, DeadlockMode::Lose).unwrap();
        assert_eq!(lose, SolveVerdict::No);
        let vacuous = solve_controller_public(&pm, &a, &goal, DeadlockMode::Vacuous).unwrap();
        assert!(vacuous.is_yes());
    }

    #[test]
    fn arena_matches_the_hand_construction() {
        let mut m = EpistemicModel::new([agent("a")]);
        m.add_world(wid("w"), []).unwrap();
        m.close_reflexive();
        let pm = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a")]);
        a.add_action(aid("ac"), Formula::True, OwnerTag::Controller)
            .unwrap();
        a.set_post(&aid("ac"), Atom::new("p"), Formula::True).unwrap();
        a.add_action(aid("ae"), Formula::atom("p"), OwnerTag::Environment)
            .unwrap();
        a.close_reflexive();

        let g = build_arena(&pm, &a).unwrap();
        assert_eq!(g.vertex_count(), 3);
        let w = g.lookup("w").unwrap();
        let t1 = g.lookup("(ac, {p}, 1)").unwrap();
        let t0 = g.lookup("(ae, {p}, 0)").unwrap();
        assert_eq!(g.owner(w), Player::Zero);
        assert_eq!(g.owner(t1), Player::One);
        assert_eq!(g.owner(t0), Player::Zero);
        assert_eq!(*g.successors(w), [t1].into());
        assert_eq!(*g.successors(t1), [t0].into());
        assert_eq!(*g.successors(t0), [t1].into());
    }

    #[test]
    fn arena_with_no_actions_is_just_the_worlds() {
        let pm = base_model();
        let a = ActionModel::new([agent("a"), agent("b")]);
        let g = build_arena(&pm, &a).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert!(g.successors(g.initial().unwrap()).is_empty());
    }

    #[test]
    fn arena_requires_propositional_preconditions() {
        let pm = base_model();
        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(aid("probe"), b_knows_p(), OwnerTag::Controller)
            .unwrap();
        a.close_reflexive();
        assert!(matches!(
            build_arena(&pm, &a),
            Err(ControllerError::MethodRequires(_))
        ));
    }

    #[test]
    fn propositional_goal_skips_expansion() {
        let pm = base_model();
        let a = ActionModel::new([agent("a"), agent("b")]);
        let g = build_arena(&pm, &a).unwrap();
        let (expanded, winning) = expand_knowledge_depth1(&g, &Formula::atom("p")).unwrap();
        assert_eq!(expanded.vertex_count(), g.vertex_count());
        assert_eq!(winning, [g.lookup("w").unwrap()].into());
    }

    #[test]
    fn merged_information_set_blocks_knowledge() {
        let mut g = GameArena::new();
        let v0 = g.add_vertex("v0", Player::Zero, [Atom::new("p")]).unwrap();
        let v1 = g.add_vertex("v1", Player::Zero, []).unwrap();
        for (x, y) in [(v0, v0), (v0, v1), (v1, v0), (v1, v1)] {
            g.add_relation(&agent("b"), x, y).unwrap();
        }
        g.set_initial(v0).unwrap();
        let (expanded, winning) = expand_knowledge_depth1(&g, &b_knows_p()).unwrap();
        assert!(!winning.contains(&expanded.initial().unwrap()));
    }

    /// A hidden fact change that `b` cannot distinguish from anything else
    /// still convinces `b` here, because `b`'s action relation is the
    /// identity: after the only move, `b`'s information set pins `p`.
    #[test]
    fn depth1_expansion_certifies_knowledge_goals() {
        let mut m = EpistemicModel::new([agent("b")]);
        m.add_world(wid("w"), []).unwrap();
        m.close_reflexive();
        let pm = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("b")]);
        a.add_action(aid("set_p"), Formula::True, OwnerTag::Controller)
            .unwrap();
        a.set_post(&aid("set_p"), Atom::new("p"), Formula::True)
            .unwrap();
        a.add_action(aid("blocked"), Formula::False, OwnerTag::Environment)
            .unwrap();
        a.close_reflexive();

        let v =
            solve_controller_propositional(&pm, &a, &b_knows_p(), DeadlockMode::Lose, None)
                .unwrap();
        let SolveVerdict::Yes(s) = &v else {
            panic!("expected yes, got {v:?}");
        };
        assert!(matches!(s, ControllerStrategy::ExpandedMoves { .. }));
        let outcome =
            verify_controller_strategy(&pm, &a, &b_knows_p(), s, DeadlockMode::Lose, 10_000)
                .unwrap();
        assert!(outcome.is_verified(), "{outcome:?}");
    }

    #[test]
    fn bounded_search_cuts_at_horizon_zero() {
        let goal = Formula::atom("q");
        let v = solve_controller_bounded(
            &base_model(),
            &announcement_actions(),
            &goal,
            DeadlockMode::Lose,
            0,
        )
        .unwrap();
        assert_eq!(v, SolveVerdict::Unknown { horizon: 0 });
    }

    #[test]
    fn auto_dispatch_picks_a_complete_method() {
        let m = base_model();
        let a = announcement_actions();
        let v = solve_controller(&m, &a, &b_knows_p(), ControllerMethod::Auto, DeadlockMode::Lose, None)
            .unwrap();
        assert!(matches!(
            v,
            SolveVerdict::Yes(ControllerStrategy::ByRound { .. })
        ));
    }

    #[test]
    fn tampered_strategy_fails_verification() {
        let m = base_model();
        let a = announcement_actions();
        let goal = b_knows_p();
        let v = solve_controller_announcements(&m, &a, &goal, DeadlockMode::Lose).unwrap();
        let SolveVerdict::Yes(ControllerStrategy::ByRound { bound, mut entries }) = v else {
            panic!("expected a round strategy");
        };
        for action in entries.values_mut() {
            *action = aid("say_true");
        }
        let tampered = ControllerStrategy::ByRound { bound, entries };
        let outcome =
            verify_controller_strategy(&m, &a, &goal, &tampered, DeadlockMode::Lose, 10_000)
                .unwrap();
        match outcome {
            VerifyOutcome::Failed { .. } => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn agent_owned_actions_are_rejected() {
        let m = base_model();
        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(aid("x"), Formula::True, OwnerTag::Agent(agent("a")))
            .unwrap();
        a.close_reflexive();
        let r = solve_controller_announcements(&m, &a, &Formula::True, DeadlockMode::Lose);
        assert!(matches!(r, Err(ControllerError::BadOwner(_))));
    }
}
