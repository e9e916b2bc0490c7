//! Solvers for the distributed reachability game. Both read the mover
//! from the turn atoms at the point. An existential mover picks one of its
//! own actions executable across its whole observation cell, which is what
//! keeps the synthesized strategy uniform; when no action is shared but
//! every cell member leaves exactly one choice open, the position itself
//! forces the move and no instruction is recorded. A universal mover is
//! branched over adversarially.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::controller::VerifyOutcome;
use crate::dynamics::{
    apply_pointed, classify, executable, ActionId, ActionModel, FiniteDomainVar, OwnerTag,
};
use crate::game::{solve_attractor, DeadlockMode, GameArena, Player, VertexIx};
use crate::logic::{canonical_key, Agent, Atom, CanonicalKey, Formula, PointedModel, WorldId};

use super::hypotheses::check_hypotheses;
use super::tree::verify_by_class;
use super::{
    actions_of, information_key, mover_at, observation_cell, validate_teams, DistResult,
    DistVerdict, DistributedError, DistributedStrategy, TeamSplit,
};

/// Whether every action leaves the relations trivial and writes nothing
/// beyond the turn variable, so that executing one only filters worlds and
/// passes the turn.
fn turn_passing_announcements(a: &ActionModel, turn: &FiniteDomainVar) -> DistResult<bool> {
    if !a.has_identity_relations() {
        return Ok(false);
    }
    let turn_atoms: BTreeSet<Atom> = turn.atoms().into_iter().collect();
    for alpha in a.actions() {
        if a.post_map(alpha)?.keys().any(|p| !turn_atoms.contains(p)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Round-bounded solver for instances whose actions only announce and
/// pass the turn. Each executed action can only remove worlds, so plays
/// longer than the initial world count never help and the recursion stops
/// there.
pub fn solve_distributed_announcements(
    m: &PointedModel,
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
    goal: &Formula,
    mode: DeadlockMode,
) -> DistResult<DistVerdict> {
    if !turn_passing_announcements(a, turn)? {
        return Err(DistributedError::MethodRequires(
            "actions that only announce and pass the turn \
             (identity relations, posts confined to turn atoms)",
        ));
    }
    validate_teams(a, split, turn)?;
    check_hypotheses(m, a, turn)?.admissible()?;

    let bound = m.model().world_count();
    let mut search = RoundRecursion {
        a,
        split,
        turn,
        goal,
        mode,
        bound,
        memo: BTreeMap::new(),
        entries: BTreeMap::new(),
    };
    if search.win(m, 0)? {
        Ok(DistVerdict::Yes(DistributedStrategy::ByRound {
            bound,
            entries: search.entries,
        }))
    } else {
        Ok(DistVerdict::No)
    }
}

struct RoundRecursion<'a> {
    a: &'a ActionModel,
    split: &'a TeamSplit,
    turn: &'a FiniteDomainVar,
    goal: &'a Formula,
    mode: DeadlockMode,
    bound: usize,
    memo: BTreeMap<(CanonicalKey, usize), bool>,
    entries: BTreeMap<Agent, BTreeMap<(CanonicalKey, usize), ActionId>>,
}

impl RoundRecursion<'_> {
    fn win(&mut self, pm: &PointedModel, round: usize) -> DistResult<bool> {
        if pm.eval(self.goal)? {
            return Ok(true);
        }
        if round >= self.bound {
            return Ok(false);
        }
        let key = (canonical_key(pm), round);
        if let Some(&won) = self.memo.get(&key) {
            return Ok(won);
        }

        let x = mover_at(pm, self.turn)?;
        let own = actions_of(self.a, &x);
        let won = if self.split.is_existential(&x) {
            let cell = observation_cell(pm, &x)?;
            let mut members = Vec::with_capacity(cell.len());
            for w in &cell {
                let there = pm.repoint(w.clone())?;
                let mut e = Vec::new();
                for alpha in &own {
                    if executable(&there, self.a, alpha)? {
                        e.push(alpha.clone());
                    }
                }
                members.push((there, e));
            }
            let shared: Vec<ActionId> = own
                .iter()
                .filter(|alpha| members.iter().all(|(_, e)| e.contains(alpha)))
                .cloned()
                .collect();
            if !shared.is_empty() {
                let mut choice = None;
                'actions: for alpha in shared {
                    for (there, _) in &members {
                        let child = apply_pointed(there, self.a, &alpha)?;
                        if !self.win(&child, round + 1)? {
                            continue 'actions;
                        }
                    }
                    choice = Some(alpha);
                    break;
                }
                match choice {
                    Some(alpha) => {
                        let ik = information_key(pm, &x)?;
                        self.entries
                            .entry(x)
                            .or_default()
                            .insert((ik, round), alpha);
                        true
                    }
                    None => false,
                }
            } else if members.iter().all(|(_, e)| e.len() == 1) {
                let mut all = true;
                for (there, e) in &members {
                    let child = apply_pointed(there, self.a, &e[0])?;
                    if !self.win(&child, round + 1)? {
                        all = false;
                        break;
                    }
                }
                all
            } else {
                false
            }
        } else {
            let mut any = false;
            let mut all = true;
            for alpha in &own {
                if !executable(pm, self.a, alpha)? {
                    continue;
                }
                any = true;
                let child = apply_pointed(pm, self.a, alpha)?;
                if !self.win(&child, round + 1)? {
                    all = false;
                    break;
                }
            }
            if any {
                all
            } else {
                matches!(self.mode, DeadlockMode::Vacuous)
            }
        };

        self.memo.insert(key, won);
        Ok(won)
    }
}

/// Fixpoint solver for instances whose actions keep the reachable state
/// space finite: public actions, or component preconditions that cannot
/// overlap. Plays may be unboundedly long, so the recursion of the
/// round-bounded solver is replaced by a least fixpoint over an and-or
/// graph of configurations; a play that cycles without the goal loses.
pub fn solve_distributed_public(
    m: &PointedModel,
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
    goal: &Formula,
    mode: DeadlockMode,
) -> DistResult<DistVerdict> {
    if !(a.has_identity_relations() || classify(a, None).separable.is_true()) {
        return Err(DistributedError::MethodRequires(
            "public actions or pairwise-unsatisfiable component preconditions",
        ));
    }
    validate_teams(a, split, turn)?;
    check_hypotheses(m, a, turn)?.admissible()?;

    let mut g = GameArena::new();
    let mut index: BTreeMap<CanonicalKey, VertexIx> = BTreeMap::new();
    let mut reps: BTreeMap<VertexIx, PointedModel> = BTreeMap::new();
    let mut cfg_mover: BTreeMap<VertexIx, Agent> = BTreeMap::new();
    let mut goal_set: BTreeSet<VertexIx> = BTreeSet::new();
    let mut choice_action: BTreeMap<VertexIx, ActionId> = BTreeMap::new();
    let mut queue: VecDeque<VertexIx> = VecDeque::new();

    let add_cfg = |pm: PointedModel,
                   g: &mut GameArena,
                   index: &mut BTreeMap<CanonicalKey, VertexIx>,
                   reps: &mut BTreeMap<VertexIx, PointedModel>,
                   cfg_mover: &mut BTreeMap<VertexIx, Agent>,
                   goal_set: &mut BTreeSet<VertexIx>,
                   queue: &mut VecDeque<VertexIx>|
     -> DistResult<VertexIx> {
        let key = canonical_key(&pm);
        if let Some(&ix) = index.get(&key) {
            return Ok(ix);
        }
        let atoms = pm.model().world_atoms(pm.point())?.clone();
        let reached_goal = pm.eval(goal)?;
        let owner = if reached_goal {
            Player::Zero
        } else {
            let x = mover_at(&pm, turn)?;
            let side = if split.is_existential(&x) {
                Player::Zero
            } else {
                Player::One
            };
            cfg_mover.insert(g.vertex_count(), x);
            side
        };
        let ix = g.add_vertex(key.digest(), owner, atoms)?;
        index.insert(key, ix);
        reps.insert(ix, pm);
        if reached_goal {
            goal_set.insert(ix);
        } else {
            queue.push_back(ix);
        }
        Ok(ix)
    };

    let root = add_cfg(
        m.clone(),
        &mut g,
        &mut index,
        &mut reps,
        &mut cfg_mover,
        &mut goal_set,
        &mut queue,
    )?;

    while let Some(v) = queue.pop_front() {
        let pm = reps[&v].clone();
        let x = cfg_mover[&v].clone();
        let own = actions_of(a, &x);
        if split.is_existential(&x) {
            let cell = observation_cell(&pm, &x)?;
            let mut members = Vec::with_capacity(cell.len());
            for w in &cell {
                let there = pm.repoint(w.clone())?;
                let mut e = Vec::new();
                for alpha in &own {
                    if executable(&there, a, alpha)? {
                        e.push(alpha.clone());
                    }
                }
                members.push((there, e));
            }
            let shared: Vec<ActionId> = own
                .iter()
                .filter(|alpha| members.iter().all(|(_, e)| e.contains(alpha)))
                .cloned()
                .collect();
            for alpha in &shared {
                let name = format!("{}>{}", canonical_key(&pm).digest(), alpha);
                let cix = g.add_vertex(name, Player::One, BTreeSet::new())?;
                choice_action.insert(cix, alpha.clone());
                g.add_edge(v, cix)?;
                for (there, _) in &members {
                    let u = add_cfg(
                        apply_pointed(there, a, alpha)?,
                        &mut g,
                        &mut index,
                        &mut reps,
                        &mut cfg_mover,
                        &mut goal_set,
                        &mut queue,
                    )?;
                    g.add_edge(cix, u)?;
                }
            }
            if shared.is_empty() && members.iter().all(|(_, e)| e.len() == 1) {
                let name = format!("{}>!", canonical_key(&pm).digest());
                let cix = g.add_vertex(name, Player::One, BTreeSet::new())?;
                g.add_edge(v, cix)?;
                for (there, e) in &members {
                    let u = add_cfg(
                        apply_pointed(there, a, &e[0])?,
                        &mut g,
                        &mut index,
                        &mut reps,
                        &mut cfg_mover,
                        &mut goal_set,
                        &mut queue,
                    )?;
                    g.add_edge(cix, u)?;
                }
            }
        } else {
            for alpha in &own {
                if !executable(&pm, a, alpha)? {
                    continue;
                }
                let u = add_cfg(
                    apply_pointed(&pm, a, alpha)?,
                    &mut g,
                    &mut index,
                    &mut reps,
                    &mut cfg_mover,
                    &mut goal_set,
                    &mut queue,
                )?;
                g.add_edge(v, u)?;
            }
        }
    }

    let attractor = solve_attractor(&g, |v| goal_set.contains(&v), mode);
    if !attractor.winning.contains(&root) {
        return Ok(DistVerdict::No);
    }

    let mut entries: BTreeMap<Agent, BTreeMap<CanonicalKey, ActionId>> = BTreeMap::new();
    for (v, x) in &cfg_mover {
        if !split.is_existential(x) || !attractor.winning.contains(v) {
            continue;
        }
        let Some(succ) = attractor.strategy.get(v) else {
            continue;
        };
        let Some(alpha) = choice_action.get(succ) else {
            continue;
        };
        let ik = information_key(&reps[v], x)?;
        entries.entry(x.clone()).or_default().insert(ik, alpha.clone());
    }
    Ok(DistVerdict::Yes(DistributedStrategy::Positional { entries }))
}

/// Replays every play consistent with `s`: existential movers follow
/// their instruction wherever their observation cell allows the play to
/// be, universal movers branch over all executable actions. Verification
/// fails on a missing or inapplicable instruction, on a deadlock under
/// [`DeadlockMode::Lose`], and on any play that exhausts its budget
/// without the goal.
#[allow(clippy::too_many_arguments)]
pub fn verify_distributed_strategy(
    m: &PointedModel,
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
    goal: &Formula,
    s: &DistributedStrategy,
    mode: DeadlockMode,
    fuel: usize,
) -> DistResult<VerifyOutcome> {
    match s {
        DistributedStrategy::ByRound { bound, entries } => {
            verify_by_round(m, a, split, turn, goal, *bound, entries, mode, fuel)
        }
        DistributedStrategy::Positional { entries } => {
            verify_positional(m, a, split, turn, goal, entries, mode, fuel)
        }
        DistributedStrategy::ByClass { horizon, entries } => {
            verify_by_class(m, a, split, turn, goal, *horizon, entries, mode, fuel)
        }
    }
}

/// The move each cell member is pinned to when the position forces the
/// mover's hand: no own action is executable across the whole cell, but
/// every member leaves exactly one open. Such positions carry no strategy
/// entry; the mover plays whatever its actual world admits.
fn forced_moves(
    pm: &PointedModel,
    a: &ActionModel,
    x: &Agent,
    cell: &[WorldId],
) -> DistResult<Option<Vec<(WorldId, PointedModel, ActionId)>>> {
    let own = actions_of(a, x);
    let mut members = Vec::with_capacity(cell.len());
    for w in cell {
        let there = pm.repoint(w.clone())?;
        let mut e = Vec::new();
        for alpha in &own {
            if executable(&there, a, alpha)? {
                e.push(alpha.clone());
            }
        }
        members.push((w.clone(), there, e));
    }
    let any_shared = own
        .iter()
        .any(|alpha| members.iter().all(|(_, _, e)| e.contains(alpha)));
    if any_shared || !members.iter().all(|(_, _, e)| e.len() == 1) {
        return Ok(None);
    }
    Ok(Some(
        members
            .into_iter()
            .map(|(w, there, mut e)| (w, there, e.remove(0)))
            .collect(),
    ))
}

/// The instruction an existential mover's map holds for its current
/// observation, checked to be one of the mover's own executable actions
/// everywhere in the cell. `Err` carries the human-readable objection.
fn instructed_action<'s>(
    pm: &PointedModel,
    a: &ActionModel,
    x: &Agent,
    alpha: Option<&'s ActionId>,
    cell: &[WorldId],
) -> Result<&'s ActionId, String> {
    let Some(alpha) = alpha else {
        return Err(format!("no instruction for `{x}` here"));
    };
    match a.owner(alpha) {
        Ok(OwnerTag::Agent(owner)) if owner == x => {}
        Ok(tag) => {
            return Err(format!(
                "instruction `{alpha}` belongs to `{tag}`, not to `{x}`"
            ))
        }
        Err(_) => return Err(format!("instruction `{alpha}` names no action")),
    }
    for w in cell {
        let there = match pm.repoint(w.clone()) {
            Ok(p) => p,
            Err(err) => return Err(err.to_string()),
        };
        match executable(&there, a, alpha) {
            Ok(true) => {}
            Ok(false) => {
                return Err(format!(
                    "instruction `{alpha}` is not executable at `{w}`"
                ))
            }
            Err(err) => return Err(err.to_string()),
        }
    }
    Ok(alpha)
}

#[allow(clippy::too_many_arguments)]
fn verify_by_round(
    m: &PointedModel,
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
    goal: &Formula,
    bound: usize,
    entries: &BTreeMap<Agent, BTreeMap<(CanonicalKey, usize), ActionId>>,
    mode: DeadlockMode,
    fuel: usize,
) -> DistResult<VerifyOutcome> {
    let mut queue: VecDeque<(PointedModel, usize, Vec<String>)> = VecDeque::new();
    let mut visited: BTreeSet<(CanonicalKey, usize)> = BTreeSet::new();
    let mut spent = 0usize;
    queue.push_back((m.clone(), 0, Vec::new()));

    while let Some((pm, round, trace)) = queue.pop_front() {
        if !visited.insert((canonical_key(&pm), round)) {
            continue;
        }
        spent += 1;
        if spent > fuel {
            return Ok(VerifyOutcome::Exhausted { fuel });
        }
        if pm.eval(goal)? {
            continue;
        }
        if round >= bound {
            return Ok(VerifyOutcome::Failed {
                reason: format!("round {round} reaches the bound without the goal"),
                trace,
            });
        }
        let x = mover_at(&pm, turn)?;
        if split.is_existential(&x) {
            let cell = observation_cell(&pm, &x)?;
            if let Some(moves) = forced_moves(&pm, a, &x, &cell)? {
                for (w, there, beta) in moves {
                    let child = apply_pointed(&there, a, &beta)?;
                    let mut t = trace.clone();
                    t.push(format!(
                        "round {round}: `{x}` is forced to `{beta}` at `{w}`"
                    ));
                    queue.push_back((child, round + 1, t));
                }
                continue;
            }
            let ik = information_key(&pm, &x)?;
            let alpha = entries.get(&x).and_then(|by_key| by_key.get(&(ik, round)));
            let alpha = match instructed_action(&pm, a, &x, alpha, &cell) {
                Ok(alpha) => alpha.clone(),
                Err(reason) => {
                    return Ok(VerifyOutcome::Failed {
                        reason: format!("round {round}: {reason}"),
                        trace,
                    })
                }
            };
            for w in &cell {
                let there = pm.repoint(w.clone())?;
                let child = apply_pointed(&there, a, &alpha)?;
                let mut t = trace.clone();
                t.push(format!(
                    "round {round}: `{x}` plays `{alpha}` seen from `{w}`"
                ));
                queue.push_back((child, round + 1, t));
            }
        } else {
            let mut any = false;
            for alpha in actions_of(a, &x) {
                if !executable(&pm, a, &alpha)? {
                    continue;
                }
                any = true;
                let child = apply_pointed(&pm, a, &alpha)?;
                let mut t = trace.clone();
                t.push(format!("round {round}: `{x}` plays `{alpha}`"));
                queue.push_back((child, round + 1, t));
            }
            if !any && matches!(mode, DeadlockMode::Lose) {
                return Ok(VerifyOutcome::Failed {
                    reason: format!("round {round}: `{x}` is deadlocked"),
                    trace,
                });
            }
        }
    }
    Ok(VerifyOutcome::Verified)
}

#[allow(clippy::too_many_arguments)]
fn verify_positional(
    m: &PointedModel,
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
    goal: &Formula,
    entries: &BTreeMap<Agent, BTreeMap<CanonicalKey, ActionId>>,
    mode: DeadlockMode,
    fuel: usize,
) -> DistResult<VerifyOutcome> {
    enum Color {
        OnPath,
        Done,
    }
    enum Frame {
        Enter(PointedModel, Vec<String>),
        Leave(CanonicalKey),
    }

    let mut colors: BTreeMap<CanonicalKey, Color> = BTreeMap::new();
    let mut stack = vec![Frame::Enter(m.clone(), Vec::new())];
    let mut spent = 0usize;

    while let Some(frame) = stack.pop() {
        let (pm, trace) = match frame {
            Frame::Enter(pm, trace) => (pm, trace),
            Frame::Leave(key) => {
                colors.insert(key, Color::Done);
                continue;
            }
        };
        let key = canonical_key(&pm);
        match colors.get(&key) {
            Some(Color::OnPath) => {
                return Ok(VerifyOutcome::Failed {
                    reason: format!(
                        "the play revisits configuration {} without reaching the goal",
                        &key.digest()[..12]
                    ),
                    trace,
                })
            }
            Some(Color::Done) => continue,
            None => {}
        }
        spent += 1;
        if spent > fuel {
            return Ok(VerifyOutcome::Exhausted { fuel });
        }
        if pm.eval(goal)? {
            colors.insert(key, Color::Done);
            continue;
        }
        colors.insert(key.clone(), Color::OnPath);
        stack.push(Frame::Leave(key));

        let x = mover_at(&pm, turn)?;
        if split.is_existential(&x) {
            let cell = observation_cell(&pm, &x)?;
            if let Some(moves) = forced_moves(&pm, a, &x, &cell)? {
                for (w, there, beta) in moves {
                    let child = apply_pointed(&there, a, &beta)?;
                    let mut t = trace.clone();
                    t.push(format!("`{x}` is forced to `{beta}` at `{w}`"));
                    stack.push(Frame::Enter(child, t));
                }
                continue;
            }
            let ik = information_key(&pm, &x)?;
            let alpha = entries.get(&x).and_then(|by_key| by_key.get(&ik));
            let alpha = match instructed_action(&pm, a, &x, alpha, &cell) {
                Ok(alpha) => alpha.clone(),
                Err(reason) => return Ok(VerifyOutcome::Failed { reason, trace }),
            };
            for w in &cell {
                let there = pm.repoint(w.clone())?;
                let child = apply_pointed(&there, a, &alpha)?;
                let mut t = trace.clone();
                t.push(format!("`{x}` plays `{alpha}` seen from `{w}`"));
                stack.push(Frame::Enter(child, t));
            }
        } else {
            let mut any = false;
            for alpha in actions_of(a, &x) {
                if !executable(&pm, a, &alpha)? {
                    continue;
                }
                any = true;
                let child = apply_pointed(&pm, a, &alpha)?;
                let mut t = trace.clone();
                t.push(format!("`{x}` plays `{alpha}`"));
                stack.push(Frame::Enter(child, t));
            }
            if !any && matches!(mode, DeadlockMode::Lose) {
                return Ok(VerifyOutcome::Failed {
                    reason: format!("`{x}` is deadlocked"),
                    trace,
                });
            }
        }
    }
    Ok(VerifyOutcome::Verified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::fdvar_assign;
    use crate::logic::EpistemicModel;

    fn agent(s: &str) -> Agent {
        Agent::new(s)
    }

    fn wid(s: &str) -> WorldId {
        WorldId::new(s)
    }

    fn aid(s: &str) -> ActionId {
        ActionId::new(s)
    }

    fn turn_var() -> FiniteDomainVar {
        FiniteDomainVar::new("turn", ["a".to_string(), "b".to_string()]).unwrap()
    }

    fn split() -> TeamSplit {
        TeamSplit::new([agent("a")], [agent("b")]).unwrap()
    }

    fn pass_turn(a: &mut ActionModel, alpha: &ActionId, to: &str) {
        for (atom, f) in fdvar_assign(&turn_var(), to).unwrap() {
            a.set_post(alpha, atom, f).unwrap();
        }
    }

    /// `a` holds the turn and can announce the secret `p`, which only `b`
    /// cannot already tell apart.
    fn secret() -> (PointedModel, ActionModel) {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p"), Atom::new("turn@a")])
            .unwrap();
        m.add_world(wid("u"), [Atom::new("turn@a")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("w")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("u")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("w"), wid("u")]).unwrap();
        let m = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(
            aid("tell"),
            Formula::and(Formula::atom("p"), Formula::atom("turn@a")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        pass_turn(&mut a, &aid("tell"), "b");
        a.close_reflexive();
        (m, a)
    }

    /// `b` holds the turn and may pass it to `a` or stall forever; only a
    /// pass lets `a` announce `p`.
    fn stalling() -> (PointedModel, ActionModel) {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p"), Atom::new("turn@b")])
            .unwrap();
        m.add_world(wid("u"), [Atom::new("turn@b")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("w")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("u")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("w"), wid("u")]).unwrap();
        let m = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(aid("pass"), Formula::atom("turn@b"), OwnerTag::Agent(agent("b")))
            .unwrap();
        a.add_action(aid("stall"), Formula::atom("turn@b"), OwnerTag::Agent(agent("b")))
            .unwrap();
        a.add_action(
            aid("tell"),
            Formula::and(Formula::atom("p"), Formula::atom("turn@a")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        pass_turn(&mut a, &aid("pass"), "a");
        pass_turn(&mut a, &aid("stall"), "b");
        pass_turn(&mut a, &aid("tell"), "b");
        a.close_reflexive();
        (m, a)
    }

    fn goal() -> Formula {
        Formula::knows(agent("b"), Formula::atom("p"))
    }

    #[test]
    fn announcing_the_secret_wins_by_rounds() {
        let (m, a) = secret();
        let verdict = solve_distributed_announcements(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            DeadlockMode::Lose,
        )
        .unwrap();
        let DistVerdict::Yes(strategy) = verdict else {
            panic!("expected a win, got {verdict}");
        };
        let DistributedStrategy::ByRound { bound, ref entries } = strategy else {
            panic!("wrong strategy shape");
        };
        assert_eq!(bound, 2);
        let table = &entries[&agent("a")];
        assert_eq!(table.len(), 1);
        let ((_, round), alpha) = table.iter().next().unwrap();
        assert_eq!(*round, 0);
        assert_eq!(alpha, &aid("tell"));

        let outcome = verify_distributed_strategy(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            &strategy,
            DeadlockMode::Lose,
            10_000,
        )
        .unwrap();
        assert!(outcome.is_verified(), "{outcome:?}");
    }

    #[test]
    fn announcing_the_secret_wins_positionally() {
        let (m, a) = secret();
        let verdict =
            solve_distributed_public(&m, &a, &split(), &turn_var(), &goal(), DeadlockMode::Lose)
                .unwrap();
        let DistVerdict::Yes(strategy) = verdict else {
            panic!("expected a win, got {verdict}");
        };
        assert!(matches!(strategy, DistributedStrategy::Positional { .. }));
        let outcome = verify_distributed_strategy(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            &strategy,
            DeadlockMode::Lose,
            10_000,
        )
        .unwrap();
        assert!(outcome.is_verified(), "{outcome:?}");
    }

    #[test]
    fn a_stalling_opponent_defeats_both_solvers() {
        let (m, a) = stalling();
        let by_rounds = solve_distributed_announcements(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            DeadlockMode::Lose,
        )
        .unwrap();
        assert!(matches!(by_rounds, DistVerdict::No), "{by_rounds}");

        let positional =
            solve_distributed_public(&m, &a, &split(), &turn_var(), &goal(), DeadlockMode::Lose)
                .unwrap();
        assert!(matches!(positional, DistVerdict::No), "{positional}");
    }

    #[test]
    fn deadlocked_opponents_win_or_lose_by_mode() {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p"), Atom::new("turn@b")])
            .unwrap();
        m.add_world(wid("u"), [Atom::new("turn@b")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("w")]).unwrap();
        m.add_obs_class(&agent("a"), &[wid("u")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("w"), wid("u")]).unwrap();
        let m = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(
            aid("tell"),
            Formula::and(Formula::atom("p"), Formula::atom("turn@a")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        pass_turn(&mut a, &aid("tell"), "b");
        a.close_reflexive();

        for solve in [solve_distributed_announcements, solve_distributed_public] {
            let lose = solve(&m, &a, &split(), &turn_var(), &goal(), DeadlockMode::Lose).unwrap();
            assert!(matches!(lose, DistVerdict::No), "{lose}");
            let vacuous =
                solve(&m, &a, &split(), &turn_var(), &goal(), DeadlockMode::Vacuous).unwrap();
            assert!(vacuous.is_yes(), "{vacuous}");
        }
    }

    #[test]
    fn factual_change_is_rejected_by_the_announcement_solver() {
        let (m, mut a) = secret();
        a.set_post(&aid("tell"), Atom::new("q"), Formula::True).unwrap();
        let err = solve_distributed_announcements(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            DeadlockMode::Lose,
        )
        .unwrap_err();
        assert!(matches!(err, DistributedError::MethodRequires(_)));
    }

    #[test]
    fn uniformity_failures_surface_as_a_failed_hypothesis() {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p"), Atom::new("turn@a")])
            .unwrap();
        m.add_world(wid("u"), [Atom::new("q"), Atom::new("turn@a")])
            .unwrap();
        m.add_obs_class(&agent("a"), &[wid("w"), wid("u")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("w")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("u")]).unwrap();
        let m = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(
            aid("say_p"),
            Formula::and(Formula::atom("p"), Formula::atom("turn@a")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        pass_turn(&mut a, &aid("say_p"), "b");
        a.close_reflexive();

        let err = solve_distributed_announcements(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            DeadlockMode::Lose,
        )
        .unwrap_err();
        let DistributedError::Hypotheses { name, .. } = err else {
            panic!("expected a hypothesis failure, got {err}");
        };
        assert_eq!(name, "actions-known");
    }

    /// No single announcement is executable across `a`'s whole cell, but
    /// each world admits exactly one, so the position plays itself: the
    /// team wins with an empty instruction table, announcing whichever
    /// fact the actual world allows.
    #[test]
    fn a_sensing_announcer_wins_without_instructions() {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p"), Atom::new("turn@a")])
            .unwrap();
        m.add_world(wid("u"), [Atom::new("q"), Atom::new("turn@a")])
            .unwrap();
        m.add_obs_class(&agent("a"), &[wid("w"), wid("u")]).unwrap();
        m.add_obs_class(&agent("b"), &[wid("w"), wid("u")]).unwrap();
        let m = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(
            aid("say_p"),
            Formula::and(Formula::atom("p"), Formula::atom("turn@a")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        a.add_action(
            aid("say_q"),
            Formula::and(Formula::atom("q"), Formula::atom("turn@a")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        pass_turn(&mut a, &aid("say_p"), "b");
        pass_turn(&mut a, &aid("say_q"), "b");
        a.close_reflexive();
        let goal = Formula::or(
            Formula::knows(agent("b"), Formula::atom("p")),
            Formula::knows(agent("b"), Formula::atom("q")),
        );

        for solve in [solve_distributed_announcements, solve_distributed_public] {
            let verdict =
                solve(&m, &a, &split(), &turn_var(), &goal, DeadlockMode::Lose).unwrap();
            let DistVerdict::Yes(strategy) = verdict else {
                panic!("expected a win, got {verdict}");
            };
            let empty = match &strategy {
                DistributedStrategy::ByRound { entries, .. } => entries.is_empty(),
                DistributedStrategy::Positional { entries } => entries.is_empty(),
                DistributedStrategy::ByClass { entries, .. } => entries.is_empty(),
            };
            assert!(empty, "a forced win should need no instructions");
            let outcome = verify_distributed_strategy(
                &m,
                &a,
                &split(),
                &turn_var(),
                &goal,
                &strategy,
                DeadlockMode::Lose,
                10_000,
            )
            .unwrap();
            assert!(outcome.is_verified(), "{outcome:?}");
        }
    }

    #[test]
    fn verification_rejects_a_ghost_action() {
        let (m, a) = secret();
        let mut entries: BTreeMap<Agent, BTreeMap<(CanonicalKey, usize), ActionId>> =
            BTreeMap::new();
        entries
            .entry(agent("a"))
            .or_default()
            .insert((information_key(&m, &agent("a")).unwrap(), 0), aid("shout"));
        let strategy = DistributedStrategy::ByRound { bound: 2, entries };
        let outcome = verify_distributed_strategy(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            &strategy,
            DeadlockMode::Lose,
            10_000,
        )
        .unwrap();
        let VerifyOutcome::Failed { reason, .. } = outcome else {
            panic!("expected failure, got {outcome:?}");
        };
        assert!(reason.contains("names no action"), "{reason}");
    }

    #[test]
    fn verification_rejects_an_instruction_owned_by_the_other_team() {
        let (m, mut a) = secret();
        a.add_action(aid("nod"), Formula::True, OwnerTag::Agent(agent("b")))
            .unwrap();
        a.close_reflexive();
        let mut entries: BTreeMap<Agent, BTreeMap<(CanonicalKey, usize), ActionId>> =
            BTreeMap::new();
        entries
            .entry(agent("a"))
            .or_default()
            .insert((information_key(&m, &agent("a")).unwrap(), 0), aid("nod"));
        let strategy = DistributedStrategy::ByRound { bound: 2, entries };
        let outcome = verify_distributed_strategy(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            &strategy,
            DeadlockMode::Lose,
            10_000,
        )
        .unwrap();
        let VerifyOutcome::Failed { reason, .. } = outcome else {
            panic!("expected failure, got {outcome:?}");
        };
        assert!(reason.contains("belongs to"), "{reason}");
    }

    #[test]
    fn verification_rejects_a_missing_instruction() {
        let (m, a) = secret();
        let strategy = DistributedStrategy::ByRound {
            bound: 2,
            entries: BTreeMap::new(),
        };
        let outcome = verify_distributed_strategy(
            &m,
            &a,
            &split(),
            &turn_var(),
            &goal(),
            &strategy,
            DeadlockMode::Lose,
            10_000,
        )
        .unwrap();
        let VerifyOutcome::Failed { reason, .. } = outcome else {
            panic!("expected failure, got {outcome:?}");
        };
        assert!(reason.contains("no instruction"), "{reason}");
    }
}
