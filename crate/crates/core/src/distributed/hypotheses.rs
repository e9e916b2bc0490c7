//! Structural checks the distributed solvers lean on: the turn must be
//! readable and commonly known, actions must announce whose turn comes
//! next in a way observation cannot break, and every agent must know which
//! of its own actions are executable. Solvers refuse instances where a
//! check fails outright; a check that cannot be settled within the
//! exploration budget is reported as unknown rather than guessed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::dynamics::{
    apply_pointed, classify, executable, post_valuation, ActionId, ActionModel,
    FiniteDomainVar, OwnerTag,
};
use crate::logic::{canonical_key, Agent, Atom, CanonicalKey, Formula, PointedModel, WorldId};

use super::align::Alignment;
use super::{actions_of, observation_cell, DistResult, DistributedError};

pub(crate) const DEFAULT_CONFIG_BUDGET: usize = 20_000;
pub(crate) const EXPANDING_CHECK_DEPTH: usize = 6;
const SEMANTIC_ATOM_LIMIT: usize = 16;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CheckOutcome {
    Pass,
    Fail(String),
    Unknown(String),
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Pass)
    }

    pub fn failed(&self) -> bool {
        matches!(self, CheckOutcome::Fail(_))
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckOutcome::Pass => write!(f, "pass"),
            CheckOutcome::Fail(reason) => write!(f, "fail: {reason}"),
            CheckOutcome::Unknown(reason) => write!(f, "unknown: {reason}"),
        }
    }
}

/// Outcome of the four checks, one field per check.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HypothesesReport {
    /// Every initial world agrees on whose turn it is.
    pub initial_turn_known: CheckOutcome,
    /// Actions an agent cannot tell apart move the turn identically.
    pub turn_stays_known: CheckOutcome,
    /// Preconditions fire only on the owner's turn, and turn writes pin
    /// the variable to a single value.
    pub turn_discipline: CheckOutcome,
    /// An agent's own actions are executable either at all worlds of its
    /// observation cell or at none.
    pub actions_known: CheckOutcome,
}

impl HypothesesReport {
    pub fn all_pass(&self) -> bool {
        self.initial_turn_known.passed()
            && self.turn_stays_known.passed()
            && self.turn_discipline.passed()
            && self.actions_known.passed()
    }

    /// Solvers run only on instances where no check failed outright.
    pub(crate) fn admissible(&self) -> DistResult<()> {
        let checks = [
            ("initial-turn-known", &self.initial_turn_known),
            ("turn-stays-known", &self.turn_stays_known),
            ("turn-discipline", &self.turn_discipline),
            ("actions-known", &self.actions_known),
        ];
        for (name, outcome) in checks {
            if let CheckOutcome::Fail(reason) = outcome {
                return Err(DistributedError::Hypotheses {
                    name,
                    reason: reason.clone(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for HypothesesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "initial-turn-known: {}", self.initial_turn_known)?;
        writeln!(f, "turn-stays-known: {}", self.turn_stays_known)?;
        writeln!(f, "turn-discipline: {}", self.turn_discipline)?;
        write!(f, "actions-known: {}", self.actions_known)
    }
}

pub fn check_hypotheses(
    m: &PointedModel,
    a: &ActionModel,
    turn: &FiniteDomainVar,
) -> DistResult<HypothesesReport> {
    check_hypotheses_with(m, a, turn, DEFAULT_CONFIG_BUDGET)
}

/// [`check_hypotheses`] with an explicit configuration budget, so callers
/// can trade coverage for time on large instances.
pub fn check_hypotheses_with(
    m: &PointedModel,
    a: &ActionModel,
    turn: &FiniteDomainVar,
    budget: usize,
) -> DistResult<HypothesesReport> {
    for id in a.actions() {
        if let tag @ (OwnerTag::Controller | OwnerTag::Environment) = a.owner(id)? {
            return Err(DistributedError::BadOwner {
                action: id.clone(),
                owner: tag.to_string(),
            });
        }
    }

    let expanding = !(a.has_identity_relations() || classify(a, None).separable.is_true());
    let depth_limit = expanding.then_some(EXPANDING_CHECK_DEPTH);
    let mut reach = LazyConfigs::new(m, a, depth_limit, budget);
    let alignment = Alignment::analyze(m, a)?;

    Ok(HypothesesReport {
        initial_turn_known: check_initial_turn(m, turn)?,
        turn_stays_known: check_turn_stays_known(m, a, turn, alignment.as_ref())?,
        turn_discipline: check_turn_discipline(a, turn, &mut reach)?,
        actions_known: check_actions_known(m, a, turn, alignment.as_ref(), &mut reach)?,
    })
}

/// Whether `x` tells every world and every action apart, making its cells
/// singletons at any reachable configuration.
fn sees_sharply(m: &PointedModel, a: &ActionModel, x: &Agent) -> bool {
    let model_sharp = m.model().worlds().all(|w| {
        m.model()
            .successors(x, w)
            .map_or(false, |cell| cell.iter().all(|u| u == w))
    });
    model_sharp && a.edges(x).into_iter().all(|(alpha, beta)| alpha == beta)
}

fn check_initial_turn(m: &PointedModel, turn: &FiniteDomainVar) -> DistResult<CheckOutcome> {
    let mut first: Option<(String, String)> = None;
    for w in m.model().worlds() {
        let atoms = m.model().world_atoms(w)?;
        match turn.read(atoms) {
            None => {
                return Ok(CheckOutcome::Fail(format!(
                    "world `{w}` holds turn values [{}], expected exactly one",
                    turn.holding(atoms).join(", ")
                )))
            }
            Some(value) => match &first {
                None => first = Some((w.to_string(), value.to_string())),
                Some((w0, v0)) if v0 != value => {
                    return Ok(CheckOutcome::Fail(format!(
                        "worlds `{w0}` and `{w}` disagree on the turn ({v0} vs {value})"
                    )))
                }
                Some(_) => {}
            },
        }
    }
    Ok(CheckOutcome::Pass)
}

fn check_turn_stays_known(
    m: &PointedModel,
    a: &ActionModel,
    turn: &FiniteDomainVar,
    alignment: Option<&Alignment>,
) -> DistResult<CheckOutcome> {
    let Some(al) = alignment else {
        return pairwise_turn_check(a, turn);
    };
    let agents: Vec<Agent> = a.agents().cloned().collect();
    for b in &agents {
        if sees_sharply(m, a, b) || al.turn_stays_aligned(b, turn) {
            continue;
        }
        return Ok(match al.turn_break(b, a, turn) {
            Some((alpha, beta, to_a, to_b)) if alpha == beta => CheckOutcome::Fail(format!(
                "action `{alpha}` can move the turn to {to_a} or {to_b} depending on \
                 facts `{b}` cannot see"
            )),
            Some((alpha, beta, to_a, to_b)) => CheckOutcome::Fail(format!(
                "actions `{alpha}` and `{beta}` are `{b}`-related but can move the turn \
                 to {to_a} vs {to_b}"
            )),
            None => CheckOutcome::Fail(format!(
                "`{b}` can lose track of whose turn it is after actions it cannot tell apart"
            )),
        });
    }
    Ok(CheckOutcome::Pass)
}

/// Coarse fallback when the valuation space is too large to enumerate:
/// demand that related actions write the turn identically from every
/// valuation, reachable or not.
fn pairwise_turn_check(a: &ActionModel, turn: &FiniteDomainVar) -> DistResult<CheckOutcome> {
    let turn_atoms: BTreeSet<Atom> = turn.atoms().into_iter().collect();
    let agents: Vec<Agent> = a.agents().cloned().collect();
    for b in &agents {
        for (alpha, beta) in a.edges(b) {
            if alpha == beta {
                continue;
            }
            let wa = restrict(a.post_map(&alpha)?, &turn_atoms);
            let wb = restrict(a.post_map(&beta)?, &turn_atoms);
            if wa == wb {
                continue;
            }
            let mut dep = turn_atoms.clone();
            for formula in wa.values().chain(wb.values()) {
                dep.extend(formula.atoms());
            }
            if dep.len() > SEMANTIC_ATOM_LIMIT {
                return Ok(CheckOutcome::Fail(format!(
                    "actions `{alpha}` and `{beta}` are `{b}`-related but write the turn \
                     differently, and the writes mention too many atoms to compare"
                )));
            }
            let dep: Vec<Atom> = dep.into_iter().collect();
            for mask in 0u32..(1 << dep.len()) {
                let v = valuation_from_mask(&dep, mask);
                let after_a = post_valuation(&v, a, &alpha)?;
                let after_b = post_valuation(&v, a, &beta)?;
                if turn.read(&after_a) != turn.read(&after_b) {
                    return Ok(CheckOutcome::Fail(format!(
                        "actions `{alpha}` and `{beta}` are `{b}`-related but move the turn \
                         to {} vs {} from {{{}}}",
                        describe(turn.read(&after_a)),
                        describe(turn.read(&after_b)),
                        join_atoms(&v),
                    )));
                }
            }
        }
    }
    Ok(CheckOutcome::Pass)
}

fn check_turn_discipline(
    a: &ActionModel,
    turn: &FiniteDomainVar,
    lazy: &mut LazyConfigs<'_>,
) -> DistResult<CheckOutcome> {
    let turn_atoms: BTreeSet<Atom> = turn.atoms().into_iter().collect();

    for alpha in a.actions() {
        let writes = restrict(a.post_map(alpha)?, &turn_atoms);
        if writes.is_empty() {
            continue;
        }
        let mut made_true = 0usize;
        for (atom, formula) in &writes {
            match formula {
                Formula::True => made_true += 1,
                Formula::False => {}
                other => {
                    return Ok(CheckOutcome::Fail(format!(
                        "action `{alpha}` writes turn atom `{atom}` from the non-constant \
                         formula `{other}`"
                    )))
                }
            }
        }
        if made_true != 1 {
            return Ok(CheckOutcome::Fail(format!(
                "action `{alpha}` makes {made_true} turn atoms true at once"
            )));
        }
        if let Some(missing) = turn_atoms.iter().find(|t| !writes.contains_key(*t)) {
            return Ok(CheckOutcome::Fail(format!(
                "action `{alpha}` sets the turn but leaves `{missing}` unwritten"
            )));
        }
    }

    let mut deferred: Option<usize> = None;
    for alpha in a.actions() {
        let x = match a.owner(alpha)? {
            OwnerTag::Agent(x) => x.clone(),
            _ => continue,
        };
        let turn_atom = match turn.atom(x.as_str()) {
            Ok(atom) => atom,
            Err(_) => {
                return Ok(CheckOutcome::Fail(format!(
                    "owner `{x}` of `{alpha}` is not a value of `{}`",
                    turn.name()
                )))
            }
        };
        let pre = a.pre(alpha)?;
        if pre.modal_depth() == 0 {
            let mut dep = pre.atoms();
            dep.insert(turn_atom.clone());
            if dep.len() <= SEMANTIC_ATOM_LIMIT {
                let dep: Vec<Atom> = dep.into_iter().collect();
                for mask in 0u32..(1 << dep.len()) {
                    let v = valuation_from_mask(&dep, mask);
                    if pre.eval_propositional(&v) == Some(true) && !v.contains(&turn_atom) {
                        return Ok(CheckOutcome::Fail(format!(
                            "action `{alpha}` (owner `{x}`) can fire when the turn is \
                             elsewhere, e.g. under {{{}}}",
                            join_atoms(&v),
                        )));
                    }
                }
                continue;
            }
        }
        let reach = lazy.get()?;
        for pm in &reach.configs {
            if pm.eval(pre)? && !pm.model().world_atoms(pm.point())?.contains(&turn_atom) {
                return Ok(CheckOutcome::Fail(format!(
                    "action `{alpha}` (owner `{x}`) is enabled at reachable configuration \
                     {} where the turn is elsewhere",
                    describe_config(pm),
                )));
            }
        }
        if reach.truncated {
            deferred = Some(reach.configs.len());
        }
    }

    match deferred {
        Some(explored) => Ok(CheckOutcome::Unknown(format!(
            "some preconditions were checked only on the {explored} configurations explored"
        ))),
        None => Ok(CheckOutcome::Pass),
    }
}

fn check_actions_known(
    m: &PointedModel,
    a: &ActionModel,
    turn: &FiniteDomainVar,
    alignment: Option<&Alignment>,
    lazy: &mut LazyConfigs<'_>,
) -> DistResult<CheckOutcome> {
    let mut suspects: BTreeSet<Agent> = BTreeSet::new();
    let agents: Vec<Agent> = a.agents().cloned().collect();
    for x in agents {
        let own = actions_of(a, &x);
        if own.is_empty() || sees_sharply(m, a, &x) {
            continue;
        }
        let mut propositional = true;
        for alpha in &own {
            propositional = propositional && a.pre(alpha)?.modal_depth() == 0;
        }
        let certified = propositional
            && alignment.is_some_and(|al| al.uniform_or_forced(&x, &own));
        if !certified {
            suspects.insert(x);
        }
    }
    if suspects.is_empty() {
        return Ok(CheckOutcome::Pass);
    }

    let reach = lazy.get()?;
    for pm in &reach.configs {
        let atoms = pm.model().world_atoms(pm.point())?;
        let Some(value) = turn.read(atoms) else {
            return Ok(CheckOutcome::Fail(format!(
                "the turn is unreadable at reachable configuration {}",
                describe_config(pm),
            )));
        };
        let x = Agent::new(value);
        if !suspects.contains(&x) {
            continue;
        }
        let own = actions_of(a, &x);
        let cell = match observation_cell(pm, &x) {
            Ok(cell) => cell,
            Err(err) => {
                return Ok(CheckOutcome::Fail(format!(
                    "at reachable configuration {}: {err}",
                    describe_config(pm),
                )))
            }
        };
        if let Some((u, v, alpha)) = cell_break(pm, a, &own, &cell)? {
            return Ok(CheckOutcome::Fail(format!(
                "at reachable configuration {}, `{x}` cannot tell `{u}` from `{v}` \
                 but `{alpha}` is executable at only one",
                describe_config(pm),
            )));
        }
    }
    if reach.truncated {
        Ok(CheckOutcome::Unknown(format!(
            "checked the {} configurations explored before the budget ran out",
            reach.configs.len()
        )))
    } else {
        Ok(CheckOutcome::Pass)
    }
}

/// Rejects a cell unless the mover's executable own actions are the same
/// at every member or pinned to a single action at each; on rejection,
/// returns two members one action tells apart.
fn cell_break(
    pm: &PointedModel,
    a: &ActionModel,
    own: &[ActionId],
    cell: &[WorldId],
) -> DistResult<Option<(WorldId, WorldId, ActionId)>> {
    let mut executables = Vec::with_capacity(cell.len());
    for w in cell {
        let there = pm.repoint(w.clone())?;
        let mut e = Vec::new();
        for alpha in own {
            if executable(&there, a, alpha)? {
                e.push(alpha.clone());
            }
        }
        executables.push((w.clone(), e));
    }
    let uniform = executables.windows(2).all(|p| p[0].1 == p[1].1);
    if uniform || executables.iter().all(|(_, e)| e.len() == 1) {
        return Ok(None);
    }
    for (u, eu) in &executables {
        for (v, ev) in &executables {
            if let Some(alpha) = eu.iter().find(|alpha| !ev.contains(alpha)) {
                return Ok(Some((u.clone(), v.clone(), alpha.clone())));
            }
        }
    }
    Ok(None)
}

/// Everything a play can pass through: each world of the initial model as
/// a point, closed under executing any executable action and re-pointing
/// anywhere in the result.
pub(crate) struct ReachableConfigs {
    pub configs: Vec<PointedModel>,
    pub truncated: bool,
}

/// Defers the configuration exploration until a check actually needs it,
/// then shares one result across checks.
struct LazyConfigs<'a> {
    m: &'a PointedModel,
    a: &'a ActionModel,
    depth_limit: Option<usize>,
    budget: usize,
    cache: Option<ReachableConfigs>,
}

impl<'a> LazyConfigs<'a> {
    fn new(
        m: &'a PointedModel,
        a: &'a ActionModel,
        depth_limit: Option<usize>,
        budget: usize,
    ) -> LazyConfigs<'a> {
        LazyConfigs {
            m,
            a,
            depth_limit,
            budget,
            cache: None,
        }
    }

    fn get(&mut self) -> DistResult<&ReachableConfigs> {
        if self.cache.is_none() {
            self.cache = Some(reachable_configs(self.m, self.a, self.depth_limit, self.budget)?);
        }
        Ok(self.cache.as_ref().expect("just filled"))
    }
}

pub(crate) fn reachable_configs(
    m: &PointedModel,
    a: &ActionModel,
    depth_limit: Option<usize>,
    budget: usize,
) -> DistResult<ReachableConfigs> {
    let mut seen: BTreeSet<CanonicalKey> = BTreeSet::new();
    let mut configs: Vec<PointedModel> = Vec::new();
    let mut queue: VecDeque<(PointedModel, usize)> = VecDeque::new();
    let mut truncated = false;

    let roots: Vec<_> = m.model().worlds().cloned().collect();
    for w in roots {
        let pm = m.repoint(w)?;
        if seen.insert(canonical_key(&pm)) {
            queue.push_back((pm, 0));
        }
    }

    while let Some((pm, depth)) = queue.pop_front() {
        configs.push(pm.clone());
        for alpha in a.actions() {
            if !executable(&pm, a, alpha)? {
                continue;
            }
            let child = apply_pointed(&pm, a, alpha)?;
            let points: Vec<_> = child.model().worlds().cloned().collect();
            for u in points {
                let next = child.repoint(u)?;
                let key = canonical_key(&next);
                if seen.contains(&key) {
                    continue;
                }
                let over_depth = depth_limit.is_some_and(|limit| depth >= limit);
                let over_budget = configs.len() + queue.len() >= budget;
                if over_depth || over_budget {
                    truncated = true;
                    continue;
                }
                seen.insert(key);
                queue.push_back((next, depth + 1));
            }
        }
    }

    Ok(ReachableConfigs { configs, truncated })
}

fn restrict(
    posts: &BTreeMap<Atom, Formula>,
    keep: &BTreeSet<Atom>,
) -> BTreeMap<Atom, Formula> {
    posts
        .iter()
        .filter(|(atom, _)| keep.contains(*atom))
        .map(|(atom, f)| (atom.clone(), f.clone()))
        .collect()
}

fn valuation_from_mask(dep: &[Atom], mask: u32) -> BTreeSet<Atom> {
    dep.iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, atom)| atom.clone())
        .collect()
}

fn join_atoms(v: &BTreeSet<Atom>) -> String {
    v.iter()
        .map(Atom::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

fn describe(value: Option<&str>) -> String {
    match value {
        Some(v) => format!("`{v}`"),
        None => "nothing readable".to_string(),
    }
}

fn describe_config(pm: &PointedModel) -> String {
    let digest = canonical_key(pm).digest();
    format!("`{}` (digest {})", pm.point(), &digest[..12])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fdvar_assign, ActionId};
    use crate::logic::{EpistemicModel, WorldId};

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

    fn pass_turn(a: &mut ActionModel, alpha: &ActionId, to: &str) {
        for (atom, f) in fdvar_assign(&turn_var(), to).unwrap() {
            a.set_post(alpha, atom, f).unwrap();
        }
    }

    /// Two worlds only `b` confuses, both on `b`'s turn; `b` may pass or
    /// stall, `a` may reveal `p` once it has the turn.
    fn turn_taking() -> (PointedModel, ActionModel) {
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

    #[test]
    fn clean_turn_taking_instance_passes_every_check() {
        let (m, a) = turn_taking();
        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        assert!(report.all_pass(), "{report}");
    }

    #[test]
    fn disagreeing_initial_turn_fails_the_first_check() {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("turn@a")]).unwrap();
        m.add_world(wid("u"), [Atom::new("turn@b")]).unwrap();
        m.close_reflexive();
        let m = PointedModel::new(m, wid("w")).unwrap();
        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.close_reflexive();

        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        let CheckOutcome::Fail(reason) = &report.initial_turn_known else {
            panic!("expected a failure, got {}", report.initial_turn_known);
        };
        assert!(reason.contains("`w`") && reason.contains("`u`"), "{reason}");
    }

    #[test]
    fn worlds_without_a_turn_value_fail_the_first_check() {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p")]).unwrap();
        m.close_reflexive();
        let m = PointedModel::new(m, wid("w")).unwrap();
        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.close_reflexive();

        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        assert!(report.initial_turn_known.failed());
    }

    #[test]
    fn different_turn_writes_fail_the_relation_check() {
        let (m, mut a) = turn_taking();
        a.add_obs_class(&agent("b"), &[aid("pass"), aid("stall")])
            .unwrap();
        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        let CheckOutcome::Fail(reason) = &report.turn_stays_known else {
            panic!("expected a failure, got {}", report.turn_stays_known);
        };
        assert!(reason.contains("`pass`") && reason.contains("`stall`"), "{reason}");
    }

    #[test]
    fn equivalent_turn_writes_pass_the_relation_check() {
        let (m, mut a) = turn_taking();
        a.add_action(aid("stall2"), Formula::atom("turn@b"), OwnerTag::Agent(agent("b")))
            .unwrap();
        a.set_post(&aid("stall2"), Atom::new("turn@b"), Formula::True)
            .unwrap();
        a.set_post(
            &aid("stall2"),
            Atom::new("turn@a"),
            Formula::and(Formula::atom("p"), Formula::not(Formula::atom("p"))),
        )
        .unwrap();
        a.close_reflexive();
        a.add_obs_class(&agent("b"), &[aid("stall"), aid("stall2")])
            .unwrap();

        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        assert!(report.turn_stays_known.passed(), "{}", report.turn_stays_known);
        let CheckOutcome::Fail(reason) = &report.turn_discipline else {
            panic!("expected discipline to reject the non-constant write");
        };
        assert!(reason.contains("non-constant"), "{reason}");
    }

    #[test]
    fn unguarded_precondition_fails_discipline() {
        let (m, mut a) = turn_taking();
        a.replace_pre(&aid("tell"), Formula::atom("p")).unwrap();
        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        let CheckOutcome::Fail(reason) = &report.turn_discipline else {
            panic!("expected a failure, got {}", report.turn_discipline);
        };
        assert!(reason.contains("`tell`"), "{reason}");
    }

    #[test]
    fn partial_turn_write_fails_discipline() {
        let (m, mut a) = turn_taking();
        a.add_action(aid("grab"), Formula::atom("turn@b"), OwnerTag::Agent(agent("b")))
            .unwrap();
        a.set_post(&aid("grab"), Atom::new("turn@a"), Formula::True)
            .unwrap();
        a.close_reflexive();
        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        let CheckOutcome::Fail(reason) = &report.turn_discipline else {
            panic!("expected a failure, got {}", report.turn_discipline);
        };
        assert!(reason.contains("unwritten"), "{reason}");
    }

    /// One agent senses which of two facts holds by which announcement is
    /// available: its cell mixes worlds with disjoint executable sets, but
    /// each world pins exactly one action, so the choice never rests on
    /// something unknown.
    #[test]
    fn sensing_pairs_pass_actions_known() {
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
        a.add_action(
            aid("say_q"),
            Formula::and(Formula::atom("q"), Formula::atom("turn@a")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        pass_turn(&mut a, &aid("say_p"), "b");
        pass_turn(&mut a, &aid("say_q"), "b");
        a.close_reflexive();

        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        assert!(report.all_pass(), "{report}");
    }

    /// Two actions an onlooker cannot tell apart move the turn to
    /// different places, but their preconditions put them in different
    /// phases of the round, so the onlooker can always infer which one
    /// fired from the phase it last observed.
    #[test]
    fn phase_gated_turn_writes_stay_known() {
        let stp = FiniteDomainVar::new("stp", ["one".to_string(), "two".to_string()]).unwrap();
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("turn@a"), Atom::new("stp@one")])
            .unwrap();
        m.close_reflexive();
        let m = PointedModel::new(m, wid("w")).unwrap();

        let mut a = ActionModel::new([agent("a"), agent("b")]);
        a.add_action(
            aid("step1"),
            Formula::and(Formula::atom("turn@a"), Formula::atom("stp@one")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        a.add_action(
            aid("step2"),
            Formula::and(Formula::atom("turn@a"), Formula::atom("stp@two")),
            OwnerTag::Agent(agent("a")),
        )
        .unwrap();
        for (atom, f) in fdvar_assign(&stp, "two").unwrap() {
            a.set_post(&aid("step1"), atom, f).unwrap();
        }
        for (atom, f) in fdvar_assign(&stp, "one").unwrap() {
            a.set_post(&aid("step2"), atom, f).unwrap();
        }
        pass_turn(&mut a, &aid("step2"), "b");
        a.add_obs_class(&agent("b"), &[aid("step1"), aid("step2")])
            .unwrap();
        a.close_reflexive();

        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        assert!(report.all_pass(), "{report}");
    }

    #[test]
    fn executable_only_at_one_confused_world_fails_actions_known() {
        let mut m = EpistemicModel::new([agent("a"), agent("b")]);
        m.add_world(wid("w"), [Atom::new("p"), Atom::new("turn@a")])
            .unwrap();
        m.add_world(wid("u"), [Atom::new("turn@a")]).unwrap();
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

        let report = check_hypotheses(&m, &a, &turn_var()).unwrap();
        let CheckOutcome::Fail(reason) = &report.actions_known else {
            panic!("expected a failure, got {}", report.actions_known);
        };
        assert!(reason.contains("`say_p`"), "{reason}");
    }

    #[test]
    fn tight_budget_degrades_checks_to_unknown() {
        let (m, mut a) = turn_taking();
        a.replace_pre(
            &aid("tell"),
            Formula::and(
                Formula::knows(agent("a"), Formula::atom("p")),
                Formula::atom("turn@a"),
            ),
        )
        .unwrap();
        a.add_action(
            aid("peek"),
            Formula::and(
                Formula::knows(agent("b"), Formula::atom("p")),
                Formula::atom("turn@b"),
            ),
            OwnerTag::Agent(agent("b")),
        )
        .unwrap();
        a.close_reflexive();
        let report = check_hypotheses_with(&m, &a, &turn_var(), 1).unwrap();
        assert!(
            matches!(report.turn_discipline, CheckOutcome::Unknown(_)),
            "{}",
            report.turn_discipline
        );
        assert!(
            matches!(report.actions_known, CheckOutcome::Unknown(_)),
            "{}",
            report.actions_known
        );
    }

    #[test]
    fn controller_owned_actions_are_rejected_outright() {
        let (m, mut a) = turn_taking();
        a.add_action(aid("meddle"), Formula::True, OwnerTag::Controller)
            .unwrap();
        a.close_reflexive();
        let err = check_hypotheses(&m, &a, &turn_var()).unwrap_err();
        assert!(matches!(err, DistributedError::BadOwner { .. }));
    }
}
