//! Plan existence: breadth-first search for an executable action sequence
//! after which the goal holds, memoized on canonical keys.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::dynamics::{
    apply_pointed, apply_pointed_no_contract, classify, executable, ActionId, ActionModel,
    DynResult,
};
use crate::logic::{canonical_key, Formula, PointedModel};

/// Plan length limit used when neither the caller nor the action model's
/// shape provides one.
pub const DEFAULT_PLAN_BOUND: usize = 12;

/// A sequence of action ids, executable in order from some initial pointed
/// model.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Plan(Vec<ActionId>);

impl Plan {
    pub fn new(actions: Vec<ActionId>) -> Self {
        Plan(actions)
    }

    pub fn empty() -> Self {
        Plan(Vec::new())
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("(empty)");
        }
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

/// Outcome of a plan-existence search.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PlanVerdict {
    Yes(Plan),
    No,
    /// The search hit its length limit with unexplored states left, so
    /// plans longer than `bound` may still exist.
    Unknown { bound: usize },
}

/// Why a plan fails to verify.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum PlanFailure {
    /// Replay got stuck: the precondition of `action` is false at the point
    /// reached before step `step` (1-based).
    #[error("step {step}: action `{action}` is not executable")]
    NotExecutable { step: usize, action: ActionId },
    #[error("goal does not hold after the final step")]
    GoalFails,
}

/// Searches for a shortest executable action sequence reaching the goal.
///
/// States are pointed models under [`apply_pointed`], deduplicated by
/// canonical key, explored breadth-first with actions tried in id order.
/// The length limit is the caller's `bound` if given; otherwise it is
/// `|W|` when every action is a public announcement (which can only remove
/// worlds), absent when every action keeps models from growing (identity
/// relations, or pairwise unsatisfiable preconditions within each
/// component, where the reachable key space is finite), and
/// [`DEFAULT_PLAN_BOUND`] otherwise. `No` is returned only when the
/// reachable space was exhausted within the limit; a truncated search
/// returns `Unknown`.
pub fn plan_exists(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    bound: Option<usize>,
) -> DynResult<PlanVerdict> {
    plan_search(m, a, goal, bound, true)
}

/// Same search as [`plan_exists`] but without contracting intermediate
/// models, so successive products accumulate bisimilar duplicate worlds.
/// Verdicts agree with [`plan_exists`]; kept as a differential check that
/// contraction never changes them.
pub fn plan_exists_no_contract(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    bound: Option<usize>,
) -> DynResult<PlanVerdict> {
    plan_search(m, a, goal, bound, false)
}

fn plan_search(
    m: &PointedModel,
    a: &ActionModel,
    goal: &Formula,
    bound: Option<usize>,
    contract: bool,
) -> DynResult<PlanVerdict> {
    if m.eval(goal)? {
        return Ok(PlanVerdict::Yes(Plan::empty()));
    }
    let limit = bound.or_else(|| automatic_bound(m, a));
    let actions: Vec<ActionId> = a.actions().cloned().collect();

    let mut nodes: Vec<SearchNode> = vec![SearchNode {
        state: m.clone(),
        parent: None,
        depth: 0,
    }];
    let mut seen: BTreeSet<_> = [canonical_key(m)].into();
    let mut queue: VecDeque<usize> = [0].into();
    let mut truncated = false;

    while let Some(ix) = queue.pop_front() {
        let depth = nodes[ix].depth;
        let at_limit = limit.is_some_and(|l| depth >= l);
        for alpha in &actions {
            let state = &nodes[ix].state;
            if !executable(state, a, alpha)? {
                continue;
            }
            let next = if contract {
                apply_pointed(state, a, alpha)?
            } else {
                apply_pointed_no_contract(state, a, alpha)?
            };
            if !seen.insert(canonical_key(&next)) {
                continue;
            }
            if at_limit {
                truncated = true;
                continue;
            }
            if next.eval(goal)? {
                return Ok(PlanVerdict::Yes(path_to(&nodes, ix, alpha)));
            }
            nodes.push(SearchNode {
                state: next,
                parent: Some((ix, alpha.clone())),
                depth: depth + 1,
            });
            queue.push_back(nodes.len() - 1);
        }
    }
    if truncated {
        Ok(PlanVerdict::Unknown {
            bound: limit.expect("truncation happens only at a length limit"),
        })
    } else {
        Ok(PlanVerdict::No)
    }
}

struct SearchNode {
    state: PointedModel,
    parent: Option<(usize, ActionId)>,
    depth: usize,
}

fn automatic_bound(m: &PointedModel, a: &ActionModel) -> Option<usize> {
    if a.has_identity_relations() && a.has_no_facts_change() {
        return Some(m.model().world_count());
    }
    if a.has_identity_relations() || classify(a, None).separable.is_true() {
        return None;
    }
    Some(DEFAULT_PLAN_BOUND)
}

fn path_to(nodes: &[SearchNode], mut ix: usize, last: &ActionId) -> Plan {
    let mut rev = vec![last.clone()];
    while let Some((parent, alpha)) = &nodes[ix].parent {
        rev.push(alpha.clone());
        ix = *parent;
    }
    rev.reverse();
    Plan::new(rev)
}

/// Replays `plan` from `m`, checking executability at every step, and
/// evaluates the goal at the end. The inner `Err` pinpoints the first
/// failing step.
pub fn verify_plan(
    m: &PointedModel,
    a: &ActionModel,
    plan: &Plan,
    goal: &Formula,
) -> DynResult<Result<(), PlanFailure>> {
    let mut state = m.clone();
    for (i, alpha) in plan.actions().iter().enumerate() {
        if !executable(&state, a, alpha)? {
            return Ok(Err(PlanFailure::NotExecutable {
                step: i + 1,
                action: alpha.clone(),
            }));
        }
        state = apply_pointed(&state, a, alpha)?;
    }
    if state.eval(goal)? {
        Ok(Ok(()))
    } else {
        Ok(Err(PlanFailure::GoalFails))
    }
}
