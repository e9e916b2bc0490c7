//! Bounded oracle over explicit histories. A history is an initial world
//! together with the actions executed so far; two same-length histories
//! look alike to an agent when their initial worlds are related in the
//! model and their actions are related position by position. The search
//! assigns one action per (agent, look-alike class) pair, so uniformity is
//! built into the shape of the assignment, and backtracks over those
//! assignments until every play consistent with one reaches the goal.
//!
//! Plays start at the given point. When an existential agent moves, the
//! play may first relocate to any look-alike of the current history, which
//! keeps the chosen action accountable at every position the mover cannot
//! rule out. A class offering no action executable at all its members but
//! exactly one at each is played as forced, each member advancing by its
//! own, with no assignment made. Universal movers branch over all
//! executable actions in place.

use std::collections::{BTreeMap, BTreeSet};

use crate::controller::VerifyOutcome;
use crate::dynamics::{
    apply_pointed, executable, ActionId, ActionModel, FiniteDomainVar, OwnerTag,
};
use crate::game::DeadlockMode;
use crate::logic::{Agent, Formula, PointedModel, WorldId};

use super::{
    actions_of, mover_at, validate_teams, DistResult, DistVerdict, DistributedStrategy,
    TeamSplit,
};

pub const DEFAULT_TREE_BUDGET: usize = 200_000;

type HistKey = (WorldId, Vec<ActionId>);

/// Lazily validated histories over a fixed instance, with their endpoint
/// models cached. A history is valid when every action along it was
/// executable at the moment it fired.
struct HistorySpace<'a> {
    m: &'a PointedModel,
    a: &'a ActionModel,
    endpoints: BTreeMap<HistKey, Option<PointedModel>>,
}

impl HistorySpace<'_> {
    fn endpoint(&mut self, root: &WorldId, actions: &[ActionId]) -> DistResult<Option<PointedModel>> {
        let key = (root.clone(), actions.to_vec());
        if let Some(cached) = self.endpoints.get(&key) {
            return Ok(cached.clone());
        }
        let computed = match actions.split_last() {
            None => Some(self.m.repoint(root.clone())?),
            Some((last, prefix)) => match self.endpoint(root, prefix)? {
                Some(pm) if executable(&pm, self.a, last)? => {
                    Some(apply_pointed(&pm, self.a, last)?)
                }
                _ => None,
            },
        };
        self.endpoints.insert(key, computed.clone());
        Ok(computed)
    }

    /// All valid histories the agent `x` cannot tell apart from the given
    /// one, the given one included, sorted by key.
    fn members(
        &mut self,
        x: &Agent,
        root: &WorldId,
        actions: &[ActionId],
    ) -> DistResult<Vec<(HistKey, PointedModel)>> {
        let mut roots: BTreeSet<WorldId> = self
            .m
            .model()
            .successors(x, root)?
            .into_iter()
            .collect();
        roots.insert(root.clone());

        let mut prefixes: Vec<HistKey> = roots.into_iter().map(|r| (r, Vec::new())).collect();
        for alpha in actions {
            let mut alts: BTreeSet<ActionId> =
                self.a.successors(x, alpha)?.into_iter().collect();
            alts.insert(alpha.clone());
            let mut extended = Vec::new();
            for (r, acts) in &prefixes {
                for beta in &alts {
                    let mut next = acts.clone();
                    next.push(beta.clone());
                    if self.endpoint(r, &next)?.is_some() {
                        extended.push((r.clone(), next));
                    }
                }
            }
            prefixes = extended;
        }

        let mut out: BTreeMap<HistKey, PointedModel> = BTreeMap::new();
        for (r, acts) in prefixes {
            let pm = self
                .endpoint(&r, &acts)?
                .expect("prefix construction keeps only valid histories");
            out.insert((r, acts), pm);
        }
        Ok(out.into_iter().collect())
    }
}

fn render(key: &HistKey) -> String {
    let (root, actions) = key;
    if actions.is_empty() {
        root.to_string()
    } else {
        let joined = actions
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        format!("{root} | {joined}")
    }
}

struct TreeSearch<'a> {
    space: HistorySpace<'a>,
    split: &'a TeamSplit,
    turn: &'a FiniteDomainVar,
    goal: &'a Formula,
    mode: DeadlockMode,
    horizon: usize,
    budget: usize,
    spent: usize,
    cut: bool,
    assignment: BTreeMap<(Agent, String), ActionId>,
}

impl TreeSearch<'_> {
    /// Discharges every pending obligation under the current assignment,
    /// extending the assignment at the first unassigned class it meets and
    /// backtracking over the choices. `None` means the budget ran out.
    fn solve(
        &mut self,
        mut pending: Vec<(HistKey, PointedModel)>,
        mut seen: BTreeSet<HistKey>,
    ) -> DistResult<Option<bool>> {
        while let Some((key, pm)) = pending.pop() {
            if !seen.insert(key.clone()) {
                continue;
            }
            self.spent += 1;
            if self.spent > self.budget {
                return Ok(None);
            }
            if pm.eval(self.goal)? {
                continue;
            }
            let (root, actions) = key;
            if actions.len() >= self.horizon {
                self.cut = true;
                return Ok(Some(false));
            }
            let x = mover_at(&pm, self.turn)?;
            let own = actions_of(self.space.a, &x);
            if !self.split.is_existential(&x) {
                let mut any = false;
                for alpha in &own {
                    if !executable(&pm, self.space.a, alpha)? {
                        continue;
                    }
                    any = true;
                    let child = apply_pointed(&pm, self.space.a, alpha)?;
                    let mut acts = actions.clone();
                    acts.push(alpha.clone());
                    pending.push(((root.clone(), acts), child));
                }
                if !any && matches!(self.mode, DeadlockMode::Lose) {
                    return Ok(Some(false));
                }
                continue;
            }

            let members = self.space.members(&x, &root, &actions)?;
            let class = render(&members[0].0);
            let slot = (x.clone(), class);
            if let Some(alpha) = self.assignment.get(&slot).cloned() {
                for ((r, acts), endpoint) in &members {
                    if !executable(endpoint, self.space.a, &alpha)? {
                        return Ok(Some(false));
                    }
                    let child = apply_pointed(endpoint, self.space.a, &alpha)?;
                    let mut extended = acts.clone();
                    extended.push(alpha.clone());
                    pending.push(((r.clone(), extended), child));
                }
                continue;
            }

            let mut candidates = Vec::new();
            'actions: for alpha in &own {
                for (_, endpoint) in &members {
                    if !executable(endpoint, self.space.a, alpha)? {
                        continue 'actions;
                    }
                }
                candidates.push(alpha.clone());
            }
            if candidates.is_empty() {
                let mut forced = Vec::with_capacity(members.len());
                for ((r, acts), endpoint) in &members {
                    let mut e = Vec::new();
                    for alpha in &own {
                        if executable(endpoint, self.space.a, alpha)? {
                            e.push(alpha.clone());
                        }
                    }
                    if e.len() != 1 {
                        return Ok(Some(false));
                    }
                    let beta = e.remove(0);
                    let child = apply_pointed(endpoint, self.space.a, &beta)?;
                    let mut extended = acts.clone();
                    extended.push(beta);
                    forced.push(((r.clone(), extended), child));
                }
                pending.extend(forced);
                continue;
            }
            for alpha in candidates {
                self.assignment.insert(slot.clone(), alpha.clone());
                let mut next = pending.clone();
                for ((r, acts), endpoint) in &members {
                    let child = apply_pointed(endpoint, self.space.a, &alpha)?;
                    let mut extended = acts.clone();
                    extended.push(alpha.clone());
                    next.push(((r.clone(), extended), child));
                }
                match self.solve(next, seen.clone())? {
                    None => return Ok(None),
                    Some(true) => return Ok(Some(true)),
                    Some(false) => {
                        self.assignment.remove(&slot);
                    }
                }
            }
            return Ok(Some(false));
        }
        Ok(Some(true))
    }
}

/// Searches for a uniform joint strategy whose every consistent play
/// reaches the goal within `horizon` actions, spending at most `budget`
/// history visits. A negative verdict is exact when no play was cut at the
/// horizon and degrades to within-horizon otherwise.
#[allow(clippy::too_many_arguments)]
pub fn strategy_tree_search(
    m: &PointedModel,
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
    goal: &Formula,
    horizon: usize,
    mode: DeadlockMode,
    budget: usize,
) -> DistResult<DistVerdict> {
    validate_teams(a, split, turn)?;
    let mut search = TreeSearch {
        space: HistorySpace {
            m,
            a,
            endpoints: BTreeMap::new(),
        },
        split,
        turn,
        goal,
        mode,
        horizon,
        budget,
        spent: 0,
        cut: false,
        assignment: BTreeMap::new(),
    };
    let root = ((m.point().clone(), Vec::new()), m.clone());
    match search.solve(vec![root], BTreeSet::new())? {
        None => Ok(DistVerdict::Unknown {
            explored: search.spent,
        }),
        Some(true) => {
            let mut entries: BTreeMap<Agent, BTreeMap<String, ActionId>> = BTreeMap::new();
            for ((agent, class), alpha) in search.assignment {
                entries.entry(agent).or_default().insert(class, alpha);
            }
            Ok(DistVerdict::Yes(DistributedStrategy::ByClass {
                horizon,
                entries,
            }))
        }
        Some(false) => Ok(if search.cut {
            DistVerdict::NoWithinHorizon { horizon }
        } else {
            DistVerdict::No
        }),
    }
}

/// Replay for class-keyed strategies: follows the stored instruction at
/// every existential turn, relocating over the whole look-alike class, and
/// branches universally elsewhere. A class with no action executable at
/// all members but exactly one at each is played as a forced move without
/// consulting the table.
#[allow(clippy::too_many_arguments)]
pub(crate) fn verify_by_class(
    m: &PointedModel,
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
    goal: &Formula,
    horizon: usize,
    entries: &BTreeMap<Agent, BTreeMap<String, ActionId>>,
    mode: DeadlockMode,
    fuel: usize,
) -> DistResult<VerifyOutcome> {
    let mut space = HistorySpace {
        m,
        a,
        endpoints: BTreeMap::new(),
    };
    let mut stack: Vec<(HistKey, PointedModel, Vec<String>)> =
        vec![((m.point().clone(), Vec::new()), m.clone(), Vec::new())];
    let mut seen: BTreeSet<HistKey> = BTreeSet::new();
    let mut spent = 0usize;

    while let Some((key, pm, trace)) = stack.pop() {
        if !seen.insert(key.clone()) {
            continue;
        }
        spent += 1;
        if spent > fuel {
            return Ok(VerifyOutcome::Exhausted { fuel });
        }
        if pm.eval(goal)? {
            continue;
        }
        let (root, actions) = key;
        if actions.len() >= horizon {
            return Ok(VerifyOutcome::Failed {
                reason: "the play runs past the horizon without the goal".to_string(),
                trace,
            });
        }
        let x = mover_at(&pm, turn)?;
        if split.is_existential(&x) {
            let members = space.members(&x, &root, &actions)?;
            let class = render(&members[0].0);
            let own = actions_of(a, &x);
            let mut exec_sets = Vec::with_capacity(members.len());
            for (hk, endpoint) in &members {
                let mut e = Vec::new();
                for alpha in &own {
                    if executable(endpoint, a, alpha)? {
                        e.push(alpha.clone());
                    }
                }
                exec_sets.push((hk, endpoint, e));
            }
            let shared = own
                .iter()
                .any(|alpha| exec_sets.iter().all(|(_, _, e)| e.contains(alpha)));
            if !shared && exec_sets.iter().all(|(_, _, e)| e.len() == 1) {
                for ((r, acts), endpoint, e) in exec_sets {
                    let beta = &e[0];
                    let child = apply_pointed(endpoint, a, beta)?;
                    let mut extended = acts.clone();
                    extended.push(beta.clone());
                    let mut t = trace.clone();
                    t.push(format!(
                        "`{x}` is forced to `{beta}` at `{}`",
                        render(&(r.clone(), acts.clone()))
                    ));
                    stack.push(((r.clone(), extended), child, t));
                }
                continue;
            }
            let Some(alpha) = entries.get(&x).and_then(|by_class| by_class.get(&class))
            else {
                return Ok(VerifyOutcome::Failed {
                    reason: format!("no instruction for `{x}` at class `{class}`"),
                    trace,
                });
            };
            match a.owner(alpha) {
                Ok(OwnerTag::Agent(owner)) if owner == &x => {}
                Ok(tag) => {
                    return Ok(VerifyOutcome::Failed {
                        reason: format!("instruction `{alpha}` belongs to `{tag}`, not `{x}`"),
                        trace,
                    })
                }
                Err(_) => {
                    return Ok(VerifyOutcome::Failed {
                        reason: format!("instruction `{alpha}` names no action"),
                        trace,
                    })
                }
            }
            for ((r, acts), endpoint) in &members {
                if !executable(endpoint, a, alpha)? {
                    return Ok(VerifyOutcome::Failed {
                        reason: format!(
                            "instruction `{alpha}` is not executable at `{}`",
                            render(&(r.clone(), acts.clone()))
                        ),
                        trace,
                    });
                }
                let child = apply_pointed(endpoint, a, alpha)?;
                let mut extended = acts.clone();
                extended.push(alpha.clone());
                let mut t = trace.clone();
                t.push(format!("`{x}` plays `{alpha}` at `{}`", render(&(r.clone(), acts.clone()))));
                stack.push(((r.clone(), extended), child, t));
            }
        } else {
            let mut any = false;
            for alpha in actions_of(a, &x) {
                if !executable(&pm, a, &alpha)? {
                    continue;
                }
                any = true;
                let child = apply_pointed(&pm, a, &alpha)?;
                let mut extended = actions.clone();
                extended.push(alpha.clone());
                let mut t = trace.clone();
                t.push(format!("`{x}` plays `{alpha}`"));
                stack.push(((root.clone(), extended), child, t));
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
