//! Distributed uniform-strategy synthesis for a team of imperfectly
//! informed agents against a universal team.
//!
//! Whose turn it is lives inside the models as a one-hot finite-domain
//! variable. The solvers read the mover from the turn atoms at the point,
//! branch existentially on the mover's own actions when the mover belongs
//! to the existential team, and universally otherwise. Uniformity is
//! enforced structurally: a strategy entry is keyed by what the mover can
//! observe, never by the actual position, so indistinguishable positions
//! cannot receive different instructions.

mod align;
mod arena;
mod hypotheses;
mod solve;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::dynamics::{ActionId, ActionModel, DynamicsError, FiniteDomainVar, OwnerTag};
use crate::game::GameError;
use crate::logic::{
    canonical_key, Agent, CanonicalKey, ModelError, PointedModel, WorldId,
};

pub use arena::{build_multiplayer_arena, hierarchy, Hierarchy, MultiArena, MultiVertexIx};
pub use hypotheses::{check_hypotheses, check_hypotheses_with, CheckOutcome, HypothesesReport};
pub use solve::{
    solve_distributed_announcements, solve_distributed_public, verify_distributed_strategy,
};
pub use tree::{strategy_tree_search, DEFAULT_TREE_BUDGET};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("agent `{0}` appears on both sides of the team split")]
    Overlap(Agent),
}

/// Partition of the agent set into the existential team (the agents being
/// synthesized for) and the universal team (the adversaries).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TeamSplit {
    existential: BTreeSet<Agent>,
    universal: BTreeSet<Agent>,
}

impl TeamSplit {
    pub fn new(
        existential: impl IntoIterator<Item = Agent>,
        universal: impl IntoIterator<Item = Agent>,
    ) -> Result<Self, SplitError> {
        let existential: BTreeSet<Agent> = existential.into_iter().collect();
        let universal: BTreeSet<Agent> = universal.into_iter().collect();
        if let Some(both) = existential.intersection(&universal).next() {
            return Err(SplitError::Overlap(both.clone()));
        }
        Ok(TeamSplit {
            existential,
            universal,
        })
    }

    pub fn existential(&self) -> &BTreeSet<Agent> {
        &self.existential
    }

    pub fn universal(&self) -> &BTreeSet<Agent> {
        &self.universal
    }

    pub fn is_existential(&self, a: &Agent) -> bool {
        self.existential.contains(a)
    }

    pub fn is_universal(&self, a: &Agent) -> bool {
        self.universal.contains(a)
    }

    /// All agents of the split, both sides.
    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.existential.iter().chain(self.universal.iter())
    }
}

#[derive(Error, Debug)]
pub enum DistributedError {
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("this solver requires {0}")]
    MethodRequires(&'static str),
    #[error("hypothesis `{name}` does not hold: {reason}")]
    Hypotheses { name: &'static str, reason: String },
    #[error("world `{world}` holds turn values [{values}], expected exactly one")]
    TurnUnreadable { world: WorldId, values: String },
    #[error("turn value `{0}` belongs to neither team of the split")]
    TurnNotInSplit(String),
    #[error("action `{action}` is owned by `{owner}`; distributed solving needs per-agent owners")]
    BadOwner { action: ActionId, owner: String },
    #[error("arena vertex `{vertex}` holds turn values [{values}], expected exactly one")]
    AmbiguousOwner { vertex: String, values: String },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Game(#[from] GameError),
}

pub type DistResult<T> = Result<T, DistributedError>;

/// A joint strategy for the existential team. Entries are grouped per
/// agent and keyed by that agent's information state, so the map cannot
/// express two different instructions for positions the agent cannot tell
/// apart. The key shape depends on which solver produced the strategy.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DistributedStrategy {
    /// Keys carry the round index next to the observation.
    ByRound {
        bound: usize,
        entries: BTreeMap<Agent, BTreeMap<(CanonicalKey, usize), ActionId>>,
    },
    /// Keys are observations alone.
    Positional {
        entries: BTreeMap<Agent, BTreeMap<CanonicalKey, ActionId>>,
    },
    /// Keys name equivalence classes of histories, rendered as the least
    /// class member (`root` or `root | action action ...`).
    ByClass {
        horizon: usize,
        entries: BTreeMap<Agent, BTreeMap<String, ActionId>>,
    },
}

impl DistributedStrategy {
    /// Total number of instructions across the team.
    pub fn len(&self) -> usize {
        match self {
            DistributedStrategy::ByRound { entries, .. } => {
                entries.values().map(BTreeMap::len).sum()
            }
            DistributedStrategy::Positional { entries } => {
                entries.values().map(BTreeMap::len).sum()
            }
            DistributedStrategy::ByClass { entries, .. } => {
                entries.values().map(BTreeMap::len).sum()
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Agents that have at least one instruction.
    pub fn agents(&self) -> Vec<Agent> {
        match self {
            DistributedStrategy::ByRound { entries, .. } => entries.keys().cloned().collect(),
            DistributedStrategy::Positional { entries } => entries.keys().cloned().collect(),
            DistributedStrategy::ByClass { entries, .. } => entries.keys().cloned().collect(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DistVerdict {
    Yes(DistributedStrategy),
    No,
    /// The bounded search exhausted the horizon without finding a winning
    /// strategy; longer plays might still admit one.
    NoWithinHorizon { horizon: usize },
    /// The search gave up before covering the space.
    Unknown { explored: usize },
}

impl DistVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, DistVerdict::Yes(_))
    }
}

impl fmt::Display for DistVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistVerdict::Yes(_) => write!(f, "yes"),
            DistVerdict::No => write!(f, "no"),
            DistVerdict::NoWithinHorizon { horizon } => {
                write!(f, "no within horizon {horizon}")
            }
            DistVerdict::Unknown { explored } => {
                write!(f, "unknown after exploring {explored} nodes")
            }
        }
    }
}

/// The agent whose turn it is at the point of `pm`.
pub(crate) fn mover_at(pm: &PointedModel, turn: &FiniteDomainVar) -> DistResult<Agent> {
    let atoms = pm.model().world_atoms(pm.point())?;
    match turn.read(atoms) {
        Some(value) => Ok(Agent::new(value)),
        None => Err(DistributedError::TurnUnreadable {
            world: pm.point().clone(),
            values: turn.holding(atoms).join(", "),
        }),
    }
}

/// The worlds the mover cannot tell apart from the point, point included.
pub(crate) fn observation_cell(pm: &PointedModel, x: &Agent) -> DistResult<Vec<WorldId>> {
    let mut cell: BTreeSet<WorldId> = pm
        .model()
        .successors(x, pm.point())?
        .into_iter()
        .collect();
    cell.insert(pm.point().clone());
    Ok(cell.into_iter().collect())
}

/// What the mover observes at `pm`: the least canonical key over all
/// re-pointings within the mover's observation cell. Every position in the
/// cell yields the same key, which is what makes strategies keyed on it
/// uniform by construction.
pub(crate) fn information_key(pm: &PointedModel, x: &Agent) -> DistResult<CanonicalKey> {
    let mut best: Option<CanonicalKey> = None;
    for w in observation_cell(pm, x)? {
        let key = canonical_key(&pm.repoint(w)?);
        best = Some(match best {
            Some(b) if b <= key => b,
            _ => key,
        });
    }
    Ok(best.expect("observation cell contains the point"))
}

/// Checks that every turn value names an agent on one of the two teams and
/// that every action has a per-agent owner.
pub(crate) fn validate_teams(
    a: &ActionModel,
    split: &TeamSplit,
    turn: &FiniteDomainVar,
) -> DistResult<()> {
    for value in turn.domain() {
        let agent = Agent::new(value.clone());
        if !split.is_existential(&agent) && !split.is_universal(&agent) {
            return Err(DistributedError::TurnNotInSplit(value.clone()));
        }
    }
    for id in a.actions() {
        match a.owner(id)? {
            OwnerTag::Agent(_) => {}
            tag => {
                return Err(DistributedError::BadOwner {
                    action: id.clone(),
                    owner: tag.to_string(),
                })
            }
        }
    }
    Ok(())
}

/// Actions owned by `x`, in sorted order.
pub(crate) fn actions_of(a: &ActionModel, x: &Agent) -> Vec<ActionId> {
    a.actions_owned_by(&OwnerTag::Agent(x.clone()))
}
