//! Encoders that turn classical decision problems into solver instances,
//! paired with small independent oracles for differential testing.
//!
//! Quantified Boolean formulas become announcement games for one agent,
//! nondeterministic planning and variable-flipping formula games become
//! public-action controller games, and two-versus-one team games on a
//! binary-alphabet DFA become distributed synthesis instances. Each
//! encoder returns the assembled parts rather than a finished [`Problem`]
//! so callers can inspect or solve them directly; `into_problem` runs the
//! full instance validation.

mod condplan;
mod g4;
mod parse;
mod qbf;
mod teamdfa;

pub use condplan::{condplan_to_controller, CondPlanAction};
pub use g4::{g4_brute_force, g4_to_controller, G4Instance, TERM_WIDTH_LIMIT};
pub use parse::{parse_condplan, parse_dfa, parse_g4, parse_qbf};
pub use qbf::{qbf_brute_force, qbf_to_controller, QbfInstance, Quantifier};
pub use teamdfa::{teamdfa_bounded, teamdfa_to_distributed, StateEncoding, TeamDfaInstance};

use thiserror::Error;

use crate::distributed::{DistributedError, SplitError, TeamSplit};
use crate::dynamics::{ActionModel, DynamicsError, FiniteDomainVar};
use crate::logic::{Agent, Formula, ModelError, PointedModel};
use crate::problem::{Mode, Problem, ProblemResult};

#[derive(Error, Debug)]
pub enum ReductionError {
    /// An input file failed to parse; `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// The quantifier prefix does not strictly alternate starting
    /// existentially with an even number of variables; see
    /// [`QbfInstance::normalize`].
    #[error("prefix is not in normal form: {0}")]
    NotNormalized(String),
    /// The instance violates a structural requirement of its problem kind.
    #[error("{0}")]
    BadInstance(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Distributed(#[from] DistributedError),
}

impl From<SplitError> for ReductionError {
    fn from(e: SplitError) -> Self {
        ReductionError::Distributed(e.into())
    }
}

pub type RedResult<T> = Result<T, ReductionError>;

fn bad(message: impl Into<String>) -> ReductionError {
    ReductionError::BadInstance(message.into())
}

/// A controller-mode instance assembled by an encoder.
#[derive(Clone, Debug)]
pub struct ControllerEncoding {
    pub agents: Vec<Agent>,
    pub model: PointedModel,
    pub actions: ActionModel,
    pub goal: Formula,
    /// Caveats a writer should copy into an emitted file as comments.
    pub notes: Vec<String>,
}

impl ControllerEncoding {
    /// Packages the parts as a validated controller-mode [`Problem`].
    pub fn into_problem(self) -> ProblemResult<Problem> {
        Problem::new(
            self.agents,
            self.model,
            self.actions,
            None,
            Mode::Controller,
            None,
            None,
            self.goal,
        )
    }
}

/// A distributed-mode instance assembled by an encoder.
#[derive(Clone, Debug)]
pub struct DistributedEncoding {
    pub agents: Vec<Agent>,
    pub model: PointedModel,
    pub actions: ActionModel,
    pub turn: FiniteDomainVar,
    pub existential: Vec<Agent>,
    pub goal: Formula,
    /// Caveats a writer should copy into an emitted file as comments.
    pub notes: Vec<String>,
}

impl DistributedEncoding {
    /// Packages the parts as a validated distributed-mode [`Problem`].
    pub fn into_problem(self) -> ProblemResult<Problem> {
        Problem::new(
            self.agents,
            self.model,
            self.actions,
            None,
            Mode::Distributed,
            Some(self.turn),
            Some(self.existential),
            self.goal,
        )
    }

    /// The team split induced by the declared existential agents.
    pub fn split(&self) -> Result<TeamSplit, SplitError> {
        let universal: Vec<Agent> = self
            .agents
            .iter()
            .filter(|a| !self.existential.contains(a))
            .cloned()
            .collect();
        TeamSplit::new(self.existential.iter().cloned(), universal)
    }
}

/// Whether `s` is a plain identifier: a letter or underscore followed by
/// letters, digits and underscores. Plain identifiers never contain `@`,
/// which keeps user atoms clear of the `name@value` atoms the encoders
/// introduce.
pub(crate) fn plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Whether `s` can stand to the right of `@` in an atom: nonempty, letters,
/// digits and underscores only.
pub(crate) fn value_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}
