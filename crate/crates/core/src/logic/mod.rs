//! Epistemic logic: formulas, pointed models, model checking, and the
//! normalization pipeline (component restriction, bisimulation contraction,
//! canonical keys) that the search algorithms memoize on.

mod canon;
mod formula;
mod model;
mod normalize;

pub use canon::{canonical_key, CanonicalKey};
pub use formula::{Agent, Atom, Formula};
pub use model::{EpistemicModel, ModelError, ModelResult, PointedModel, S5Violation, WorldId};
pub use normalize::{bisim_contract, restrict_to_component};
