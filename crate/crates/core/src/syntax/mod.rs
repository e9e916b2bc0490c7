//! Concrete syntax: a shared lexer, the formula parser, and the
//! problem-file parser and writer.
//!
//! All input formats are UTF-8 text; `#` starts a comment that runs to the
//! end of the line. Errors carry 1-based line and column positions.

mod formula;
mod lexer;
mod problem;

pub use formula::parse_formula;
pub use lexer::{ParseError, ParseResult};
pub use problem::{parse_problem, write_problem};
