//! Reachability games on epistemic models.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`logic`] — epistemic formulas, Kripke-style pointed models, model
//!   checking, bisimulation contraction and canonical keys;
//! * [`syntax`] — parsers and printers for the formula and problem-file DSL;
//! * [`dynamics`] — action models, product update, action classification;
//! * [`planning`] — sequential plan existence and plan verification;
//! * [`game`] — explicit two-player arenas and attractor solving;
//! * [`controller`] — controller synthesis against an adversarial
//!   environment (alternating search, configuration-graph fixpoints, and an
//!   explicit-arena pipeline for propositional instances);
//! * [`distributed`] — uniform-strategy synthesis for a team of imperfectly
//!   informed agents, plus the hypothesis checks the solvers rely on;
//! * [`reductions`] — encoders that translate QBF, token-flipping games,
//!   conditional planning and DFA team games into the above instances,
//!   together with independent brute-force oracles;
//! * [`certificate`] / [`report`] — strategy certificate files and
//!   machine-readable result records.

pub mod certificate;
pub mod controller;
pub mod distributed;
pub mod dynamics;
pub mod game;
pub mod logic;
pub mod planning;
pub mod problem;
pub mod reductions;
pub mod report;
pub mod syntax;
