//! Exact quantum query algorithms for the iterated 3-bit not-all-equal
//! function, NE^d.
//!
//! The crate has three layers:
//!
//! - an exact rational calculus ([`pcalc`]) for the p-values and query
//!   counts of composed algorithms, driven by a small plan language
//!   ([`plan`]),
//! - a matrix-free state-vector simulator ([`sim`]) that realizes any plan
//!   as the concrete unitary sequence it describes and measures start-state
//!   overlaps, with a verification harness ([`verify`]) and hard-coded
//!   small-case fixtures ([`fixtures`]),
//! - a planner ([`planner`]) that searches compositions of the three
//!   building moves for the best query exponent.
//!
//! A plan is written in a one-line grammar, e.g.
//! `amplify(2, lift(0, iterate(iterate(base))))` is an 8-query plan whose
//! final state is exactly the start state on NE^2 = 0 inputs and exactly its
//! negation on NE^2 = 1 inputs.

pub mod error;
pub mod fixtures;
pub mod pcalc;
pub mod plan;
pub mod planner;
pub mod presets;
pub mod rational;
pub mod sim;
pub mod verify;

pub use error::Error;
pub use plan::{eval_ne, eval_ne_d, parse_plan, render_plan, InputAssignment, Plan};
pub use rational::Rational;
pub use sim::{OverlapResult, Simulator, StateVector};

pub type Result<T> = std::result::Result<T, Error>;

/// Default tolerance for overlap checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default tolerance for norm and orthogonality checks.
pub const NORM_TOL: f64 = 1e-10;
