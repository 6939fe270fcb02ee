//! Joint bandwidth/power allocation and UAV trajectory design that trades
//! sum throughput against user fairness through a single factor `α`.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: the validated problem instance;
//! - [`channel`]: elevation-dependent Rician channel and per-slot rates;
//! - [`fairness`]: the softmin-weighted combiner `H_α` and fairness metrics;
//! - [`convex_core`]: the barrier interior-point solver used by both blocks;
//! - [`allocation`]: per-slot bandwidth/power subproblems;
//! - [`trajectory`]: the successive-convex-approximation trajectory step;
//! - [`optimizer`]: the alternating driver, max-min driver and `α` sweeps;
//! - [`cli`]: command-line front end and result files.

pub mod allocation;
pub mod channel;
pub mod cli;
pub mod convex_core;
pub mod error;
pub mod fairness;
pub mod matrix;
pub mod optimizer;
pub mod scenario;
pub mod trajectory;

pub use allocation::Allocation;
pub use channel::Trajectory;
pub use error::{Error, Result};
pub use fairness::FairnessFactor;
pub use matrix::Matrix;
pub use optimizer::SolveReport;
pub use scenario::{load_scenario, Scenario};
