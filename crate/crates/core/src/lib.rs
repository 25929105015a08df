//! Closed-form dynamic-programming solution of the surprise-maximization
//! problem, plus independent checks of it.
//!
//! An exam falls on one of `m` days with probabilities `p_1, …, p_m`. If it
//! falls on day `j`, the student's surprise is `ln(T_j / p_j)` where
//! `T_j = p_j + … + p_m`. The distribution with the largest expected surprise
//! comes from a one-line recursion:
//!
//! ```
//! use surprise_core::{rollout, Days};
//!
//! let solution = rollout(Days::new(3)?);
//! let p = solution.policy.allocations();
//! assert!((p[0] - 0.2546463800435825).abs() < 1e-15);
//! // expected surprise γ_0 − 1
//! assert!((solution.objective.expected_surprise - 0.6225258212150249).abs() < 1e-12);
//! # Ok::<(), surprise_core::Error>(())
//! ```
//!
//! Modules:
//!
//! - [`objective`]: the two objective functions, tail masses, gradient.
//! - [`dp`]: γ recursion, policy, value function, rollout, residuals.
//! - [`oracle`]: grid search, exponentiated-gradient ascent, finite
//!   differences, stage scans.
//! - [`simulator`]: seeded Monte Carlo estimate of expected surprise.
//!
//! The guide in `book/` walks through the same material; its code blocks run
//! as doctests of this crate.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dp;
mod error;
pub mod objective;
pub mod oracle;
pub mod simulator;

pub use dp::{rollout, Days, GammaSequence, PolicyRow, PolicyTable, SolveResult};
pub use error::{Error, Result};
pub use objective::{
    eval_sm1, eval_sm2, gradient_sm2, realized_surprise, tail_masses, ObjectiveValue,
    ProbabilityVector, TailMasses, SIMPLEX_TOLERANCE,
};
pub use oracle::{
    ascent_optimize, finite_diff_gradient, grid_search, scan_stage, AscentConfig, GridSense,
    GridSpec, OracleReport, StageScan,
};
pub use simulator::{estimate_expected_surprise, sample_day, SimulationConfig, SimulationResult};

// The guide's code blocks are compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/objectives.md")]
    mod objectives {}
    #[doc = include_str!("../../../book/src/dynamic-programming.md")]
    mod dynamic_programming {}
    #[doc = include_str!("../../../book/src/rollout.md")]
    mod rollout {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
