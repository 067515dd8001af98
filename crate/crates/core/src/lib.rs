//! Stochastic convex optimization with multiple objectives.
//!
//! One expected objective is minimized while `m` further expected objectives
//! are kept below user thresholds. The solver runs simultaneous stochastic
//! gradient descent on the primal point and ascent on box-capped Lagrange
//! multipliers, then returns the average of the primal iterates. Two
//! reduction baselines (fixed-weight scalarization and burn-in projected
//! gradient with estimated linear constraints) are included for comparison.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! the experiment runner live in the `stomo-harness` crate.
#![no_std]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod config;
pub mod error;
pub mod math;
pub mod oracle;
pub mod projection;
pub mod solver;
pub mod trace;

pub use config::{
    mu_bound, step_size, DecisionPoint, DualVector, SolverConfig, SolverParams, Thresholds,
};
pub use error::{Error, Result};
pub use oracle::{
    ExpectedFunctions, KnownOptimum, LinearForm, Problem, ProblemSpec, SampledFunctions,
    StochasticOracle,
};
pub use projection::{
    project_ball, project_box, project_halfspaces, project_simplex, Domain, Halfspace,
};
pub use solver::{
    estimate_dual_caps, primal_dual_step, solve, solve_exact, DualCapEstimate,
};
pub use trace::{Evaluation, Method, RunTrace, TraceRecord};
