//! Experiment harness for `stomo-core`: configuration files, problem
//! construction, seed-replicated runs, rate fitting, oracle validation and
//! CSV/JSON output.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod output;
pub mod problem;
pub mod rate;
pub mod run;
pub mod validate;

pub use config::{ExperimentConfig, ExperimentSettings, ProblemConfig, SolverSettings};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentReport, HorizonSummary};
pub use problem::AnyProblem;
pub use rate::{fit_rate, RateFit};
pub use run::{run_single, RunResult};
