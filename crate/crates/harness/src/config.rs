//! Experiment configuration files (TOML).
//!
//! ```toml
//! [problem]
//! kind = "quadratic"
//! dim = 5
//! constraints = 2
//!
//! [solver]
//! name = "pd"
//! theta = 1.0
//! delta = 0.01
//!
//! [experiment]
//! horizons = [1000, 10000, 100000]
//! seeds = 20
//! ```
//!
//! Unknown keys are rejected. Derived constants (step size, caps, `G`) are
//! always recomputed and cannot be set here, except that explicit dual caps
//! may replace the `L / tau + theta` default.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stomo_core::Method;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub solver: SolverSettings,
    #[serde(default)]
    pub experiment: ExperimentSettings,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Quadratic {
        dim: usize,
        constraints: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        objective_noise: Option<f64>,
        #[serde(default)]
        constraint_noise: Option<f64>,
        #[serde(default)]
        constraint_scale: Option<f64>,
        #[serde(default)]
        spread: Option<f64>,
    },
    Lp {
        c: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        noise: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    Portfolio {
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        min_return: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    Np {
        gamma: f64,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        positive_mean: Option<Vec<f64>>,
        #[serde(default)]
        negative_mean: Option<Vec<f64>>,
        #[serde(default = "one")]
        std: f64,
        /// Labeled data file; replaces the Gaussian sources when set.
        #[serde(default)]
        data: Option<PathBuf>,
    },
}

impl ProblemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemConfig::Quadratic { .. } => "quadratic",
            ProblemConfig::Lp { .. } => "lp",
            ProblemConfig::Portfolio { .. } => "portfolio",
            ProblemConfig::Np { .. } => "np",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// `pd`, `pd_exact`, `scalarize` or `burn_in`.
    pub name: String,
    #[serde(default = "one")]
    pub theta: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Explicit dual caps; skips the `L / tau + theta` estimate.
    #[serde(default)]
    pub caps: Option<Vec<f64>>,
    /// Scalarization weights `alpha_0..alpha_m`; defaults to all ones.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub step_scale: Option<f64>,
    #[serde(default = "default_burn_fraction")]
    pub burn_fraction: f64,
    #[serde(default)]
    pub relax: Option<Vec<f64>>,
    #[serde(default)]
    pub burn_step: Option<f64>,
}

impl SolverSettings {
    pub fn new(method: Method) -> Self {
        SolverSettings {
            name: method.name().to_string(),
            theta: 1.0,
            delta: default_delta(),
            caps: None,
            weights: None,
            step_scale: None,
            burn_fraction: default_burn_fraction(),
            relax: None,
            burn_step: None,
        }
    }

    pub fn method(&self) -> Result<Method> {
        Method::from_name(&self.name).ok_or_else(|| {
            Error::Config(format!(
                "unknown solver `{}` (expected pd, pd_exact, scalarize or burn_in)",
                self.name
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    /// Analytic expectations when the problem has them, Monte Carlo otherwise.
    #[default]
    Auto,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    #[serde(default = "default_horizons")]
    pub horizons: Vec<u64>,
    /// Number of seeds per horizon.
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub first_seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub evaluation: EvaluationMode,
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    /// When false, `wall_ms` is written as 0 so reruns are byte-identical.
    #[serde(default = "yes")]
    pub record_wall_time: bool,
    #[serde(default = "yes")]
    pub write_traces: bool,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            horizons: default_horizons(),
            seeds: default_seeds(),
            first_seed: 0,
            out: None,
            threads: 0,
            evaluation: EvaluationMode::Auto,
            eval_samples: default_eval_samples(),
            record_wall_time: true,
            write_traces: true,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_delta() -> f64 {
    0.01
}

fn default_burn_fraction() -> f64 {
    0.3
}

fn default_horizons() -> Vec<u64> {
    vec![1000]
}

fn default_seeds() -> u64 {
    1
}

fn default_eval_samples() -> usize {
    1_000_000
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        // Data paths are relative to the config file.
        if let ProblemConfig::Np { data: Some(p), .. } = &mut cfg.problem {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.method()?;
        let ex = &self.experiment;
        if ex.horizons.is_empty() {
            return Err(Error::Config("experiment.horizons is empty".into()));
        }
        if ex.horizons[0] == 0 {
            return Err(Error::Config("horizons must be at least 1".into()));
        }
        if ex.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("experiment.horizons must be strictly increasing".into()));
        }
        if ex.seeds == 0 {
            return Err(Error::Config("experiment.seeds must be at least 1".into()));
        }
        if ex.eval_samples < 2 {
            return Err(Error::Config("experiment.eval_samples must be at least 2".into()));
        }
        Ok(())
    }
}
