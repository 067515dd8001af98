//! Run traces returned by the solvers.

use alloc::vec::Vec;

use crate::config::{DecisionPoint, DualVector, Thresholds};
use crate::error::Error;
use crate::oracle::ExpectedFunctions;

/// Target number of logged iterations per run.
pub const LOG_POINTS: u64 = 1000;

/// Iterations between logged records: `ceil(T / 1000)`.
pub fn log_interval(horizon: u64) -> u64 {
    horizon.div_ceil(LOG_POINTS).max(1)
}

pub(crate) fn should_log(t: u64, horizon: u64) -> bool {
    (t - 1).is_multiple_of(log_interval(horizon)) || t == horizon
}

/// State at the start of iteration `t` and the sampled losses there.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `f_t^i(w_t)` for `i = 0..=m`.
    pub losses: Vec<f64>,
}

/// Exact expected values at the averaged solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub constraints: Vec<f64>,
}

impl Evaluation {
    pub fn of(expected: &dyn ExpectedFunctions, w: &[f64], m: usize) -> Self {
        Evaluation {
            objective: expected.value(w, 0),
            constraints: (1..=m).map(|i| expected.value(w, i)).collect(),
        }
    }

    /// `f̄_i(w) - gamma_i` per constraint.
    pub fn violations(&self, gamma: &[f64]) -> Vec<f64> {
        self.constraints.iter().zip(gamma).map(|(f, g)| f - g).collect()
    }

    /// Largest `f̄_i(w) - gamma_i`, or `-inf` without constraints.
    pub fn max_violation(&self, gamma: &[f64]) -> f64 {
        self.violations(gamma).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    PrimalDual,
    PrimalDualExact,
    Scalarized,
    BurnIn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PrimalDual => "pd",
            Method::PrimalDualExact => "pd_exact",
            Method::Scalarized => "scalarize",
            Method::BurnIn => "burn_in",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Method::PrimalDual, Method::PrimalDualExact, Method::Scalarized, Method::BurnIn]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

/// Extra output of the burn-in baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BurnInReport {
    /// Draws spent on estimation, `ceil(bT)`.
    pub burn_in: u64,
    pub relax: Vec<f64>,
    /// `max_i sup_{||w|| <= R} |f̂_i(w) - f̄_i(w)|`, when the true linear
    /// forms are known.
    pub estimation_error: Option<f64>,
    /// `sum_{t > bT} max(0, f̄_i(w_t) - gamma_i)` per constraint, when the
    /// expectations are known.
    pub cumulative_violation: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: Method,
    pub horizon: u64,
    pub seed: u64,
    /// Constant step size, or the scale `c` of a `c / sqrt(t)` schedule.
    pub step_size: f64,
    /// `G` used for the step size (`G'` for the exact variant).
    pub gradient_bound: f64,
    pub thresholds: Thresholds,
    pub iterate_log: Vec<TraceRecord>,
    /// Mean of all primal iterates.
    pub averaged: DecisionPoint,
    /// Number of iterates in the average.
    pub iterations: u64,
    pub final_dual: DualVector,
    pub eval: Option<Evaluation>,
    /// Filled by callers that have a clock.
    pub wall_ms: Option<f64>,
    /// Set when the run stopped early; the other fields describe the
    /// iterations completed before the failure.
    pub error: Option<Error>,
    pub burn_in: Option<BurnInReport>,
}

impl RunTrace {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    /// Evaluates the expected functions at the averaged solution and stores
    /// the result.
    pub fn evaluate(&mut self, expected: &dyn ExpectedFunctions) -> &Evaluation {
        let m = self.thresholds.len();
        self.eval.insert(Evaluation::of(expected, self.averaged.as_slice(), m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_thinning() {
        assert_eq!(log_interval(1), 1);
        assert_eq!(log_interval(1000), 1);
        assert_eq!(log_interval(1001), 2);
        assert_eq!(log_interval(100_000), 100);
        let logged = (1..=100_000).filter(|&t| should_log(t, 100_000)).count();
        assert_eq!(logged, 1001);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::PrimalDual, Method::PrimalDualExact, Method::Scalarized, Method::BurnIn] {
            assert_eq!(Method::from_name(m.name()), Some(m));
        }
        assert_eq!(Method::from_name("sgd"), None);
    }
}
