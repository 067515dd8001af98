//! Reduction baselines: fixed-weight scalarization and burn-in projected
//! gradient descent on estimated linear constraints.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{DecisionPoint, DualVector, Thresholds};
use crate::error::{Error, Result};
use crate::math::{self, axpy};
use crate::oracle::{ExpectedFunctions, ProblemSpec, SampledFunctions, StochasticOracle};
use crate::projection::{project_halfspaces, Domain, Halfspace};
use crate::trace::{should_log, BurnInReport, Method, RunTrace, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarizeSettings {
    /// `alpha_0, ..., alpha_m`.
    pub weights: Vec<f64>,
    pub horizon: u64,
    /// `c` in `eta_t = c / sqrt(t)`; defaults to `R / L`.
    pub step_scale: Option<f64>,
    pub seed: u64,
}

/// Projected SGD on `sum_i alpha_i f_t^i` with step `c / sqrt(t)`.
/// No feasibility guarantee.
pub fn scalarize<O: StochasticOracle + ?Sized>(
    spec: &ProblemSpec,
    oracle: &mut O,
    settings: &ScalarizeSettings,
) -> Result<RunTrace> {
    let d = spec.dim;
    let m = spec.constraints;
    let alpha = &settings.weights;
    if alpha.len() != m + 1 {
        return Err(Error::Dimension { expected: m + 1, actual: alpha.len() });
    }
    if alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
        return Err(Error::config("scalarization weights must be finite and nonnegative"));
    }
    if alpha.iter().all(|&a| a == 0.0) {
        return Err(Error::config("scalarization weights are all zero"));
    }
    if alpha[0] <= 0.0 {
        return Err(Error::config("the objective weight alpha_0 must be positive"));
    }
    if settings.horizon == 0 {
        return Err(Error::config("horizon must be at least 1"));
    }
    check_oracle(oracle, d, m)?;
    let c = settings.step_scale.unwrap_or(spec.domain.radius() / spec.lipschitz);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::config(format!("step scale must be positive, got {c}")));
    }

    let domain = spec.domain;
    let horizon = settings.horizon;
    let mut w = domain.initial_point(d);
    let mut sum = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut log = Vec::new();
    let mut error = None;
    let mut iterates = 0;
    for t in 1..=horizon {
        let sample = oracle.draw();
        axpy(1.0, &w, &mut sum);
        iterates = t;
        if should_log(t, horizon) {
            log.push(TraceRecord {
                t,
                w: w.clone(),
                lambda: Vec::new(),
                losses: (0..=m).map(|i| sample.value_at(&w, i)).collect(),
            });
        }
        dir.iter_mut().for_each(|v| *v = 0.0);
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                sample.grad_into(&w, i, &mut grad);
                axpy(a, &grad, &mut dir);
            }
        }
        if !math::all_finite(&dir) {
            error = Some(Error::NonFinite { what: "gradient", iteration: t });
            break;
        }
        axpy(-c / math::sqrt(t as f64), &dir, &mut w);
        domain.project_mut(&mut w);
    }
    sum.iter_mut().for_each(|v| *v /= iterates.max(1) as f64);
    Ok(RunTrace {
        method: Method::Scalarized,
        horizon,
        seed: settings.seed,
        step_size: c,
        gradient_bound: f64::NAN,
        thresholds: Thresholds::new(spec.gamma.clone()),
        iterate_log: log,
        averaged: DecisionPoint::new(sum),
        iterations: iterates,
        final_dual: DualVector::zeros(0),
        eval: None,
        wall_ms: None,
        error,
        burn_in: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurnInSettings {
    /// Fraction `b` of the horizon spent estimating the constraints.
    pub fraction: f64,
    /// Relaxation added to each threshold; defaults to
    /// `2 sigma_i / sqrt(bT)` with `sigma_i` the estimated standard deviation
    /// of `f_t^i` over the ball.
    pub relax: Option<Vec<f64>>,
    pub horizon: u64,
    /// Constant step size; defaults to `R / (L sqrt(T - bT))`.
    pub step: Option<f64>,
    pub seed: u64,
}

impl BurnInSettings {
    /// Number of estimation draws, `ceil(bT)`.
    pub fn burn_in(&self) -> u64 {
        libm::ceil(self.fraction * self.horizon as f64) as u64
    }
}

/// Running mean and variance of one linear constraint's coefficients.
struct CoefficientStats {
    mean: Vec<f64>,
    m2: Vec<f64>,
    offset_mean: f64,
    offset_m2: f64,
}

impl CoefficientStats {
    fn new(d: usize) -> Self {
        CoefficientStats { mean: vec![0.0; d], m2: vec![0.0; d], offset_mean: 0.0, offset_m2: 0.0 }
    }

    fn push(&mut self, n: u64, coeffs: &[f64], offset: f64) {
        let n = n as f64;
        for ((mu, m2), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(coeffs) {
            let delta = x - *mu;
            *mu += delta / n;
            *m2 += delta * (x - *mu);
        }
        let delta = offset - self.offset_mean;
        self.offset_mean += delta / n;
        self.offset_m2 += delta * (offset - self.offset_mean);
    }

    /// `sqrt(sum_j var(a_j)) R + sd(offset)` from `n` draws.
    fn spread(&self, n: u64, radius: f64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let denom = (n - 1) as f64;
        math::sqrt(self.m2.iter().sum::<f64>() / denom) * radius + math::sqrt(self.offset_m2 / denom)
    }
}

/// Spends the first `ceil(bT)` draws estimating the (linear) constraints,
/// then runs projected SGD on the objective over the estimated feasible set
/// intersected with the ball. Returns the average of post-burn-in iterates.
///
/// `expected`, when given, is used only for reporting.
pub fn burn_in_pgd<O: StochasticOracle + ?Sized>(
    spec: &ProblemSpec,
    expected: Option<&dyn ExpectedFunctions>,
    oracle: &mut O,
    settings: &BurnInSettings,
) -> Result<RunTrace> {
    let d = spec.dim;
    let m = spec.constraints;
    let b = settings.fraction;
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::config(format!("burn-in fraction must lie in (0, 1), got {b}")));
    }
    let horizon = settings.horizon;
    let burn = settings.burn_in();
    if burn >= horizon {
        return Err(Error::config(format!(
            "burn-in uses {burn} of {horizon} draws and leaves none for optimization"
        )));
    }
    let radius = match spec.domain {
        Domain::Ball { radius } => radius,
        Domain::Simplex { .. } => {
            return Err(Error::config("burn-in projection is implemented for the ball domain only"))
        }
    };
    check_oracle(oracle, d, m)?;
    if let Some(r) = &settings.relax {
        if r.len() != m {
            return Err(Error::Dimension { expected: m, actual: r.len() });
        }
    }

    let mut stats: Vec<CoefficientStats> = (0..m).map(|_| CoefficientStats::new(d)).collect();
    for t in 1..=burn {
        let sample = oracle.draw();
        for (i, st) in stats.iter_mut().enumerate() {
            let lf = sample.linear_form(i + 1).ok_or(Error::NonLinearConstraint(i + 1))?;
            st.push(t, lf.coeffs, lf.offset);
        }
    }
    let relax = match &settings.relax {
        Some(r) => r.clone(),
        None => {
            let root = math::sqrt(burn as f64);
            stats.iter().map(|s| 2.0 * s.spread(burn, radius) / root).collect()
        }
    };
    // <a_hat, w> + o_hat <= gamma + relax
    let halfspaces: Vec<Halfspace> = stats
        .iter()
        .zip(&spec.gamma)
        .zip(&relax)
        .map(|((s, g), r)| Halfspace::new(s.mean.clone(), g + r - s.offset_mean))
        .collect();

    let estimation_error = expected.and_then(|e| {
        (1..=m)
            .map(|i| {
                let lf = e.linear_form(i)?;
                let s = &stats[i - 1];
                Some(
                    math::dist(&s.mean, lf.coeffs) * radius + (s.offset_mean - lf.offset).abs(),
                )
            })
            .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
    });

    let n = horizon - burn;
    let eta = settings.step.unwrap_or(radius / (spec.lipschitz * math::sqrt(n as f64)));
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::config(format!("step size must be positive, got {eta}")));
    }
    let mut w = project_halfspaces(&spec.domain.initial_point(d), &halfspaces, radius)?;
    let mut sum = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut cumulative = expected.map(|_| vec![0.0; m]);
    let mut log = Vec::new();
    let mut error = None;
    let mut iterates = 0;
    for k in 1..=n {
        let t = burn + k;
        debug_assert!(halfspaces.iter().all(|h| h.violation(&w) <= 1e-7));
        let sample = oracle.draw();
        axpy(1.0, &w, &mut sum);
        iterates = k;
        if let (Some(e), Some(cum)) = (expected, cumulative.as_mut()) {
            for (i, c) in cum.iter_mut().enumerate() {
                *c += (e.value(&w, i + 1) - spec.gamma[i]).max(0.0);
            }
        }
        if should_log(k, n) {
            log.push(TraceRecord {
                t,
                w: w.clone(),
                lambda: Vec::new(),
                losses: (0..=m).map(|i| sample.value_at(&w, i)).collect(),
            });
        }
        sample.grad_into(&w, 0, &mut grad);
        if !math::all_finite(&grad) {
            error = Some(Error::NonFinite { what: "gradient", iteration: t });
            break;
        }
        axpy(-eta, &grad, &mut w);
        match project_halfspaces(&w, &halfspaces, radius) {
            Ok(z) => w = z,
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    sum.iter_mut().for_each(|v| *v /= iterates.max(1) as f64);
    Ok(RunTrace {
        method: Method::BurnIn,
        horizon,
        seed: settings.seed,
        step_size: eta,
        gradient_bound: f64::NAN,
        thresholds: Thresholds::new(spec.gamma.clone()),
        iterate_log: log,
        averaged: DecisionPoint::new(sum),
        iterations: iterates,
        final_dual: DualVector::zeros(0),
        eval: None,
        wall_ms: None,
        error,
        burn_in: Some(BurnInReport {
            burn_in: burn,
            relax,
            estimation_error,
            cumulative_violation: cumulative,
        }),
    })
}

fn check_oracle<O: StochasticOracle + ?Sized>(oracle: &O, d: usize, m: usize) -> Result<()> {
    if oracle.dim() != d {
        return Err(Error::Dimension { expected: d, actual: oracle.dim() });
    }
    if oracle.num_constraints() != m {
        return Err(Error::Dimension { expected: m, actual: oracle.num_constraints() });
    }
    Ok(())
}
