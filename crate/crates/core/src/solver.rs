//! Primal-dual stochastic gradient method with capped multipliers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{step_size, DecisionPoint, DualVector, SolverConfig, Thresholds};
use crate::error::{Error, Result};
use crate::math::{self, axpy};
use crate::oracle::{
    probe_feasibility, seeded_rng, ExpectedFunctions, Problem, SampledFunctions, StochasticOracle,
};
use crate::projection::Domain;
use crate::trace::{should_log, Method, RunTrace, TraceRecord};

/// Random probes used to bound the constraint deviation of nonlinear
/// expected constraints.
pub const DEVIATION_PROBES: usize = 10_000;
/// Inflation applied to probed (not exact) deviation maxima.
pub const DEVIATION_INFLATION: f64 = 1.1;

/// Dual caps and gradient bound derived from `L`, `tau` and `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCapEstimate {
    /// Upper bound `L / tau` on the sum of optimal multipliers.
    pub lambda_a_bound: f64,
    /// `lambda^0_i`, one per constraint.
    pub caps: Vec<f64>,
    pub theta: f64,
    /// `G`.
    pub gradient_bound: f64,
    /// `G'`, with tightened thresholds, when known (see [`prepare_exact`]).
    pub gradient_bound_tightened: Option<f64>,
}

impl DualCapEstimate {
    /// Caps supplied directly by the user (no `tau` needed). `G` is still
    /// computed from the problem's expectations.
    pub fn from_caps<P: Problem + ?Sized>(problem: &P, caps: Vec<f64>, theta: f64) -> Result<Self> {
        let spec = problem.spec();
        if caps.len() != spec.constraints {
            return Err(Error::Dimension { expected: spec.constraints, actual: caps.len() });
        }
        let dev = deviation_for(problem, &spec.gamma)?;
        Ok(DualCapEstimate {
            lambda_a_bound: f64::NAN,
            gradient_bound: gradient_bound(spec.lipschitz, &caps, dev),
            caps,
            theta,
            gradient_bound_tightened: None,
        })
    }

    pub fn dual_radius_sq(&self) -> f64 {
        self.caps.iter().map(|c| c * c).sum()
    }
}

/// Sets every cap to `L / tau + theta`, which is at least `lambda*_i + theta`
/// because the optimal multipliers sum to at most `L / tau`, and computes
/// `G^2 = max(L^2 (1 + sum caps)^2, max_w sum_i (f̄_i(w) - gamma_i)^2)`.
pub fn estimate_dual_caps<P: Problem + ?Sized>(problem: &P, theta: f64) -> Result<DualCapEstimate> {
    let spec = problem.spec();
    let l = spec.lipschitz;
    if !(theta > 0.0) {
        return Err(Error::config(format!("theta must be positive, got {theta}")));
    }
    if spec.constraints == 0 {
        return Ok(DualCapEstimate {
            lambda_a_bound: 0.0,
            caps: Vec::new(),
            theta,
            gradient_bound: l,
            gradient_bound_tightened: None,
        });
    }
    let tau = match spec.tau {
        Some(t) if t > 0.0 && t.is_finite() => t,
        _ => return Err(Error::MissingTau),
    };
    let lambda_a = l / tau;
    let caps = vec![lambda_a + theta; spec.constraints];
    let dev = deviation_for(problem, &spec.gamma)?;
    Ok(DualCapEstimate {
        lambda_a_bound: lambda_a,
        gradient_bound: gradient_bound(l, &caps, dev),
        caps,
        theta,
        gradient_bound_tightened: None,
    })
}

fn deviation_for<P: Problem + ?Sized>(problem: &P, gamma: &[f64]) -> Result<f64> {
    if gamma.is_empty() {
        return Ok(0.0);
    }
    let spec = problem.spec();
    let expected = problem.expected().ok_or(Error::MissingExpectations("the gradient bound G"))?;
    Ok(constraint_deviation_bound(expected, spec.domain, spec.dim, gamma))
}

/// `sqrt(max(L^2 (1 + sum caps)^2, deviation))`.
pub fn gradient_bound(lipschitz: f64, caps: &[f64], deviation: f64) -> f64 {
    let s: f64 = 1.0 + caps.iter().sum::<f64>();
    let primal = lipschitz * s;
    math::sqrt((primal * primal).max(deviation))
}

/// Upper bound on `max_w sum_i (f̄_i(w) - gamma_i)^2` over the domain.
///
/// Affine constraints use their exact range over the domain. Others are
/// probed at random boundary and interior points and the largest deviation
/// found is inflated by 10%.
pub fn constraint_deviation_bound(
    expected: &dyn ExpectedFunctions,
    domain: Domain,
    dim: usize,
    gamma: &[f64],
) -> f64 {
    let m = gamma.len();
    let mut worst = vec![0.0f64; m];
    let mut probed = Vec::new();
    for (i, g) in gamma.iter().enumerate() {
        match expected.linear_form(i + 1) {
            Some(lf) => {
                let neg: Vec<f64> = lf.coeffs.iter().map(|c| -c).collect();
                let hi = domain.support(lf.coeffs) + lf.offset - g;
                let lo = -domain.support(&neg) + lf.offset - g;
                worst[i] = hi.abs().max(lo.abs());
            }
            None => probed.push(i),
        }
    }
    if !probed.is_empty() {
        let mut rng = seeded_rng(0, 0xde7);
        let mut check = |w: &[f64]| {
            for &i in &probed {
                let v = (expected.value(w, i + 1) - gamma[i]).abs();
                worst[i] = worst[i].max(v);
            }
        };
        check(&domain.initial_point(dim));
        for k in 0..DEVIATION_PROBES {
            check(&domain.sample(&mut rng, dim, k % 2 == 0));
        }
        for &i in &probed {
            worst[i] *= DEVIATION_INFLATION;
        }
    }
    worst.iter().map(|v| v * v).sum()
}

/// Scratch buffers for one step.
struct Workspace {
    grad: Vec<f64>,
    dir: Vec<f64>,
    gap: Vec<f64>,
}

impl Workspace {
    fn new(d: usize, m: usize) -> Self {
        Workspace { grad: vec![0.0; d], dir: vec![0.0; d], gap: vec![0.0; m] }
    }
}

/// One simultaneous primal-dual update in place. Both updates read the
/// pre-update `(w, lambda)`.
#[allow(clippy::too_many_arguments)]
fn step_in_place<S: SampledFunctions + ?Sized>(
    w: &mut [f64],
    lambda: &mut [f64],
    sample: &S,
    eta: f64,
    gamma: &[f64],
    caps: &[f64],
    domain: Domain,
    ws: &mut Workspace,
    iteration: u64,
) -> Result<()> {
    sample.grad_into(w, 0, &mut ws.dir);
    for (i, &li) in lambda.iter().enumerate() {
        ws.gap[i] = sample.value_at(w, i + 1) - gamma[i];
        if li != 0.0 {
            sample.grad_into(w, i + 1, &mut ws.grad);
            axpy(li, &ws.grad, &mut ws.dir);
        }
    }
    if !math::all_finite(&ws.dir) {
        return Err(Error::NonFinite { what: "gradient", iteration });
    }
    if !math::all_finite(&ws.gap) {
        return Err(Error::NonFinite { what: "constraint value", iteration });
    }
    axpy(-eta, &ws.dir, w);
    domain.project_mut(w);
    for ((l, g), cap) in lambda.iter_mut().zip(&ws.gap).zip(caps) {
        *l = (*l + eta * g).clamp(0.0, *cap);
    }
    Ok(())
}

/// `w' = P(w - eta (grad f^0 + sum_i lambda_i grad f^i))`,
/// `lambda'_i = clamp(lambda_i + eta (f^i(w) - gamma_i), 0, cap_i)`.
pub fn primal_dual_step<S: SampledFunctions + ?Sized>(
    w: &DecisionPoint,
    lambda: &DualVector,
    sample: &S,
    eta: f64,
    cfg: &SolverConfig,
) -> Result<(DecisionPoint, DualVector)> {
    if w.dim() != cfg.dim() {
        return Err(Error::Dimension { expected: cfg.dim(), actual: w.dim() });
    }
    if lambda.len() != cfg.constraints() {
        return Err(Error::Dimension { expected: cfg.constraints(), actual: lambda.len() });
    }
    let mut w = w.clone();
    let mut lambda = lambda.clone();
    let mut ws = Workspace::new(cfg.dim(), cfg.constraints());
    step_in_place(
        w.as_mut_slice(),
        lambda.as_mut_slice(),
        sample,
        eta,
        cfg.thresholds().effective(),
        cfg.dual_caps(),
        cfg.domain(),
        &mut ws,
        0,
    )?;
    Ok((w, lambda))
}

/// Runs `T` primal-dual steps from `w_1 = P(0)`, `lambda_1 = 0` and returns
/// the averaged iterate.
pub fn solve<O: StochasticOracle + ?Sized>(oracle: &mut O, cfg: &SolverConfig) -> Result<RunTrace> {
    let eta = cfg.step_size()?;
    run(oracle, cfg, cfg.thresholds().clone(), eta, cfg.gradient_bound(), Method::PrimalDual)
}

/// Tightened thresholds and `G'` for the exact-feasibility variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSetup {
    pub thresholds: Thresholds,
    /// `mu(delta) / (theta sqrt(T))` with `mu` computed from `G`.
    pub shift: f64,
    pub gradient_bound: f64,
    pub step_size: f64,
}

/// Computes `gamma_hat = gamma - mu(delta) / (theta sqrt(T))`, checks that
/// the tightened problem is still strictly feasible, and recomputes the
/// gradient bound with `gamma_hat`.
pub fn prepare_exact<P: Problem + ?Sized>(problem: &P, cfg: &SolverConfig) -> Result<ExactSetup> {
    let spec = problem.spec();
    let shift = cfg.violation_bound()?;
    let thresholds = cfg.thresholds().tighten(shift);
    let tightened = thresholds.effective();
    if !tightened.is_empty() {
        let expected = problem
            .expected()
            .ok_or(Error::MissingExpectations("the tightened feasibility check"))?;
        let probe = probe_feasibility(
            expected,
            spec.domain,
            spec.dim,
            tightened,
            Some(&spec.feasible_point),
            cfg.seed(),
        );
        if !(probe.violation < 0.0) {
            return Err(Error::infeasible(format!(
                "thresholds tightened by {shift:.4e} leave no strictly feasible point \
                 (best max violation {:.4e}); increase T or theta",
                probe.violation
            )));
        }
    }
    let dev = deviation_for(problem, tightened)?;
    let g = gradient_bound(cfg.lipschitz(), cfg.dual_caps(), dev);
    let eta = step_size(cfg.radius(), cfg.dual_radius(), cfg.horizon(), g)?;
    Ok(ExactSetup { thresholds, shift, gradient_bound: g, step_size: eta })
}

/// Runs the method against tightened thresholds so that the averaged
/// solution meets the original ones.
pub fn solve_exact<P: Problem + ?Sized>(
    problem: &P,
    oracle: &mut P::Oracle,
    cfg: &SolverConfig,
) -> Result<RunTrace> {
    let setup = prepare_exact(problem, cfg)?;
    run(oracle, cfg, setup.thresholds, setup.step_size, setup.gradient_bound, Method::PrimalDualExact)
}

fn run<O: StochasticOracle + ?Sized>(
    oracle: &mut O,
    cfg: &SolverConfig,
    thresholds: Thresholds,
    eta: f64,
    gradient_bound: f64,
    method: Method,
) -> Result<RunTrace> {
    let d = cfg.dim();
    let m = cfg.constraints();
    if oracle.dim() != d {
        return Err(Error::Dimension { expected: d, actual: oracle.dim() });
    }
    if oracle.num_constraints() != m {
        return Err(Error::Dimension { expected: m, actual: oracle.num_constraints() });
    }
    let horizon = cfg.horizon();
    let domain = cfg.domain();
    let caps = cfg.dual_caps();
    let gamma = thresholds.effective().to_vec();

    let mut w = domain.initial_point(d);
    let mut lambda = vec![0.0; m];
    let mut sum = vec![0.0; d];
    let mut log = Vec::new();
    let mut ws = Workspace::new(d, m);
    let mut error = None;
    let mut iterates = 0;
    for t in 1..=horizon {
        debug_assert!(domain.contains(&w, 1e-9));
        debug_assert!(lambda.iter().zip(caps).all(|(l, c)| *l >= 0.0 && l <= c));
        let sample = oracle.draw();
        axpy(1.0, &w, &mut sum);
        iterates = t;
        if should_log(t, horizon) {
            log.push(TraceRecord {
                t,
                w: w.clone(),
                lambda: lambda.clone(),
                losses: (0..=m).map(|i| sample.value_at(&w, i)).collect(),
            });
        }
        if let Err(e) = step_in_place(&mut w, &mut lambda, &sample, eta, &gamma, caps, domain, &mut ws, t)
        {
            error = Some(e);
            break;
        }
    }
    let n = iterates.max(1) as f64;
    sum.iter_mut().for_each(|v| *v /= n);
    Ok(RunTrace {
        method,
        horizon,
        seed: cfg.seed(),
        step_size: eta,
        gradient_bound,
        thresholds,
        iterate_log: log,
        averaged: DecisionPoint::new(sum),
        iterations: iterates,
        final_dual: DualVector::new(lambda),
        eval: None,
        wall_ms: None,
        error,
        burn_in: None,
    })
}
