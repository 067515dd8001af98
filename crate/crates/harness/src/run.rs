//! A single solver run with evaluation of the returned solution.

use std::time::Instant;

use stomo_core::baselines::{burn_in_pgd, scalarize, BurnInSettings, ScalarizeSettings};
use stomo_core::oracle::{sample_means, EVALUATION_STREAM, TRAINING_STREAM};
use stomo_core::solver::prepare_exact;
use stomo_core::{
    estimate_dual_caps, mu_bound, solve, solve_exact, DualCapEstimate, Evaluation, Method, Problem,
    RunTrace, SolverConfig, SolverParams,
};

use crate::config::{EvaluationMode, SolverSettings};
use crate::problem::ProblemVisitor;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec<'a> {
    pub solver: &'a SolverSettings,
    pub horizon: u64,
    pub seed: u64,
    pub evaluation: EvaluationMode,
    pub eval_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub solver: String,
    pub problem: String,
    pub horizon: u64,
    pub seed: u64,
    /// `f̄_0(ŵ_T)`.
    pub objective: Option<f64>,
    /// `f̄_0(ŵ_T) - f̄_0(w*)` when the optimum is known.
    pub subopt: Option<f64>,
    /// `f̄_i(ŵ_T) - gamma_i` against the original thresholds.
    pub violations: Vec<f64>,
    /// Standard errors of the Monte Carlo evaluation (objective first), when
    /// it was used.
    pub eval_std_err: Option<Vec<f64>>,
    pub bound_subopt: Option<f64>,
    pub bound_viol: Option<f64>,
    pub caps: Option<DualCapEstimate>,
    pub wall_ms: f64,
    pub trace: Option<RunTrace>,
    pub error: Option<String>,
}

impl RunResult {
    pub fn max_violation(&self) -> Option<f64> {
        self.violations.iter().copied().reduce(f64::max)
    }
}

/// Runs one `(solver, T, seed)` cell. Failures are recorded in
/// [`RunResult::error`] rather than returned.
pub fn run_single<P: Problem + ?Sized>(problem: &P, kind: &str, run: &RunSpec<'_>) -> RunResult {
    let mut result = RunResult {
        solver: run.solver.name.clone(),
        problem: kind.to_string(),
        horizon: run.horizon,
        seed: run.seed,
        objective: None,
        subopt: None,
        violations: Vec::new(),
        eval_std_err: None,
        bound_subopt: None,
        bound_viol: None,
        caps: None,
        wall_ms: 0.0,
        trace: None,
        error: None,
    };
    let start = Instant::now();
    let outcome = execute(problem, run, &mut result);
    result.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut trace = match outcome {
        Ok(t) => t,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    if let Some(e) = &trace.error {
        result.error = Some(format!("stopped after {} iterations: {e}", trace.iterations));
    }
    trace.wall_ms = Some(result.wall_ms);
    let spec = problem.spec();
    let m = spec.constraints;
    let w = trace.averaged.as_slice();
    let eval = match (run.evaluation, problem.expected()) {
        (EvaluationMode::Auto, Some(expected)) => Evaluation::of(expected, w, m),
        _ => {
            let mut oracle = problem.oracle(run.seed, EVALUATION_STREAM);
            let est = sample_means(&mut oracle, w, run.eval_samples);
            result.eval_std_err = Some(est.iter().map(|e| e.std_err()).collect());
            Evaluation { objective: est[0].mean, constraints: est[1..].iter().map(|e| e.mean).collect() }
        }
    };
    result.objective = Some(eval.objective);
    result.subopt = spec.known_optimum.as_ref().map(|o| eval.objective - o.value);
    result.violations = eval.violations(&spec.gamma);
    trace.eval = Some(eval);
    result.trace = Some(trace);
    result
}

fn execute<P: Problem + ?Sized>(
    problem: &P,
    run: &RunSpec<'_>,
    result: &mut RunResult,
) -> stomo_core::Result<RunTrace> {
    let spec = problem.spec();
    let s = run.solver;
    let method = Method::from_name(&s.name)
        .ok_or_else(|| stomo_core::Error::Config(format!("unknown solver `{}`", s.name)))?;
    let mut oracle = problem.oracle(run.seed, TRAINING_STREAM);
    match method {
        Method::PrimalDual | Method::PrimalDualExact => {
            let caps = match &s.caps {
                Some(c) => DualCapEstimate::from_caps(problem, c.clone(), s.theta)?,
                None => estimate_dual_caps(problem, s.theta)?,
            };
            let params =
                SolverParams { horizon: run.horizon, theta: s.theta, delta: s.delta, seed: run.seed };
            let cfg = SolverConfig::new(spec, params, &caps)?;
            let trace = if method == Method::PrimalDual {
                result.bound_subopt = Some(cfg.objective_bound()?);
                result.bound_viol = Some(cfg.violation_bound()?);
                solve(&mut oracle, &cfg)?
            } else {
                let setup = prepare_exact(problem, &cfg)?;
                let mu_prime =
                    mu_bound(cfg.delta(), setup.gradient_bound, cfg.radius(), cfg.dual_radius())?;
                let cap_sum: f64 = caps.caps.iter().sum();
                result.bound_subopt =
                    Some((1.0 + cap_sum) * mu_prime / (run.horizon as f64).sqrt());
                result.bound_viol = Some(0.0);
                solve_exact(problem, &mut oracle, &cfg)?
            };
            result.caps = Some(DualCapEstimate {
                gradient_bound_tightened: (method == Method::PrimalDualExact)
                    .then_some(trace.gradient_bound),
                ..caps
            });
            Ok(trace)
        }
        Method::Scalarized => {
            let settings = ScalarizeSettings {
                weights: s.weights.clone().unwrap_or_else(|| vec![1.0; spec.constraints + 1]),
                horizon: run.horizon,
                step_scale: s.step_scale,
                seed: run.seed,
            };
            scalarize(spec, &mut oracle, &settings)
        }
        Method::BurnIn => {
            let settings = BurnInSettings {
                fraction: s.burn_fraction,
                relax: s.relax.clone(),
                horizon: run.horizon,
                step: s.burn_step,
                seed: run.seed,
            };
            burn_in_pgd(spec, problem.expected(), &mut oracle, &settings)
        }
    }
}

/// [`run_single`] as a [`ProblemVisitor`].
pub struct SingleRun<'a> {
    pub kind: &'a str,
    pub spec: RunSpec<'a>,
}

impl ProblemVisitor for SingleRun<'_> {
    type Output = RunResult;

    fn visit<P>(self, problem: &P) -> RunResult
    where
        P: Problem + Sync,
        P::Oracle: Send,
    {
        run_single(problem, self.kind, &self.spec)
    }
}
