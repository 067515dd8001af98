//! Seed-replicated experiments over a grid of horizons.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use stomo_core::Method;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::output::{write_runs, write_trace, RunRow};
use crate::problem::AnyProblem;
use crate::rate::{fit_rate, median, quantile, RateFit};
use crate::run::{RunResult, RunSpec, SingleRun};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonSummary {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub runs: usize,
    pub failed_runs: usize,
    pub median_subopt: Option<f64>,
    pub median_abs_subopt: Option<f64>,
    /// Empirical `1 - (2m+1) delta` quantile of the suboptimality.
    pub quantile_subopt: Option<f64>,
    pub median_max_violation: Option<f64>,
    pub quantile_max_violation: Option<f64>,
    pub bound_subopt: Option<f64>,
    pub bound_viol: Option<f64>,
    /// Share of seeds whose suboptimality exceeds `bound_subopt`. Failed runs
    /// count as exceeding.
    pub subopt_failure_rate: Option<f64>,
    /// Share of seeds whose largest violation exceeds `bound_viol`.
    pub violation_failure_rate: Option<f64>,
    /// Share of seeds with any `f̄_i(ŵ_T) > gamma_i`.
    pub infeasible_rate: f64,
    pub median_estimation_error: Option<f64>,
    pub median_cumulative_violation: Option<f64>,
    pub median_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellError {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub solver: String,
    pub problem: String,
    pub dim: usize,
    pub constraints: usize,
    pub seeds: u64,
    pub theta: f64,
    pub delta: f64,
    /// `1 - (2m+1) delta`: joint probability that both bounds hold.
    pub confidence: f64,
    /// `(2m+1) delta + 2 sqrt(delta (1 - delta) / n_seeds)`.
    pub allowed_failure_rate: f64,
    pub horizons: Vec<HorizonSummary>,
    /// Fit of median `|subopt|` against `T`.
    pub subopt_rate: Option<RateFit>,
    /// Fit of median positive part of the largest violation against `T`.
    pub violation_rate: Option<RateFit>,
    /// Burn-in only: fit of median estimation error against `bT`.
    pub estimation_rate: Option<RateFit>,
    pub complete: bool,
    pub errors: Vec<CellError>,
    #[serde(skip)]
    pub runs: Vec<RunResult>,
}

impl ExperimentReport {
    pub fn rows(&self, record_wall_time: bool) -> Vec<RunRow> {
        self.runs.iter().map(|r| RunRow::from_result(r, self.constraints, record_wall_time)).collect()
    }

    pub fn horizon(&self, t: u64) -> Option<&HorizonSummary> {
        self.horizons.iter().find(|h| h.horizon == t)
    }
}

/// Builds the problem and runs every `(T, seed)` cell. Writes `runs.csv`,
/// `report.json` and per-run traces when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let problem = AnyProblem::build(&cfg.problem)?;
    run_on(&problem, cfg)
}

pub fn run_on(problem: &AnyProblem, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ex = &cfg.experiment;
    let cells: Vec<(u64, u64)> = ex
        .horizons
        .iter()
        .flat_map(|&t| (0..ex.seeds).map(move |k| (t, ex.first_seed + k)))
        .collect();
    let kind = problem.kind();
    let execute = || -> Vec<RunResult> {
        cells
            .par_iter()
            .map(|&(horizon, seed)| {
                problem.visit(SingleRun {
                    kind,
                    spec: RunSpec {
                        solver: &cfg.solver,
                        horizon,
                        seed,
                        evaluation: ex.evaluation,
                        eval_samples: ex.eval_samples,
                    },
                })
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ex.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let runs = pool.install(execute);
    let report = summarize(problem, cfg, runs)?;
    if let Some(out) = &ex.out {
        write_outputs(out, &report, cfg)?;
    }
    Ok(report)
}

fn summarize(problem: &AnyProblem, cfg: &ExperimentConfig, runs: Vec<RunResult>) -> Result<ExperimentReport> {
    let spec = problem.spec();
    let m = spec.constraints;
    let ex = &cfg.experiment;
    let delta = cfg.solver.delta;
    let n = ex.seeds as f64;
    let event_rate = (2 * m + 1) as f64 * delta;
    let level = 1.0 - event_rate;
    let method = cfg.solver.method()?;

    let mut horizons = Vec::new();
    for &t in &ex.horizons {
        let cell: Vec<&RunResult> = runs.iter().filter(|r| r.horizon == t).collect();
        let ok: Vec<&RunResult> = cell.iter().copied().filter(|r| r.error.is_none()).collect();
        let subopts = || ok.iter().filter_map(|r| r.subopt);
        let max_viols = || ok.iter().filter_map(|r| r.max_violation());
        let failure_rate = |bound: Option<f64>, value: &dyn Fn(&RunResult) -> Option<f64>| {
            bound.map(|b| {
                let bad = cell
                    .iter()
                    .filter(|r| r.error.is_some() || value(r).is_some_and(|v| v > b))
                    .count();
                bad as f64 / n
            })
        };
        let bound_subopt = median(ok.iter().filter_map(|r| r.bound_subopt));
        let bound_viol = median(ok.iter().filter_map(|r| r.bound_viol));
        let burn = || ok.iter().filter_map(|r| r.trace.as_ref()?.burn_in.as_ref());
        horizons.push(HorizonSummary {
            horizon: t,
            runs: cell.len(),
            failed_runs: cell.iter().filter(|r| r.error.is_some()).count(),
            median_subopt: median(subopts()),
            median_abs_subopt: median(subopts().map(f64::abs)),
            quantile_subopt: (level > 0.0).then(|| quantile(subopts(), level)).flatten(),
            median_max_violation: median(max_viols()),
            quantile_max_violation: (level > 0.0).then(|| quantile(max_viols(), level)).flatten(),
            bound_subopt,
            bound_viol,
            subopt_failure_rate: failure_rate(bound_subopt, &|r| r.subopt),
            violation_failure_rate: failure_rate(bound_viol, &|r| r.max_violation()),
            infeasible_rate: cell
                .iter()
                .filter(|r| r.error.is_some() || r.violations.iter().any(|v| *v > 0.0))
                .count() as f64
                / n,
            median_estimation_error: median(burn().filter_map(|b| b.estimation_error)),
            median_cumulative_violation: median(
                burn().filter_map(|b| b.cumulative_violation.as_ref().map(|c| c.iter().sum())),
            ),
            median_wall_ms: if ex.record_wall_time {
                median(cell.iter().map(|r| r.wall_ms)).unwrap_or(0.0)
            } else {
                0.0
            },
        });
    }

    let fit = |points: Vec<(f64, f64)>| (points.len() >= 3).then(|| fit_rate(&points).ok()).flatten();
    let subopt_rate = fit(
        horizons
            .iter()
            .filter_map(|h| Some((h.horizon as f64, h.median_abs_subopt?)))
            .collect(),
    );
    let violation_rate = if m > 0 {
        fit(horizons
            .iter()
            .filter_map(|h| Some((h.horizon as f64, h.median_max_violation?.max(0.0))))
            .collect())
    } else {
        None
    };
    let estimation_rate = if method == Method::BurnIn {
        fit(horizons
            .iter()
            .filter_map(|h| {
                let bt = (cfg.solver.burn_fraction * h.horizon as f64).ceil();
                Some((bt, h.median_estimation_error?))
            })
            .collect())
    } else {
        None
    };

    let errors: Vec<CellError> = runs
        .iter()
        .filter_map(|r| {
            Some(CellError { horizon: r.horizon, seed: r.seed, message: r.error.clone()? })
        })
        .collect();
    Ok(ExperimentReport {
        solver: cfg.solver.name.clone(),
        problem: problem.kind().to_string(),
        dim: spec.dim,
        constraints: m,
        seeds: ex.seeds,
        theta: cfg.solver.theta,
        delta,
        confidence: level,
        allowed_failure_rate: event_rate + 2.0 * (delta * (1.0 - delta) / n).sqrt(),
        horizons,
        subopt_rate,
        violation_rate,
        estimation_rate,
        complete: errors.is_empty(),
        errors,
        runs,
    })
}

fn write_outputs(out: &Path, report: &ExperimentReport, cfg: &ExperimentConfig) -> Result<()> {
    let ex = &cfg.experiment;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let runs_path = out.join("runs.csv");
    let file = fs::File::create(&runs_path).map_err(|e| Error::io(&runs_path, e))?;
    write_runs(file, &report.rows(ex.record_wall_time), report.constraints)?;
    let report_path = out.join("report.json");
    let json = serde_json::to_string_pretty(report)?;
    fs::write(&report_path, json + "\n").map_err(|e| Error::io(&report_path, e))?;
    if ex.write_traces {
        let dir = out.join("traces");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for r in &report.runs {
            if let Some(trace) = &r.trace {
                let path = dir.join(format!("{}_T{}_seed{}.csv", r.solver, r.horizon, r.seed));
                let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                write_trace(file, trace)?;
            }
        }
    }
    Ok(())
}
