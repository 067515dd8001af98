use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use stomo_core::projection::{project_ball, project_box, project_halfspaces, project_simplex, Halfspace};
use stomo_harness::validate::{validate_oracle, ValidationOptions};
use stomo_harness::{run_experiment, AnyProblem, ExperimentConfig, ExperimentReport};

#[derive(Parser)]
#[command(name = "stomo", version, about = "Primal-dual stochastic optimization with multiple objectives")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the (first) run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for runs.csv, report.json and traces.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver name: pd, pd_exact, scalarize or burn_in.
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One run at a single horizon; prints a summary.
    Solve {
        /// Horizon; defaults to the last one in the config.
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Full experiment over the configured horizons and seeds.
    Bench,
    /// Projects a vector read from stdin and prints the result.
    Project {
        #[arg(value_enum)]
        projector: Projector,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Lower box bounds, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lo: Vec<f64>,
        /// Upper box bounds, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        hi: Vec<f64>,
        /// Halfspace `a_1,...,a_d,b` meaning `<a, z> <= b`; repeatable.
        #[arg(long = "halfspace", allow_hyphen_values = true)]
        halfspaces: Vec<String>,
    },
    /// Unbiasedness, gradient, convexity and Lipschitz checks of the
    /// configured problem's oracle.
    ValidateOracle {
        /// Draws per point in the mean test.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Projector {
    Ball,
    Box,
    Simplex,
    Halfspaces,
}

fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let Some(path) = &common.config else {
        bail!("--config is required for this command");
    };
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(name) = &common.solver {
        cfg.solver.name = name.clone();
    }
    if let Some(seed) = common.seed {
        cfg.experiment.first_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.experiment.out = Some(out.clone());
    }
    if let Some(threads) = common.threads {
        cfg.experiment.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

fn solve(common: &Common, horizon: Option<u64>) -> anyhow::Result<ExitCode> {
    let mut cfg = load_config(common)?;
    let t = horizon.unwrap_or(*cfg.experiment.horizons.last().expect("validated"));
    cfg.experiment.horizons = vec![t];
    cfg.experiment.seeds = 1;
    cfg.experiment.threads = 1;
    let report = run_experiment(&cfg)?;
    let r = &report.runs[0];
    let mut out = io::stdout().lock();
    writeln!(out, "solver      {}", r.solver)?;
    writeln!(out, "problem     {} (d = {}, m = {})", r.problem, report.dim, report.constraints)?;
    writeln!(out, "T           {}", r.horizon)?;
    writeln!(out, "seed        {}", r.seed)?;
    if let Some(e) = &r.error {
        writeln!(out, "error       {e}")?;
        return Ok(ExitCode::FAILURE);
    }
    if let Some(trace) = &r.trace {
        let w: Vec<String> = trace.averaged.as_slice().iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "w_hat       [{}]", w.join(", "))?;
        writeln!(out, "step size   {:.6e}", trace.step_size)?;
    }
    writeln!(out, "objective   {}", fmt(r.objective))?;
    writeln!(out, "subopt      {}", fmt(r.subopt))?;
    for (i, v) in r.violations.iter().enumerate() {
        writeln!(out, "viol_{}      {v:.6e}", i + 1)?;
    }
    writeln!(out, "bound_subopt {}", fmt(r.bound_subopt))?;
    writeln!(out, "bound_viol  {}", fmt(r.bound_viol))?;
    writeln!(out, "wall_ms     {:.3}", r.wall_ms)?;
    Ok(ExitCode::SUCCESS)
}

fn print_report(report: &ExperimentReport) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{} on {} (d = {}, m = {}), {} seeds",
        report.solver, report.problem, report.dim, report.constraints, report.seeds
    )?;
    writeln!(out, "{:>10} {:>14} {:>14} {:>14} {:>14} {:>8}", "T", "med|subopt|", "bound", "med viol", "bound", "fail")?;
    for h in &report.horizons {
        let fail = h.subopt_failure_rate.into_iter().chain(h.violation_failure_rate).fold(0.0, f64::max);
        writeln!(
            out,
            "{:>10} {:>14} {:>14} {:>14} {:>14} {:>8.3}",
            h.horizon,
            fmt(h.median_abs_subopt),
            fmt(h.bound_subopt),
            fmt(h.median_max_violation),
            fmt(h.bound_viol),
            fail
        )?;
    }
    for (label, fit) in [
        ("subopt slope", &report.subopt_rate),
        ("violation slope", &report.violation_rate),
        ("estimation slope", &report.estimation_rate),
    ] {
        if let Some(f) = fit {
            writeln!(out, "{label}: {:.3} (residual {:.3e})", f.slope, f.residual)?;
        }
    }
    for e in &report.errors {
        writeln!(out, "error at T = {}, seed {}: {}", e.horizon, e.seed, e.message)?;
    }
    Ok(())
}

fn bench(common: &Common) -> anyhow::Result<ExitCode> {
    let cfg = load_config(common)?;
    let report = run_experiment(&cfg)?;
    print_report(&report)?;
    if let Some(out) = &cfg.experiment.out {
        eprintln!("wrote {}", out.display());
    }
    Ok(if report.complete { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn parse_numbers(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("not a number: {s:?}")))
        .collect()
}

fn project(
    projector: Projector,
    radius: f64,
    lo: &[f64],
    hi: &[f64],
    halfspaces: &[String],
) -> anyhow::Result<ExitCode> {
    let mut input = String::new();
    io::stdin().read_to_string(&mut input)?;
    let w = parse_numbers(&input)?;
    if w.is_empty() {
        bail!("no vector on stdin");
    }
    let z = match projector {
        Projector::Ball => project_ball(&w, radius),
        Projector::Simplex => project_simplex(&w),
        Projector::Box => project_box(&w, lo, hi)?,
        Projector::Halfspaces => {
            let hs = halfspaces
                .iter()
                .map(|s| {
                    let mut v = parse_numbers(s)?;
                    let b = v.pop().context("empty halfspace")?;
                    Ok(Halfspace::new(v, b))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            project_halfspaces(&w, &hs, radius)?
        }
    };
    let line: Vec<String> = z.iter().map(|v| v.to_string()).collect();
    println!("{}", line.join(" "));
    Ok(ExitCode::SUCCESS)
}

fn validate(common: &Common, samples: usize) -> anyhow::Result<ExitCode> {
    let cfg = load_config(common)?;
    let problem = AnyProblem::build(&cfg.problem)?;
    let opts = ValidationOptions { samples, seed: common.seed.unwrap_or(0), ..Default::default() };
    let report = problem.visit(Validate { kind: problem.kind(), opts });
    for c in &report.checks {
        println!("{} {:<18} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

struct Validate<'a> {
    kind: &'a str,
    opts: ValidationOptions,
}

impl stomo_harness::problem::ProblemVisitor for Validate<'_> {
    type Output = stomo_harness::validate::ValidationReport;

    fn visit<P: stomo_core::Problem + Sync>(self, problem: &P) -> Self::Output
    where
        P::Oracle: Send,
    {
        validate_oracle(problem, self.kind, &self.opts)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { horizon } => solve(&cli.common, *horizon),
        Command::Bench => bench(&cli.common),
        Command::Project { projector, radius, lo, hi, halfspaces } => {
            project(*projector, *radius, lo, hi, halfspaces)
        }
        Command::ValidateOracle { samples } => validate(&cli.common, *samples),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
