//! Statistical and numerical checks of a problem's stochastic oracle.

use rand::Rng;
use serde::Serialize;
use stomo_core::oracle::{sample_means, seeded_rng};
use stomo_core::{Problem, SampledFunctions, StochasticOracle};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub problem: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Points for the Monte Carlo mean test.
    pub mean_points: usize,
    pub samples: usize,
    /// Allowed deviation in standard errors.
    pub sigmas: f64,
    pub gradient_points: usize,
    pub gradient_rel_tol: f64,
    pub convexity_trials: usize,
    pub lipschitz_points: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            mean_points: 5,
            samples: 100_000,
            sigmas: 4.0,
            gradient_points: 10,
            gradient_rel_tol: 1e-5,
            convexity_trials: 200,
            lipschitz_points: 1000,
            seed: 0,
        }
    }
}

/// Stream for validation draws, disjoint from training and evaluation.
const VALIDATION_STREAM: u64 = 0x7a11d;

pub fn validate_oracle<P: Problem + ?Sized>(problem: &P, kind: &str, opts: &ValidationOptions) -> ValidationReport {
    let checks = vec![
        unbiasedness(problem, opts),
        sampled_gradients(problem, opts),
        expected_gradients(problem, opts),
        convexity(problem, opts),
        lipschitz(problem, opts),
    ];
    ValidationReport { problem: kind.to_string(), checks }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

fn random_points<P: Problem + ?Sized>(problem: &P, n: usize, stream: u64, seed: u64) -> Vec<Vec<f64>> {
    let spec = problem.spec();
    let mut rng = seeded_rng(seed, stream);
    (0..n).map(|k| spec.domain.sample(&mut rng, spec.dim, k % 3 == 0)).collect()
}

/// Empirical mean of `N` draws within `sigmas` standard errors of `f̄_i`.
pub fn unbiasedness<P: Problem + ?Sized>(problem: &P, opts: &ValidationOptions) -> Check {
    const NAME: &str = "unbiasedness";
    let Some(expected) = problem.expected() else {
        return check(NAME, true, "skipped: no analytic expectations".into());
    };
    let m = problem.spec().constraints;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (k, w) in random_points(problem, opts.mean_points, 1, opts.seed).iter().enumerate() {
        let mut oracle = problem.oracle(opts.seed + k as u64, VALIDATION_STREAM);
        let est = sample_means(&mut oracle, w, opts.samples);
        for (i, e) in est.iter().enumerate().take(m + 1) {
            let truth = expected.value(w, i);
            let diff = (e.mean - truth).abs();
            let se = e.std_err();
            let z = if se > 0.0 {
                diff / se
            } else if diff <= 1e-12 * (1.0 + truth.abs()) {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
            if z > opts.sigmas {
                failures.push(format!("point {k}, f_{i}: {z:.2} standard errors"));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("largest deviation {worst:.2} standard errors (limit {})", opts.sigmas)
    } else {
        failures.join("; ")
    };
    check(NAME, failures.is_empty(), detail)
}

/// Central differences of `value` per coordinate, or `None` near a kink
/// (one-sided slopes disagree).
fn central_difference(f: impl Fn(&[f64]) -> f64, w: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let h = 1e-6 * w.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let f0 = f(w);
    let mut z = w.to_vec();
    let mut g = vec![0.0; w.len()];
    for k in 0..w.len() {
        z[k] = w[k] + h;
        let fp = f(&z);
        z[k] = w[k] - h;
        let fm = f(&z);
        z[k] = w[k];
        let forward = (fp - f0) / h;
        let backward = (f0 - fm) / h;
        g[k] = (fp - fm) / (2.0 * h);
        if (forward - backward).abs() > 100.0 * rel_tol * (1.0 + g[k].abs()) {
            return None;
        }
    }
    Some(g)
}

fn relative_error(g: &[f64], fd: &[f64]) -> f64 {
    let scale = g.iter().chain(fd).fold(1.0f64, |a, x| a.max(x.abs()));
    g.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

/// `grad_at` of sampled functions against central differences of
/// `value_at`, at points away from kinks.
pub fn sampled_gradients<P: Problem + ?Sized>(problem: &P, opts: &ValidationOptions) -> Check {
    const NAME: &str = "sampled_gradients";
    let spec = problem.spec();
    let mut oracle = problem.oracle(opts.seed, VALIDATION_STREAM + 1);
    let mut rng = seeded_rng(opts.seed, 2);
    let mut tested = 0;
    let mut worst: f64 = 0.0;
    let mut attempts = 0;
    while tested < opts.gradient_points && attempts < 100 * opts.gradient_points {
        attempts += 1;
        let w = spec.domain.sample(&mut rng, spec.dim, false);
        let sample = oracle.draw();
        let mut ok = true;
        let mut errs = Vec::new();
        for i in 0..=spec.constraints {
            match central_difference(|z| sample.value_at(z, i), &w, opts.gradient_rel_tol) {
                Some(fd) => errs.push(relative_error(&sample.grad_at(&w, i), &fd)),
                None => ok = false,
            }
        }
        if ok {
            tested += 1;
            worst = errs.into_iter().fold(worst, f64::max);
        }
    }
    let passed = tested == opts.gradient_points && worst <= opts.gradient_rel_tol;
    check(
        NAME,
        passed,
        format!("{tested} points, largest relative error {worst:.2e} (limit {:.0e})", opts.gradient_rel_tol),
    )
}

/// Analytic expected gradients against central differences of the
/// analytic expected values.
pub fn expected_gradients<P: Problem + ?Sized>(problem: &P, opts: &ValidationOptions) -> Check {
    const NAME: &str = "expected_gradients";
    let Some(expected) = problem.expected() else {
        return check(NAME, true, "skipped: no analytic expectations".into());
    };
    let spec = problem.spec();
    let mut rng = seeded_rng(opts.seed, 3);
    let mut tested = 0;
    let mut worst: f64 = 0.0;
    let mut attempts = 0;
    let mut g = vec![0.0; spec.dim];
    while tested < opts.gradient_points && attempts < 100 * opts.gradient_points {
        attempts += 1;
        let w = spec.domain.sample(&mut rng, spec.dim, false);
        let mut ok = true;
        let mut errs = Vec::new();
        for i in 0..=spec.constraints {
            match central_difference(|z| expected.value(z, i), &w, opts.gradient_rel_tol) {
                Some(fd) => {
                    expected.grad_into(&w, i, &mut g);
                    errs.push(relative_error(&g, &fd));
                }
                None => ok = false,
            }
        }
        if ok {
            tested += 1;
            worst = errs.into_iter().fold(worst, f64::max);
        }
    }
    let passed = tested == opts.gradient_points && worst <= opts.gradient_rel_tol;
    check(
        NAME,
        passed,
        format!("{tested} points, largest relative error {worst:.2e} (limit {:.0e})", opts.gradient_rel_tol),
    )
}

/// `f(t w + (1-t) w') <= t f(w) + (1-t) f(w') + 1e-9` for one draw.
pub fn convexity<P: Problem + ?Sized>(problem: &P, opts: &ValidationOptions) -> Check {
    const NAME: &str = "convexity";
    let spec = problem.spec();
    let mut oracle = problem.oracle(opts.seed, VALIDATION_STREAM + 2);
    let mut rng = seeded_rng(opts.seed, 4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..opts.convexity_trials {
        let a = spec.domain.sample(&mut rng, spec.dim, false);
        let b = spec.domain.sample(&mut rng, spec.dim, false);
        let t: f64 = rng.random();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let s = oracle.draw();
        for i in 0..=spec.constraints {
            let gap = s.value_at(&mid, i) - (t * s.value_at(&a, i) + (1.0 - t) * s.value_at(&b, i));
            worst = worst.max(gap);
        }
    }
    check(NAME, worst <= 1e-9, format!("largest chord excess {worst:.2e}"))
}

/// Largest sampled gradient norm over random domain points against `L`.
pub fn lipschitz<P: Problem + ?Sized>(problem: &P, opts: &ValidationOptions) -> Check {
    const NAME: &str = "lipschitz";
    let spec = problem.spec();
    let mut oracle = problem.oracle(opts.seed, VALIDATION_STREAM + 3);
    let mut worst: f64 = 0.0;
    let mut g = vec![0.0; spec.dim];
    for w in random_points(problem, opts.lipschitz_points, 5, opts.seed) {
        let s = oracle.draw();
        for i in 0..=spec.constraints {
            s.grad_into(&w, i, &mut g);
            worst = worst.max(g.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
    }
    check(
        NAME,
        worst <= spec.lipschitz,
        format!("largest gradient norm {worst:.4} (declared L = {:.4})", spec.lipschitz),
    )
}
