//! Stochastic first-order oracles and synthetic problem generators.
//!
//! Index `0` is always the objective; indices `1..=m` are the constraint
//! functions, each compared against its threshold `gamma_{i-1}`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::{self, dot};
use crate::projection::Domain;

mod affine;
mod classification;
mod linear_program;
mod portfolio;
mod quadratic;

pub use affine::{AffineSample, ConstantOracle};
pub use classification::{make_np_classification, ClassSource, NpOracle, NpProblem, NpSample};
pub use linear_program::{make_stochastic_lp, LpOracle, LpProblem};
pub use portfolio::{make_portfolio, PortfolioOracle, PortfolioProblem, PortfolioSample};
pub use quadratic::{
    make_known_optimum_quadratic, QuadraticOptions, QuadraticOracle, QuadraticProblem,
    QuadraticSample,
};

/// RNG stream used for the draws a solver consumes.
pub const TRAINING_STREAM: u64 = 0;
/// RNG stream used for Monte Carlo evaluation of a returned solution.
pub const EVALUATION_STREAM: u64 = 1;

/// Gaussian noise coordinates are clipped at this many standard deviations
/// so every generator has a finite Lipschitz certificate. The clip is
/// symmetric and leaves means unchanged.
pub const NOISE_CLIP: f64 = 6.0;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn clipped_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z.clamp(-NOISE_CLIP, NOISE_CLIP)
}

/// Affine function `w -> <coeffs, w> + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearForm<'a> {
    pub coeffs: &'a [f64],
    pub offset: f64,
}

impl LinearForm<'_> {
    pub fn eval(&self, w: &[f64]) -> f64 {
        dot(self.coeffs, w) + self.offset
    }
}

/// One i.i.d. realization `f_t^0, ..., f_t^m`.
pub trait SampledFunctions {
    fn draw_id(&self) -> u64;

    fn value_at(&self, w: &[f64], i: usize) -> f64;

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]);

    fn grad_at(&self, w: &[f64], i: usize) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        self.grad_into(w, i, &mut g);
        g
    }

    /// The function as an affine form, when it is one.
    fn linear_form(&self, _i: usize) -> Option<LinearForm<'_>> {
        None
    }
}

pub trait StochasticOracle {
    type Sample: SampledFunctions;

    fn dim(&self) -> usize;

    fn num_constraints(&self) -> usize;

    fn draw(&mut self) -> Self::Sample;
}

/// Exact expected functions `f̄_i(w) = E[f_t^i(w)]`.
pub trait ExpectedFunctions {
    fn value(&self, w: &[f64], i: usize) -> f64;

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]);

    fn linear_form(&self, _i: usize) -> Option<LinearForm<'_>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Optimal Lagrange multipliers, when the generator knows them.
    pub multipliers: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub constraints: usize,
    pub domain: Domain,
    pub gamma: Vec<f64>,
    /// Lipschitz constant of every sampled function over the domain.
    pub lipschitz: f64,
    /// Lower bound on the norm of convex combinations of expected constraint
    /// gradients.
    pub tau: Option<f64>,
    pub known_optimum: Option<KnownOptimum>,
    /// A point with `f̄_i(w) < gamma_i` for every constraint.
    pub feasible_point: Vec<f64>,
}

/// A problem instance: metadata, a way to spawn seeded oracles, and
/// (optionally) the exact expectations.
pub trait Problem {
    type Oracle: StochasticOracle;

    fn spec(&self) -> &ProblemSpec;

    fn oracle(&self, seed: u64, stream: u64) -> Self::Oracle;

    fn expected(&self) -> Option<&dyn ExpectedFunctions>;
}

/// Largest constraint violation `max_i (f̄_i(w) - gamma_i)`; `-inf` when
/// there are no constraints.
pub fn max_violation(expected: &dyn ExpectedFunctions, w: &[f64], gamma: &[f64]) -> f64 {
    gamma
        .iter()
        .enumerate()
        .map(|(i, g)| expected.value(w, i + 1) - g)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProbe {
    pub point: Vec<f64>,
    /// `max_i (f̄_i(point) - gamma_i)`; negative means strictly feasible.
    pub violation: f64,
}

/// Searches the domain for a point minimizing `max_i (f̄_i(w) - gamma_i)`:
/// random probes followed by projected subgradient descent from the best
/// probe. Deterministic for a given `seed`.
pub fn probe_feasibility(
    expected: &dyn ExpectedFunctions,
    domain: Domain,
    dim: usize,
    gamma: &[f64],
    start: Option<&[f64]>,
    seed: u64,
) -> FeasibilityProbe {
    const PROBES: usize = 512;
    const DESCENT_STEPS: usize = 2000;
    let h = |w: &[f64]| max_violation(expected, w, gamma);
    let mut rng = seeded_rng(seed, 0x5eed);
    let mut best = domain.initial_point(dim);
    let mut best_val = h(&best);
    if let Some(s) = start {
        let p = domain.project(s);
        let v = h(&p);
        if v < best_val {
            best = p;
            best_val = v;
        }
    }
    for k in 0..PROBES {
        let p = domain.sample(&mut rng, dim, k % 2 == 0);
        let v = h(&p);
        if v < best_val {
            best = p;
            best_val = v;
        }
    }
    if gamma.is_empty() {
        return FeasibilityProbe { point: best, violation: best_val };
    }
    let mut w = best.clone();
    let mut g = vec![0.0; dim];
    for k in 1..=DESCENT_STEPS {
        let (imax, _) = gamma
            .iter()
            .enumerate()
            .map(|(i, gi)| (i, expected.value(&w, i + 1) - gi))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        expected.grad_into(&w, imax + 1, &mut g);
        let gn = math::norm(&g);
        if gn == 0.0 {
            break;
        }
        let step = 0.5 * domain.radius() / math::sqrt(k as f64) / gn;
        math::axpy(-step, &g, &mut w);
        domain.project_mut(&mut w);
        let v = h(&w);
        if v < best_val {
            best.copy_from_slice(&w);
            best_val = v;
        }
    }
    FeasibilityProbe { point: best, violation: best_val }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_dev: f64,
    pub samples: usize,
}

impl MeanEstimate {
    pub fn std_err(&self) -> f64 {
        self.std_dev / math::sqrt(self.samples as f64)
    }
}

/// Monte Carlo estimate of every `f̄_i(w)` from `n` fresh draws.
pub fn sample_means<O: StochasticOracle>(oracle: &mut O, w: &[f64], n: usize) -> Vec<MeanEstimate> {
    assert!(n >= 2);
    let k = oracle.num_constraints() + 1;
    let mut mean = vec![0.0; k];
    let mut m2 = vec![0.0; k];
    for t in 1..=n {
        let s = oracle.draw();
        for i in 0..k {
            let x = s.value_at(w, i);
            let delta = x - mean[i];
            mean[i] += delta / t as f64;
            m2[i] += delta * (x - mean[i]);
        }
    }
    mean.into_iter()
        .zip(m2)
        .map(|(mean, m2)| MeanEstimate {
            mean,
            std_dev: math::sqrt(m2 / (n - 1) as f64),
            samples: n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_disjoint_and_reproducible() {
        let mut a = seeded_rng(9, TRAINING_STREAM);
        let mut b = seeded_rng(9, TRAINING_STREAM);
        let mut c = seeded_rng(9, EVALUATION_STREAM);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn clipped_noise_is_bounded() {
        let mut rng = seeded_rng(1, 0);
        for _ in 0..10_000 {
            assert!(clipped_normal(&mut rng).abs() <= NOISE_CLIP);
        }
    }
}
