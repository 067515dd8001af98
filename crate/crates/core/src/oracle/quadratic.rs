//! Verification fixture with a closed-form constrained optimum.
//!
//! `f̄_0(w) = ||w - c||^2`, `f̄_i(w) = <a_i, w>`, thresholds `b_i`. Each draw
//! perturbs the objective by a zero-mean linear term `<xi, w>` and every
//! constraint normal by zero-mean noise.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    clipped_normal, probe_feasibility, seeded_rng, ExpectedFunctions, KnownOptimum, LinearForm,
    Problem, ProblemSpec, SampledFunctions, StochasticOracle, NOISE_CLIP,
};
use crate::error::{Error, Result};
use crate::math::{self, axpy, dot, norm};
use crate::projection::Domain;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticOptions {
    pub radius: f64,
    /// Standard deviation of each coordinate of the objective perturbation.
    pub objective_noise: f64,
    /// Standard deviation of each coordinate of the constraint-normal noise.
    pub constraint_noise: f64,
    /// Norm of every constraint normal.
    pub constraint_scale: f64,
    /// Angular spread of the constraint normals around a common direction.
    pub spread: f64,
}

impl Default for QuadraticOptions {
    fn default() -> Self {
        QuadraticOptions {
            radius: 1.0,
            objective_noise: 0.1,
            constraint_noise: 0.05,
            constraint_scale: 5.0,
            spread: 0.2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    spec: ProblemSpec,
    center: Arc<[f64]>,
    /// `m x d`, row-major.
    normals: Arc<[f64]>,
    objective_noise: f64,
    constraint_noise: f64,
}

/// Random instance with the default options.
pub fn make_known_optimum_quadratic(dim: usize, constraints: usize, seed: u64) -> Result<QuadraticProblem> {
    QuadraticProblem::generate(dim, constraints, seed, QuadraticOptions::default())
}

impl QuadraticProblem {
    pub fn generate(dim: usize, m: usize, seed: u64, opts: QuadraticOptions) -> Result<Self> {
        if dim < 2 || m < 1 {
            return Err(Error::Generator(format!("need d >= 2 and m >= 1, got d = {dim}, m = {m}")));
        }
        let mut rng = seeded_rng(seed, 0);
        let mut last_err = None;
        for _ in 0..64 {
            let axis = unit(&mut rng, dim);
            let normals: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let mut v = axis.clone();
                    axpy(opts.spread, &gaussian(&mut rng, dim), &mut v);
                    let n = norm(&v);
                    v.iter().map(|x| opts.constraint_scale * x / n).collect()
                })
                .collect();
            let mut dir = axis.clone();
            axpy(0.15, &gaussian(&mut rng, dim), &mut dir);
            let cn = norm(&dir);
            let radius_c = opts.radius * rng.random_range(0.6..0.9);
            let center: Vec<f64> = dir.iter().map(|x| radius_c * x / cn).collect();
            let offsets: Vec<f64> = (0..m)
                .map(|_| rng.random_range(0.02..0.2) * opts.constraint_scale * opts.radius)
                .collect();
            match Self::from_parts(center, normals, offsets, opts) {
                Ok(p) => return Ok(p),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Generator("fixture generation failed".into())))
    }

    /// Builds the fixture from explicit center `c`, normals `a_i` and
    /// thresholds `b_i`. Noise levels and the radius come from `opts`.
    pub fn from_parts(
        center: Vec<f64>,
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        opts: QuadraticOptions,
    ) -> Result<Self> {
        let d = center.len();
        let m = normals.len();
        if offsets.len() != m {
            return Err(Error::Dimension { expected: m, actual: offsets.len() });
        }
        if let Some(a) = normals.iter().find(|a| a.len() != d) {
            return Err(Error::Dimension { expected: d, actual: a.len() });
        }
        let radius = opts.radius;
        let tau = if m == 0 {
            None
        } else {
            let t = math::min_norm_convex_combination(&normals);
            if t < 1e-6 {
                return Err(Error::Generator(format!("degenerate constraint normals (tau = {t:e})")));
            }
            Some(t)
        };
        let (point, multipliers) = kkt_solve(&center, &normals, &offsets)?;
        if norm(&point) >= radius {
            return Err(Error::Generator("constrained optimum lies outside the ball".into()));
        }
        let value = math::dist_sq(&point, &center);
        let noise_norm = |s: f64| NOISE_CLIP * s * math::sqrt(d as f64);
        let objective_lip = 2.0 * (radius + norm(&center)) + noise_norm(opts.objective_noise);
        let constraint_lip = normals.iter().map(|a| norm(a)).fold(0.0, f64::max)
            + if m > 0 { noise_norm(opts.constraint_noise) } else { 0.0 };

        let flat: Vec<f64> = normals.iter().flatten().copied().collect();
        let mut problem = QuadraticProblem {
            spec: ProblemSpec {
                dim: d,
                constraints: m,
                domain: Domain::Ball { radius },
                gamma: offsets,
                lipschitz: objective_lip.max(constraint_lip),
                tau,
                known_optimum: Some(KnownOptimum { point, value, multipliers: Some(multipliers) }),
                feasible_point: vec![0.0; d],
            },
            center: center.into(),
            normals: flat.into(),
            objective_noise: opts.objective_noise,
            constraint_noise: opts.constraint_noise,
        };
        let probe = probe_feasibility(&problem, problem.spec.domain, d, &problem.spec.gamma, None, 0);
        if !(probe.violation < 0.0) {
            return Err(Error::Generator("no strictly feasible point".into()));
        }
        problem.spec.feasible_point = probe.point;
        Ok(problem)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        let d = self.spec.dim;
        &self.normals[i * d..(i + 1) * d]
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)).collect()
}

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v = gaussian(rng, d);
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

/// KKT solution of `min ||w - c||^2 s.t. <a_i, w> <= b_i`, by enumerating
/// active sets. Returns the optimum and its multipliers.
fn kkt_solve(c: &[f64], normals: &[Vec<f64>], offsets: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = c.len();
    let m = normals.len();
    if m > 16 {
        return Err(Error::Generator("closed-form optimum limited to m <= 16".into()));
    }
    for s in math::subsets(m, m.min(d)) {
        let k = s.len();
        let mut w = c.to_vec();
        let mut lambda = vec![0.0; m];
        if k > 0 {
            let mut gram = vec![0.0; k * k];
            for (p, &i) in s.iter().enumerate() {
                for (q, &j) in s.iter().enumerate() {
                    gram[p * k + q] = dot(&normals[i], &normals[j]);
                }
            }
            let rhs: Vec<f64> = s.iter().map(|&i| dot(&normals[i], c) - offsets[i]).collect();
            let Some(nu) = math::solve(&gram, &rhs, k) else { continue };
            if nu.iter().any(|&v| v < -1e-12) {
                continue;
            }
            for (p, &i) in s.iter().enumerate() {
                axpy(-nu[p], &normals[i], &mut w);
                // grad ||w - c||^2 = 2 (w - c) = -2 sum nu_i a_i
                lambda[i] = 2.0 * nu[p].max(0.0);
            }
        }
        let feasible = normals
            .iter()
            .zip(offsets)
            .all(|(a, b)| dot(a, &w) <= b + 1e-10 * (1.0 + b.abs()));
        if feasible {
            return Ok((w, lambda));
        }
    }
    Err(Error::Generator("no active set satisfies the KKT conditions".into()))
}

impl ExpectedFunctions for QuadraticProblem {
    fn value(&self, w: &[f64], i: usize) -> f64 {
        if i == 0 {
            math::dist_sq(w, &self.center)
        } else {
            dot(self.normal(i - 1), w)
        }
    }

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]) {
        if i == 0 {
            for ((o, wi), ci) in out.iter_mut().zip(w).zip(self.center.iter()) {
                *o = 2.0 * (wi - ci);
            }
        } else {
            out.copy_from_slice(self.normal(i - 1));
        }
    }

    fn linear_form(&self, i: usize) -> Option<LinearForm<'_>> {
        (i > 0).then(|| LinearForm { coeffs: self.normal(i - 1), offset: 0.0 })
    }
}

impl Problem for QuadraticProblem {
    type Oracle = QuadraticOracle;

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn oracle(&self, seed: u64, stream: u64) -> QuadraticOracle {
        QuadraticOracle { problem: self.clone(), rng: seeded_rng(seed, stream), count: 0 }
    }

    fn expected(&self) -> Option<&dyn ExpectedFunctions> {
        Some(self)
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    problem: QuadraticProblem,
    rng: ChaCha8Rng,
    count: u64,
}

impl StochasticOracle for QuadraticOracle {
    type Sample = QuadraticSample;

    fn dim(&self) -> usize {
        self.problem.spec.dim
    }

    fn num_constraints(&self) -> usize {
        self.problem.spec.constraints
    }

    fn draw(&mut self) -> QuadraticSample {
        self.count += 1;
        let p = &self.problem;
        let d = p.spec.dim;
        let shift = (0..d).map(|_| p.objective_noise * clipped_normal(&mut self.rng)).collect();
        let normals = p
            .normals
            .iter()
            .map(|a| a + p.constraint_noise * clipped_normal(&mut self.rng))
            .collect();
        QuadraticSample { id: self.count, center: p.center.clone(), shift, normals }
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticSample {
    id: u64,
    center: Arc<[f64]>,
    shift: Vec<f64>,
    normals: Vec<f64>,
}

impl QuadraticSample {
    fn normal(&self, i: usize) -> &[f64] {
        let d = self.center.len();
        &self.normals[i * d..(i + 1) * d]
    }
}

impl SampledFunctions for QuadraticSample {
    fn draw_id(&self) -> u64 {
        self.id
    }

    fn value_at(&self, w: &[f64], i: usize) -> f64 {
        if i == 0 {
            math::dist_sq(w, &self.center) + dot(&self.shift, w)
        } else {
            dot(self.normal(i - 1), w)
        }
    }

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]) {
        if i == 0 {
            for k in 0..w.len() {
                out[k] = 2.0 * (w[k] - self.center[k]) + self.shift[k];
            }
        } else {
            out.copy_from_slice(self.normal(i - 1));
        }
    }

    fn linear_form(&self, i: usize) -> Option<LinearForm<'_>> {
        (i > 0).then(|| LinearForm { coeffs: self.normal(i - 1), offset: 0.0 })
    }
}
