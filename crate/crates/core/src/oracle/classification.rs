//! Neyman-Pearson classification with the hinge loss.
//!
//! Objective: positive-class risk `E[max(0, 1 - <w, x>) | y = +1]`.
//! Constraint: negative-class risk `E[max(0, 1 + <w, x>) | y = -1] <= gamma`.
//! Each draw holds one example from each class.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    clipped_normal, probe_feasibility, seeded_rng, ExpectedFunctions, Problem, ProblemSpec,
    SampledFunctions, StochasticOracle, NOISE_CLIP,
};
use crate::error::{Error, Result};
use crate::math::{self, axpy, dot, norm};
use crate::projection::Domain;

/// Class-conditional feature distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassSource {
    /// `x = mean + chol * z`, `z` standard normal (clipped).
    Gaussian { mean: Vec<f64>, chol: Vec<f64> },
    /// Uniform resampling from a finite set of `n x dim` points.
    Empirical { points: Vec<f64>, dim: usize },
}

impl ClassSource {
    pub fn gaussian(mean: Vec<f64>, covariance: &[f64]) -> Result<Self> {
        let d = mean.len();
        if covariance.len() != d * d {
            return Err(Error::Dimension { expected: d * d, actual: covariance.len() });
        }
        let chol = math::cholesky_psd(covariance, d)
            .ok_or_else(|| Error::Generator("class covariance is not positive semidefinite".into()))?;
        Ok(ClassSource::Gaussian { mean, chol })
    }

    pub fn isotropic(mean: Vec<f64>, std_dev: f64) -> Self {
        let d = mean.len();
        let mut chol = vec![0.0; d * d];
        for i in 0..d {
            chol[i * d + i] = std_dev;
        }
        ClassSource::Gaussian { mean, chol }
    }

    pub fn empirical(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| Error::Generator("empty class".into()))?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::Dimension { expected: dim, actual: p.len() });
        }
        Ok(ClassSource::Empirical { points: points.into_iter().flatten().collect(), dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            ClassSource::Gaussian { mean, .. } => mean.len(),
            ClassSource::Empirical { dim, .. } => *dim,
        }
    }

    fn max_norm(&self) -> f64 {
        match self {
            ClassSource::Gaussian { mean, chol } => {
                norm(mean) + math::frobenius(chol) * NOISE_CLIP * math::sqrt(mean.len() as f64)
            }
            ClassSource::Empirical { points, dim } => {
                points.chunks(*dim).map(norm).fold(0.0, f64::max)
            }
        }
    }

    fn draw_into(&self, rng: &mut ChaCha8Rng, z: &mut [f64], out: &mut [f64]) {
        match self {
            ClassSource::Gaussian { mean, chol } => {
                let d = mean.len();
                for zi in z.iter_mut() {
                    *zi = clipped_normal(rng);
                }
                math::mat_vec(chol, z, d, d, out);
                axpy(1.0, mean, out);
            }
            ClassSource::Empirical { points, dim } => {
                let n = points.len() / dim;
                let k = rng.random_range(0..n);
                out.copy_from_slice(&points[k * dim..(k + 1) * dim]);
            }
        }
    }

    /// `E[max(0, 1 - sign <w, x>)]` and its gradient.
    fn hinge_risk(&self, w: &[f64], sign: f64, grad: Option<&mut [f64]>) -> f64 {
        match self {
            ClassSource::Gaussian { mean, chol } => {
                let d = mean.len();
                // sign <w, x> ~ N(sign <w, mean>, ||chol^T w||^2)
                let margin = 1.0 - sign * dot(w, mean);
                let mut ctw = vec![0.0; d];
                math::mat_t_vec(chol, w, d, d, &mut ctw);
                let s = norm(&ctw);
                if s < 1e-300 {
                    if let Some(g) = grad {
                        g.iter_mut().for_each(|v| *v = 0.0);
                        if margin > 0.0 {
                            axpy(-sign, mean, g);
                        }
                    }
                    return margin.max(0.0);
                }
                let u = margin / s;
                let cdf = math::normal_cdf(u);
                let pdf = math::normal_pdf(u);
                if let Some(g) = grad {
                    // d/dw = -sign mean Phi(u) + phi(u) chol chol^T w / s
                    math::mat_vec(chol, &ctw, d, d, g);
                    g.iter_mut().for_each(|v| *v *= pdf / s);
                    axpy(-sign * cdf, mean, g);
                }
                margin * cdf + s * pdf
            }
            ClassSource::Empirical { points, dim } => {
                let n = points.len() / dim;
                let mut total = 0.0;
                let mut g = grad;
                if let Some(g) = g.as_deref_mut() {
                    g.iter_mut().for_each(|v| *v = 0.0);
                }
                for x in points.chunks(*dim) {
                    let loss = 1.0 - sign * dot(w, x);
                    if loss > 0.0 {
                        total += loss;
                        if let Some(g) = g.as_deref_mut() {
                            axpy(-sign, x, g);
                        }
                    }
                }
                if let Some(g) = g {
                    g.iter_mut().for_each(|v| *v /= n as f64);
                }
                total / n as f64
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NpProblem {
    spec: ProblemSpec,
    positive: Arc<ClassSource>,
    negative: Arc<ClassSource>,
}

/// Builds the Neyman-Pearson problem. `gamma` bounds the negative-class
/// hinge risk. `tau` is estimated by probing the constraint's level set.
pub fn make_np_classification(
    positive: ClassSource,
    negative: ClassSource,
    gamma: f64,
    radius: f64,
) -> Result<NpProblem> {
    let d = positive.dim();
    if negative.dim() != d {
        return Err(Error::Dimension { expected: d, actual: negative.dim() });
    }
    if !(radius > 0.0) {
        return Err(Error::Generator(format!("radius must be positive, got {radius}")));
    }
    let lipschitz = positive.max_norm().max(negative.max_norm());
    let mut problem = NpProblem {
        spec: ProblemSpec {
            dim: d,
            constraints: 1,
            domain: Domain::Ball { radius },
            gamma: vec![gamma],
            lipschitz,
            tau: None,
            known_optimum: None,
            feasible_point: vec![0.0; d],
        },
        positive: Arc::new(positive),
        negative: Arc::new(negative),
    };
    let domain = problem.spec.domain;
    let probe = probe_feasibility(&problem, domain, d, &[gamma], None, 1);
    if !(probe.violation < 0.0) {
        return Err(Error::Generator(format!(
            "no weight vector in the ball keeps the negative-class risk below {gamma} \
             (best found {})",
            probe.violation + gamma
        )));
    }
    problem.spec.feasible_point = probe.point;
    problem.spec.tau = Some(problem.estimate_tau(2048));
    Ok(problem)
}

impl NpProblem {
    /// Smallest constraint-gradient norm over points where the negative-class
    /// risk crosses `gamma` along rays from the origin, shrunk by 10%.
    /// Falls back to the Lipschitz constant when no crossing exists inside
    /// the ball (the constraint can then never bind).
    fn estimate_tau(&self, rays: usize) -> f64 {
        const GRID: usize = 32;
        let d = self.spec.dim;
        let r = self.spec.domain.radius();
        let gamma = self.spec.gamma[0];
        let mut rng = seeded_rng(2, 0x7a0);
        let mut grad = vec![0.0; d];
        let mut min_norm = f64::INFINITY;
        let f = |t: f64, u: &[f64]| {
            let w: Vec<f64> = u.iter().map(|x| t * x).collect();
            self.value(&w, 1) - gamma
        };
        for _ in 0..rays {
            let u = Domain::Ball { radius: 1.0 }.sample(&mut rng, d, true);
            let Some(inside) = (1..=GRID).map(|k| r * k as f64 / GRID as f64).find(|&t| f(t, &u) < 0.0)
            else {
                continue;
            };
            let mut crossings = vec![bisect(|t| f(t, &u), 0.0, inside)];
            if f(r, &u) > 0.0 {
                crossings.push(bisect(|t| f(t, &u), r, inside));
            }
            for t in crossings {
                let w: Vec<f64> = u.iter().map(|x| t * x).collect();
                self.grad_into(&w, 1, &mut grad);
                min_norm = min_norm.min(norm(&grad));
            }
        }
        if min_norm.is_finite() {
            0.9 * min_norm
        } else {
            self.spec.lipschitz
        }
    }

    pub fn positive(&self) -> &ClassSource {
        &self.positive
    }

    pub fn negative(&self) -> &ClassSource {
        &self.negative
    }
}

/// Root of `f` between `above` (f > 0) and `below` (f < 0).
fn bisect(f: impl Fn(f64) -> f64, mut above: f64, mut below: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (above + below);
        if f(mid) > 0.0 {
            above = mid;
        } else {
            below = mid;
        }
    }
    0.5 * (above + below)
}

impl ExpectedFunctions for NpProblem {
    fn value(&self, w: &[f64], i: usize) -> f64 {
        if i == 0 {
            self.positive.hinge_risk(w, 1.0, None)
        } else {
            self.negative.hinge_risk(w, -1.0, None)
        }
    }

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]) {
        if i == 0 {
            self.positive.hinge_risk(w, 1.0, Some(out));
        } else {
            self.negative.hinge_risk(w, -1.0, Some(out));
        }
    }
}

impl Problem for NpProblem {
    type Oracle = NpOracle;

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn oracle(&self, seed: u64, stream: u64) -> NpOracle {
        NpOracle {
            positive: self.positive.clone(),
            negative: self.negative.clone(),
            rng: seeded_rng(seed, stream),
            count: 0,
            z: vec![0.0; self.spec.dim],
        }
    }

    fn expected(&self) -> Option<&dyn ExpectedFunctions> {
        Some(self)
    }
}

#[derive(Debug, Clone)]
pub struct NpOracle {
    positive: Arc<ClassSource>,
    negative: Arc<ClassSource>,
    rng: ChaCha8Rng,
    count: u64,
    z: Vec<f64>,
}

impl StochasticOracle for NpOracle {
    type Sample = NpSample;

    fn dim(&self) -> usize {
        self.z.len()
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn draw(&mut self) -> NpSample {
        self.count += 1;
        let d = self.z.len();
        let mut positive = vec![0.0; d];
        let mut negative = vec![0.0; d];
        self.positive.draw_into(&mut self.rng, &mut self.z, &mut positive);
        self.negative.draw_into(&mut self.rng, &mut self.z, &mut negative);
        NpSample { id: self.count, positive, negative }
    }
}

/// One positive and one negative example.
#[derive(Debug, Clone, PartialEq)]
pub struct NpSample {
    pub id: u64,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl NpSample {
    fn example(&self, i: usize) -> (&[f64], f64) {
        if i == 0 {
            (&self.positive, 1.0)
        } else {
            (&self.negative, -1.0)
        }
    }
}

impl SampledFunctions for NpSample {
    fn draw_id(&self) -> u64 {
        self.id
    }

    fn value_at(&self, w: &[f64], i: usize) -> f64 {
        let (x, y) = self.example(i);
        (1.0 - y * dot(w, x)).max(0.0)
    }

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]) {
        let (x, y) = self.example(i);
        if 1.0 - y * dot(w, x) > 0.0 {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = -y * xi;
            }
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}
