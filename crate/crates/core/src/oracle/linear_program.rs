//! Linear objective with linear stochastic constraints over a ball.
//!
//! `f_t^0(w) = <c(xi), w>`, `f_t^i(w) = <a_i(xi), w> - b_i(xi)` with every
//! coefficient Gaussian around its mean. Thresholds are zero.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::{
    clipped_normal, probe_feasibility, seeded_rng, AffineSample, ExpectedFunctions, KnownOptimum,
    LinearForm, Problem, ProblemSpec, StochasticOracle, NOISE_CLIP,
};
use crate::error::{Error, Result};
use crate::math::{self, axpy, dot, norm};
use crate::projection::Domain;

/// Largest constraint count for which the exact optimum and `tau` are
/// computed by enumeration.
const ENUMERATION_LIMIT: usize = 16;

#[derive(Debug, Clone)]
pub struct LpProblem {
    spec: ProblemSpec,
    /// `(m + 1) x d` mean coefficients: objective first.
    rows: Arc<[f64]>,
    /// Mean offsets: `0` for the objective, `-b_i` for constraints.
    offsets: Arc<[f64]>,
    noise: f64,
}

pub fn make_stochastic_lp(
    c_mean: Vec<f64>,
    a_mean: Vec<Vec<f64>>,
    b_mean: Vec<f64>,
    noise: f64,
    radius: f64,
) -> Result<LpProblem> {
    let d = c_mean.len();
    let m = a_mean.len();
    if d == 0 {
        return Err(Error::Generator("empty objective vector".into()));
    }
    if b_mean.len() != m {
        return Err(Error::Dimension { expected: m, actual: b_mean.len() });
    }
    if let Some(a) = a_mean.iter().find(|a| a.len() != d) {
        return Err(Error::Dimension { expected: d, actual: a.len() });
    }
    if !(noise >= 0.0) || !(radius > 0.0) {
        return Err(Error::Generator(format!(
            "need noise >= 0 and radius > 0, got noise = {noise}, radius = {radius}"
        )));
    }
    let mut rows = c_mean.clone();
    for a in &a_mean {
        rows.extend_from_slice(a);
    }
    let mut offsets = vec![0.0];
    offsets.extend(b_mean.iter().map(|b| -b));

    let noise_norm = noise * NOISE_CLIP * math::sqrt(d as f64);
    let lipschitz = rows.chunks(d).map(norm).fold(0.0, f64::max) + noise_norm;
    let tau = (1..=ENUMERATION_LIMIT).contains(&m)
        .then(|| math::min_norm_convex_combination(&a_mean))
        .filter(|&t| t > 0.0);

    let mut problem = LpProblem {
        spec: ProblemSpec {
            dim: d,
            constraints: m,
            domain: Domain::Ball { radius },
            gamma: vec![0.0; m],
            lipschitz: if lipschitz > 0.0 { lipschitz } else { 1.0 },
            tau,
            known_optimum: None,
            feasible_point: vec![0.0; d],
        },
        rows: rows.into(),
        offsets: offsets.into(),
        noise,
    };
    let probe = probe_feasibility(&problem, problem.spec.domain, d, &problem.spec.gamma, None, 3);
    if m > 0 && !(probe.violation < 0.0) {
        return Err(Error::Generator(format!(
            "mean constraints have no strictly feasible point in the ball (best violation {})",
            probe.violation
        )));
    }
    problem.spec.feasible_point = probe.point;
    if m <= ENUMERATION_LIMIT {
        problem.spec.known_optimum = solve_mean_lp(&c_mean, &a_mean, &b_mean, radius);
    }
    Ok(problem)
}

/// Exact minimizer of `<c, w>` over `{A w <= b} ∩ ball(R)` by enumerating
/// faces. Each face fixes a set of active constraints; on it the optimum is
/// either the face's min-norm point (when `c` is orthogonal to the face) or
/// the point where `-c` projected onto the face meets the sphere.
fn solve_mean_lp(c: &[f64], a: &[Vec<f64>], b: &[f64], radius: f64) -> Option<KnownOptimum> {
    let d = c.len();
    let m = a.len();
    let tol = 1e-9;
    let feasible = |w: &[f64]| {
        norm(w) <= radius * (1.0 + tol) && a.iter().zip(b).all(|(ai, bi)| dot(ai, w) <= bi + tol)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for active in math::subsets(m, d) {
        let k = active.len();
        let mut gram = vec![0.0; k * k];
        for (r, &i) in active.iter().enumerate() {
            for (s, &j) in active.iter().enumerate() {
                gram[r * k + s] = dot(&a[i], &a[j]);
            }
        }
        // p = A^T (A A^T)^{-1} b, projected c = c - A^T (A A^T)^{-1} A c
        let (p, pc) = if k == 0 {
            (vec![0.0; d], c.to_vec())
        } else {
            let rhs_b: Vec<f64> = active.iter().map(|&i| b[i]).collect();
            let rhs_c: Vec<f64> = active.iter().map(|&i| dot(&a[i], c)).collect();
            let (Some(yb), Some(yc)) = (math::solve(&gram, &rhs_b, k), math::solve(&gram, &rhs_c, k))
            else {
                continue;
            };
            let mut p = vec![0.0; d];
            let mut pc = c.to_vec();
            for (r, &i) in active.iter().enumerate() {
                axpy(yb[r], &a[i], &mut p);
                axpy(-yc[r], &a[i], &mut pc);
            }
            (p, pc)
        };
        let p_sq = math::norm_sq(&p);
        if p_sq > radius * radius * (1.0 + tol) {
            continue;
        }
        let pc_norm = norm(&pc);
        let mut w = p;
        if pc_norm > 1e-12 * (1.0 + norm(c)) {
            let t = math::sqrt((radius * radius - p_sq).max(0.0));
            axpy(-t / pc_norm, &pc, &mut w);
        }
        if !feasible(&w) {
            continue;
        }
        let value = dot(c, &w);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, w));
        }
    }
    best.map(|(value, point)| KnownOptimum { point, value, multipliers: None })
}

impl LpProblem {
    pub fn noise(&self) -> f64 {
        self.noise
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.spec.dim;
        &self.rows[i * d..(i + 1) * d]
    }
}

impl ExpectedFunctions for LpProblem {
    fn value(&self, w: &[f64], i: usize) -> f64 {
        dot(self.row(i), w) + self.offsets[i]
    }

    fn grad_into(&self, _w: &[f64], i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }

    fn linear_form(&self, i: usize) -> Option<LinearForm<'_>> {
        Some(LinearForm { coeffs: self.row(i), offset: self.offsets[i] })
    }
}

impl Problem for LpProblem {
    type Oracle = LpOracle;

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn oracle(&self, seed: u64, stream: u64) -> LpOracle {
        LpOracle {
            dim: self.spec.dim,
            rows: self.rows.clone(),
            offsets: self.offsets.clone(),
            noise: self.noise,
            rng: seeded_rng(seed, stream),
            count: 0,
        }
    }

    fn expected(&self) -> Option<&dyn ExpectedFunctions> {
        Some(self)
    }
}

#[derive(Debug, Clone)]
pub struct LpOracle {
    dim: usize,
    rows: Arc<[f64]>,
    offsets: Arc<[f64]>,
    noise: f64,
    rng: ChaCha8Rng,
    count: u64,
}

impl StochasticOracle for LpOracle {
    type Sample = AffineSample;

    fn dim(&self) -> usize {
        self.dim
    }

    fn num_constraints(&self) -> usize {
        self.offsets.len() - 1
    }

    fn draw(&mut self) -> AffineSample {
        self.count += 1;
        let mut rows = self.rows.to_vec();
        let mut offsets = self.offsets.to_vec();
        if self.noise > 0.0 {
            for r in rows.iter_mut() {
                *r += self.noise * clipped_normal(&mut self.rng);
            }
            // The objective has no offset; constraint offsets are -b_i(xi).
            for o in offsets.iter_mut().skip(1) {
                *o -= self.noise * clipped_normal(&mut self.rng);
            }
        }
        AffineSample { id: self.count, dim: self.dim, rows, offsets }
    }
}
