//! Mean-variance portfolio selection over the probability simplex.
//!
//! Objective sample `<w, r r^T w>` with returns `r ~ N(mu, Sigma)`;
//! the return requirement `E<r, w> >= gamma` is written as the constraint
//! sample `gamma - <r, w>` with threshold `0`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::{
    clipped_normal, seeded_rng, ExpectedFunctions, KnownOptimum, LinearForm, Problem, ProblemSpec,
    SampledFunctions, StochasticOracle, NOISE_CLIP,
};
use crate::error::{Error, Result};
use crate::math::{self, dot, norm};
use crate::projection::Domain;

/// Largest dimension for which the exact optimum is attached.
const EXACT_OPTIMUM_MAX_DIM: usize = 10;

#[derive(Debug, Clone)]
pub struct PortfolioProblem {
    spec: ProblemSpec,
    mean: Arc<[f64]>,
    chol: Arc<[f64]>,
    /// `Sigma + mu mu^T`, row-major.
    second_moment: Vec<f64>,
    /// `-mu`, the coefficients of the expected constraint.
    neg_mean: Vec<f64>,
    min_return: f64,
}

/// `covariance` is `d x d`, row-major. `radius` is the distance bound used by
/// the solver's step size; the simplex lies inside the unit ball, so values
/// `>= 1` are valid.
pub fn make_portfolio(
    mean: Vec<f64>,
    covariance: Vec<f64>,
    min_return: f64,
    radius: f64,
) -> Result<PortfolioProblem> {
    let d = mean.len();
    if d == 0 {
        return Err(Error::Generator("portfolio needs at least one asset".into()));
    }
    if covariance.len() != d * d {
        return Err(Error::Dimension { expected: d * d, actual: covariance.len() });
    }
    if !(radius >= 1.0) {
        return Err(Error::Generator(format!("radius {radius} < 1 does not cover the simplex")));
    }
    let chol = math::cholesky_psd(&covariance, d)
        .ok_or_else(|| Error::Generator("covariance is not symmetric positive semidefinite".into()))?;
    let (best_asset, best_return) = mean
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if best_return < min_return - 1e-12 {
        return Err(Error::Generator(format!(
            "required return {min_return} exceeds the best achievable {best_return}"
        )));
    }
    let mut second_moment = covariance.clone();
    for i in 0..d {
        for j in 0..d {
            second_moment[i * d + j] += mean[i] * mean[j];
        }
    }
    let mean_norm = norm(&mean);
    let return_bound = mean_norm + math::frobenius(&chol) * NOISE_CLIP * math::sqrt(d as f64);
    let lipschitz = (2.0 * return_bound * return_bound).max(return_bound);
    let mut feasible_point = vec![0.0; d];
    feasible_point[best_asset] = 1.0;
    let known_optimum = if d <= EXACT_OPTIMUM_MAX_DIM {
        exact_optimum(&second_moment, &mean, min_return)
    } else {
        None
    };
    Ok(PortfolioProblem {
        spec: ProblemSpec {
            dim: d,
            constraints: 1,
            domain: Domain::Simplex { radius },
            gamma: vec![0.0],
            lipschitz,
            tau: (mean_norm > 0.0).then_some(mean_norm),
            known_optimum,
            feasible_point,
        },
        neg_mean: mean.iter().map(|m| -m).collect(),
        mean: mean.into(),
        chol: chol.into(),
        second_moment,
        min_return,
    })
}

/// Minimizes `w^T M w` over simplex points with `<mu, w> >= gamma` by
/// enumerating supports, with and without the return constraint active.
fn exact_optimum(second_moment: &[f64], mean: &[f64], min_return: f64) -> Option<KnownOptimum> {
    let d = mean.len();
    let objective = |w: &[f64]| {
        let mut mw = vec![0.0; d];
        math::mat_vec(second_moment, w, d, d, &mut mw);
        dot(w, &mw)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for support in math::subsets(d, d) {
        let s = support.len();
        if s == 0 {
            continue;
        }
        for with_return in [false, true] {
            let n = s + 1 + usize::from(with_return);
            let mut kkt = vec![0.0; n * n];
            let mut rhs = vec![0.0; n];
            for (a, &i) in support.iter().enumerate() {
                for (b, &j) in support.iter().enumerate() {
                    kkt[a * n + b] = 2.0 * second_moment[i * d + j];
                }
                kkt[a * n + s] = 1.0;
                kkt[s * n + a] = 1.0;
                if with_return {
                    kkt[a * n + s + 1] = mean[i];
                    kkt[(s + 1) * n + a] = mean[i];
                }
            }
            rhs[s] = 1.0;
            if with_return {
                rhs[s + 1] = min_return;
            }
            let Some(sol) = math::solve(&kkt, &rhs, n) else { continue };
            if sol[..s].iter().any(|&v| v < -1e-12) {
                continue;
            }
            let mut w = vec![0.0; d];
            for (a, &i) in support.iter().enumerate() {
                w[i] = sol[a].max(0.0);
            }
            if dot(mean, &w) < min_return - 1e-10 {
                continue;
            }
            let v = objective(&w);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, w));
            }
        }
    }
    best.map(|(value, point)| KnownOptimum { point, value, multipliers: None })
}

impl PortfolioProblem {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn min_return(&self) -> f64 {
        self.min_return
    }
}

impl ExpectedFunctions for PortfolioProblem {
    fn value(&self, w: &[f64], i: usize) -> f64 {
        if i == 0 {
            let d = w.len();
            let mut mw = vec![0.0; d];
            math::mat_vec(&self.second_moment, w, d, d, &mut mw);
            dot(w, &mw)
        } else {
            self.min_return - dot(&self.mean, w)
        }
    }

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]) {
        if i == 0 {
            let d = w.len();
            math::mat_vec(&self.second_moment, w, d, d, out);
            out.iter_mut().for_each(|v| *v *= 2.0);
        } else {
            out.copy_from_slice(&self.neg_mean);
        }
    }

    fn linear_form(&self, i: usize) -> Option<LinearForm<'_>> {
        (i == 1).then(|| LinearForm { coeffs: &self.neg_mean, offset: self.min_return })
    }
}

impl Problem for PortfolioProblem {
    type Oracle = PortfolioOracle;

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn oracle(&self, seed: u64, stream: u64) -> PortfolioOracle {
        PortfolioOracle {
            mean: self.mean.clone(),
            chol: self.chol.clone(),
            min_return: self.min_return,
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
pub struct PortfolioOracle {
    mean: Arc<[f64]>,
    chol: Arc<[f64]>,
    min_return: f64,
    rng: ChaCha8Rng,
    count: u64,
    z: Vec<f64>,
}

impl StochasticOracle for PortfolioOracle {
    type Sample = PortfolioSample;

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn draw(&mut self) -> PortfolioSample {
        self.count += 1;
        let d = self.mean.len();
        for z in self.z.iter_mut() {
            *z = clipped_normal(&mut self.rng);
        }
        let mut r = vec![0.0; d];
        math::mat_vec(&self.chol, &self.z, d, d, &mut r);
        let neg_returns = r.iter().zip(self.mean.iter()).map(|(x, m)| -(x + m)).collect();
        PortfolioSample { id: self.count, neg_returns, min_return: self.min_return }
    }
}

/// One return draw, stored negated so the constraint is `<-r, w> + gamma`.
#[derive(Debug, Clone)]
pub struct PortfolioSample {
    id: u64,
    neg_returns: Vec<f64>,
    min_return: f64,
}

impl SampledFunctions for PortfolioSample {
    fn draw_id(&self) -> u64 {
        self.id
    }

    fn value_at(&self, w: &[f64], i: usize) -> f64 {
        let rw = dot(&self.neg_returns, w);
        if i == 0 {
            rw * rw
        } else {
            rw + self.min_return
        }
    }

    fn grad_into(&self, w: &[f64], i: usize, out: &mut [f64]) {
        if i == 0 {
            let rw = dot(&self.neg_returns, w);
            for (o, r) in out.iter_mut().zip(&self.neg_returns) {
                *o = 2.0 * rw * r;
            }
        } else {
            out.copy_from_slice(&self.neg_returns);
        }
    }

    fn linear_form(&self, i: usize) -> Option<LinearForm<'_>> {
        (i == 1).then(|| LinearForm { coeffs: &self.neg_returns, offset: self.min_return })
    }
}
