//! Euclidean projections onto the ball, a box, the probability simplex, and
//! an intersection of halfspaces with the ball.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{self, axpy, dot, norm, norm_sq};

/// Projects onto `{z : ||z|| <= radius}`.
pub fn project_ball(w: &[f64], radius: f64) -> Vec<f64> {
    let mut z = w.to_vec();
    project_ball_mut(&mut z, radius);
    z
}

pub fn project_ball_mut(w: &mut [f64], radius: f64) {
    let n = norm(w);
    if n > radius {
        let s = radius / n;
        w.iter_mut().for_each(|v| *v *= s);
    }
}

/// Coordinatewise clamp of `x` into `[lo, hi]`.
pub fn project_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    if lo.len() != x.len() || hi.len() != x.len() {
        return Err(Error::Dimension { expected: x.len(), actual: lo.len().min(hi.len()) });
    }
    if let Some(i) = lo.iter().zip(hi).position(|(l, h)| !(l <= h)) {
        return Err(Error::config(format!("box bounds inverted at coordinate {i}: {} > {}", lo[i], hi[i])));
    }
    Ok(x.iter().zip(lo.iter().zip(hi)).map(|(&v, (&l, &h))| v.clamp(l, h)).collect())
}

/// Projects onto `{z : z >= 0, sum z = 1}` by sorting and thresholding.
pub fn project_simplex(w: &[f64]) -> Vec<f64> {
    let mut z = w.to_vec();
    project_simplex_mut(&mut z);
    z
}

pub fn project_simplex_mut(w: &mut [f64]) {
    assert!(!w.is_empty(), "simplex projection needs at least one coordinate");
    let mut u = w.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            threshold = t;
        }
    }
    w.iter_mut().for_each(|v| *v = (*v - threshold).max(0.0));
    // Absorb round-off so the coordinates sum to one.
    let s: f64 = w.iter().sum();
    if s > 0.0 && s != 1.0 {
        w.iter_mut().for_each(|v| *v /= s);
    }
}

/// `{z : <normal, z> <= offset}`
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset }
    }

    pub fn violation(&self, z: &[f64]) -> f64 {
        dot(&self.normal, z) - self.offset
    }

    fn project_mut(&self, z: &mut [f64]) {
        let nn = norm_sq(&self.normal);
        if nn == 0.0 {
            return;
        }
        let v = self.violation(z);
        if v > 0.0 {
            axpy(-v / nn, &self.normal, z);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Allowed constraint violation of the returned point.
    pub feasibility_tolerance: f64,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        DykstraOptions { tolerance: 1e-10, max_iterations: 10_000, feasibility_tolerance: 1e-8 }
    }
}

/// Largest halfspace count for which the exact feasibility probe runs.
pub const FEASIBILITY_PROBE_LIMIT: usize = 16;

/// Projects `w` onto `{z : <a_j, z> <= b_j for all j} ∩ {||z|| <= radius}`.
pub fn project_halfspaces(w: &[f64], constraints: &[Halfspace], radius: f64) -> Result<Vec<f64>> {
    project_halfspaces_with(w, constraints, radius, DykstraOptions::default())
}

pub fn project_halfspaces_with(
    w: &[f64],
    constraints: &[Halfspace],
    radius: f64,
    opts: DykstraOptions,
) -> Result<Vec<f64>> {
    let d = w.len();
    for h in constraints {
        if h.normal.len() != d {
            return Err(Error::Dimension { expected: d, actual: h.normal.len() });
        }
    }
    if !(radius > 0.0) {
        return Err(Error::config("ball radius must be positive"));
    }
    let max_violation = |z: &[f64]| {
        constraints.iter().map(|h| h.violation(z)).fold(norm(z) - radius, f64::max)
    };
    if max_violation(w) <= 0.0 {
        return Ok(w.to_vec());
    }
    check_nonempty(constraints, radius, d)?;

    let k = constraints.len();
    let mut x = w.to_vec();
    let mut prev = vec![0.0; d];
    let mut y = vec![0.0; d];
    // Dykstra correction terms, one per set; the ball is the last set.
    let mut corr = vec![0.0; (k + 1) * d];
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        prev.copy_from_slice(&x);
        for j in 0..=k {
            let cj = &mut corr[j * d..(j + 1) * d];
            for i in 0..d {
                y[i] = x[i] + cj[i];
            }
            x.copy_from_slice(&y);
            if j < k {
                constraints[j].project_mut(&mut x);
            } else {
                project_ball_mut(&mut x, radius);
            }
            for i in 0..d {
                cj[i] = y[i] - x[i];
            }
        }
        change = math::dist(&x, &prev);
        if change < opts.tolerance && max_violation(&x) <= opts.feasibility_tolerance {
            return Ok(x);
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iterations, change })
}

/// Minimum-norm point of `{z : <a_j, z> <= b_j}`, or `None` if that polyhedron
/// is empty.
///
/// Every candidate is the least-norm point of the affine hull of some
/// linearly independent subset of constraints taken as equalities; the
/// optimum is the smallest-norm feasible candidate.
pub fn min_norm_point(constraints: &[Halfspace], d: usize) -> Option<Vec<f64>> {
    let k = constraints.len();
    assert!(k <= FEASIBILITY_PROBE_LIMIT);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in math::subsets(k, k.min(d)) {
        let n = s.len();
        let z = if n == 0 {
            vec![0.0; d]
        } else {
            let mut gram = vec![0.0; n * n];
            for (a, &i) in s.iter().enumerate() {
                for (b, &j) in s.iter().enumerate() {
                    gram[a * n + b] = dot(&constraints[i].normal, &constraints[j].normal);
                }
            }
            let rhs: Vec<f64> = s.iter().map(|&i| constraints[i].offset).collect();
            let Some(nu) = math::solve(&gram, &rhs, n) else { continue };
            let mut z = vec![0.0; d];
            for (a, &i) in s.iter().enumerate() {
                axpy(nu[a], &constraints[i].normal, &mut z);
            }
            z
        };
        let feasible = constraints
            .iter()
            .all(|h| h.violation(&z) <= 1e-9 * (1.0 + h.offset.abs()));
        if feasible {
            let n2 = norm_sq(&z);
            if best.as_ref().is_none_or(|(b, _)| n2 < *b) {
                best = Some((n2, z));
            }
        }
    }
    best.map(|(_, z)| z)
}

fn check_nonempty(constraints: &[Halfspace], radius: f64, d: usize) -> Result<()> {
    for (j, h) in constraints.iter().enumerate() {
        if norm_sq(&h.normal) == 0.0 && h.offset < 0.0 {
            return Err(Error::infeasible(format!("halfspace {j} reads 0 <= {}", h.offset)));
        }
    }
    if constraints.len() > FEASIBILITY_PROBE_LIMIT {
        return Ok(());
    }
    match min_norm_point(constraints, d) {
        None => Err(Error::infeasible("halfspaces have empty intersection")),
        Some(z) if norm(&z) > radius * (1.0 + 1e-12) => Err(Error::infeasible(format!(
            "closest point of the polyhedron has norm {} > radius {radius}",
            norm(&z)
        ))),
        Some(_) => Ok(()),
    }
}

/// Primal feasible region used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `{w : ||w|| <= radius}`
    Ball { radius: f64 },
    /// Probability simplex. `radius` bounds the distance from the initial
    /// (uniform) point to any simplex point and enters the step size.
    Simplex { radius: f64 },
}

impl Domain {
    pub fn radius(&self) -> f64 {
        match *self {
            Domain::Ball { radius } | Domain::Simplex { radius } => radius,
        }
    }

    pub fn project_mut(&self, w: &mut [f64]) {
        match *self {
            Domain::Ball { radius } => project_ball_mut(w, radius),
            Domain::Simplex { .. } => project_simplex_mut(w),
        }
    }

    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        let mut z = w.to_vec();
        self.project_mut(&mut z);
        z
    }

    /// First iterate: the projection of the origin.
    pub fn initial_point(&self, dim: usize) -> Vec<f64> {
        self.project(&vec![0.0; dim])
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        match *self {
            Domain::Ball { radius } => norm(w) <= radius + tol,
            Domain::Simplex { .. } => {
                w.iter().all(|&v| v >= -tol) && (w.iter().sum::<f64>() - 1.0).abs() <= tol
            }
        }
    }

    /// `max_{w in domain} <a, w>`
    pub fn support(&self, a: &[f64]) -> f64 {
        match *self {
            Domain::Ball { radius } => radius * norm(a),
            Domain::Simplex { .. } => a.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Random point of the domain; `boundary` selects the sphere (ball) or a
    /// random vertex (simplex).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, dim: usize, boundary: bool) -> Vec<f64> {
        match *self {
            Domain::Ball { radius } => {
                let mut u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                let n = norm(&u);
                let r = if boundary {
                    radius
                } else {
                    radius * math::powf(rng.random::<f64>(), 1.0 / dim as f64)
                };
                u.iter_mut().for_each(|v| *v *= r / n);
                u
            }
            Domain::Simplex { .. } => {
                if boundary {
                    let mut v = vec![0.0; dim];
                    v[rng.random_range(0..dim)] = 1.0;
                    v
                } else {
                    let mut v: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
                    let s: f64 = v.iter().sum();
                    v.iter_mut().for_each(|x| *x /= s);
                    v
                }
            }
        }
    }
}
