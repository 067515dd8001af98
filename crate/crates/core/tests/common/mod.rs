//! Brute-force reference solutions shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use stomo_core::math::{dist_sq, dot, norm, solve};
use stomo_core::projection::Halfspace;

/// Best feasible candidate by distance to `x`.
fn closest(x: &[f64], candidates: impl IntoIterator<Item = Vec<f64>>) -> Vec<f64> {
    candidates
        .into_iter()
        .min_by(|a, b| dist_sq(a, x).total_cmp(&dist_sq(b, x)))
        .expect("at least one feasible candidate")
}

/// Ball projection by enumerating the two KKT cases.
pub fn ball_kkt(x: &[f64], radius: f64) -> Vec<f64> {
    let n = norm(x);
    let mut cands = Vec::new();
    if n <= radius {
        cands.push(x.to_vec());
    }
    if n > 0.0 {
        cands.push(x.iter().map(|v| v * radius / n).collect());
    } else {
        cands.push(x.to_vec());
    }
    closest(x, cands)
}

/// Box projection by enumerating all `3^d` coordinate cases.
pub fn box_kkt(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut cands = Vec::new();
    for code in 0..3usize.pow(d as u32) {
        let mut c = code;
        let mut p = Vec::with_capacity(d);
        for k in 0..d {
            p.push(match c % 3 {
                0 => x[k],
                1 => lo[k],
                _ => hi[k],
            });
            c /= 3;
        }
        if p.iter().zip(lo).zip(hi).all(|((v, l), h)| v >= l && v <= h) {
            cands.push(p);
        }
    }
    closest(x, cands)
}

/// Simplex projection by enumerating supports.
pub fn simplex_kkt(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut cands = Vec::new();
    for mask in 1usize..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|k| mask >> k & 1 == 1).collect();
        let nu = (support.iter().map(|&k| x[k]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut p = vec![0.0; d];
        for &k in &support {
            p[k] = x[k] - nu;
        }
        if p.iter().all(|&v| v >= -1e-15) {
            cands.push(p);
        }
    }
    closest(x, cands)
}

/// Projection onto an intersection of halfspaces by enumerating active
/// sets. Ignores any ball constraint.
pub fn halfspaces_kkt(x: &[f64], hs: &[Halfspace]) -> Vec<f64> {
    let k = hs.len();
    let mut cands = Vec::new();
    for mask in 0usize..(1 << k) {
        let active: Vec<&Halfspace> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| &hs[j]).collect();
        let s = active.len();
        let mut gram = vec![0.0; s * s];
        let mut rhs = vec![0.0; s];
        for (a, ha) in active.iter().enumerate() {
            for (b, hb) in active.iter().enumerate() {
                gram[a * s + b] = dot(&ha.normal, &hb.normal);
            }
            rhs[a] = dot(&ha.normal, x) - ha.offset;
        }
        let Some(nu) = (if s == 0 { Some(Vec::new()) } else { solve(&gram, &rhs, s) }) else {
            continue;
        };
        if nu.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let mut p = x.to_vec();
        for (h, v) in active.iter().zip(&nu) {
            p.iter_mut().zip(&h.normal).for_each(|(pi, a)| *pi -= v * a);
        }
        if hs.iter().all(|h| h.violation(&p) <= 1e-10) {
            cands.push(p);
        }
    }
    closest(x, cands)
}

pub fn random_vec<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Three halfspaces containing the origin in their interior.
pub fn random_halfspaces<R: Rng>(rng: &mut R, d: usize, count: usize) -> Vec<Halfspace> {
    (0..count)
        .map(|_| Halfspace::new(random_vec(rng, d, 1.0), rng.random_range(0.1..1.0)))
        .collect()
}

/// Minimizes `f` over `{w : feasible(w)}` by grid pattern search: a grid on
/// a box around the incumbent, shrunk whenever a level finds nothing better.
pub fn zoom_grid_min(
    f: impl Fn(&[f64]) -> f64,
    feasible: impl Fn(&[f64]) -> bool,
    center: &[f64],
    half_width: f64,
    points_per_axis: usize,
    levels: usize,
) -> (Vec<f64>, f64) {
    let d = center.len();
    let mut best = center.to_vec();
    let mut best_val = if feasible(&best) { f(&best) } else { f64::INFINITY };
    let mut h = half_width;
    let n = points_per_axis;
    let mut p = vec![0.0; d];
    for _ in 0..levels {
        let c = best.clone();
        let before = best_val;
        for code in 0..n.pow(d as u32) {
            let mut r = code;
            for k in 0..d {
                let j = r % n;
                r /= n;
                p[k] = c[k] - h + 2.0 * h * j as f64 / (n - 1) as f64;
            }
            if feasible(&p) {
                let v = f(&p);
                if v < best_val {
                    best_val = v;
                    best.copy_from_slice(&p);
                }
            }
        }
        if best_val >= before {
            h *= 0.7;
        }
    }
    (best, best_val)
}

/// Minimizes `f` over simplex grid points with spacing `1 / steps`
/// (`d = 3`).
pub fn simplex_grid_min_3(
    f: impl Fn(&[f64]) -> f64,
    feasible: impl Fn(&[f64]) -> bool,
    steps: usize,
) -> Option<(Vec<f64>, f64)> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let s = steps as f64;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let w = [i as f64 / s, j as f64 / s, (steps - i - j) as f64 / s];
            if feasible(&w) {
                let v = f(&w);
                if best.as_ref().is_none_or(|(_, b)| v < *b) {
                    best = Some((w.to_vec(), v));
                }
            }
        }
    }
    best
}
