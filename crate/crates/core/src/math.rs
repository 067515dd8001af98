//! Small dense linear algebra on `f64` slices.
//!
//! Matrices are row-major `&[f64]` with explicit dimensions. Transcendental
//! functions go through `libm` so results are identical on every platform.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * exp(-0.5 * x * x)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    sqrt(norm_sq(a))
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sqrt(dist_sq(a, b))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Solves `a x = b` for square `a` (n x n, row-major) by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot falls below
/// `1e-12` times the largest entry of `a`.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best <= 1e-12 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let p = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in (col + 1)..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Lower-triangular factor `c` with `c c^T = sigma` for a symmetric positive
/// semidefinite `sigma` (d x d). Zero pivots produce zero columns, so
/// rank-deficient covariances are accepted. Returns `None` if `sigma` is not
/// symmetric or has a clearly negative pivot.
pub fn cholesky_psd(sigma: &[f64], d: usize) -> Option<Vec<f64>> {
    assert_eq!(sigma.len(), d * d);
    let scale = sigma.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * scale.max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (sigma[i * d + j] - sigma[j * d + i]).abs() > tol * 1e3 {
                return None;
            }
        }
    }
    let mut c = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = sigma[j * d + j];
        for k in 0..j {
            diag -= c[j * d + k] * c[j * d + k];
        }
        if diag < -tol * 1e3 {
            return None;
        }
        if diag <= tol {
            continue;
        }
        let cjj = sqrt(diag);
        c[j * d + j] = cjj;
        for i in (j + 1)..d {
            let mut s = sigma[i * d + j];
            for k in 0..j {
                s -= c[i * d + k] * c[j * d + k];
            }
            c[i * d + j] = s / cjj;
        }
    }
    Some(c)
}

/// `out = m x` for an (rows x cols) row-major matrix.
pub fn mat_vec(m: &[f64], x: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    for r in 0..rows {
        out[r] = dot(&m[r * cols..(r + 1) * cols], x);
    }
}

/// `out = m^T x` for an (rows x cols) row-major matrix.
pub fn mat_t_vec(m: &[f64], x: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..rows {
        axpy(x[r], &m[r * cols..(r + 1) * cols], out);
    }
}

pub fn frobenius(m: &[f64]) -> f64 {
    norm(m)
}

/// Index subsets of `0..n` with at most `max_size` elements, smallest first.
pub(crate) fn subsets(n: usize, max_size: usize) -> impl Iterator<Item = Vec<usize>> {
    assert!(n < 32, "subset enumeration limited to n < 32");
    let mut masks: Vec<u32> = (0..(1u32 << n))
        .filter(|m| (m.count_ones() as usize) <= max_size)
        .collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
        .into_iter()
        .map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

/// Minimum Euclidean norm over convex combinations of the given vectors:
/// `min_{alpha in simplex} || sum_i alpha_i v_i ||`.
///
/// Exact, by enumerating candidate supports and solving the affine
/// least-norm system on each. Intended for a handful of vectors.
pub fn min_norm_convex_combination(vectors: &[Vec<f64>]) -> f64 {
    let k = vectors.len();
    assert!((1..=16).contains(&k), "min-norm combination supports 1..=16 vectors");
    let d = vectors[0].len();
    let mut best = f64::INFINITY;
    let mut combo = vec![0.0; d];
    for support in subsets(k, k) {
        let s = support.len();
        if s == 0 {
            continue;
        }
        // [G 1; 1^T 0] [alpha; nu] = [0; 1]
        let n = s + 1;
        let mut kkt = vec![0.0; n * n];
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[a * n + b] = dot(&vectors[i], &vectors[j]);
            }
            kkt[a * n + s] = 1.0;
            kkt[s * n + a] = 1.0;
        }
        let mut rhs = vec![0.0; n];
        rhs[s] = 1.0;
        let Some(sol) = solve(&kkt, &rhs, n) else {
            continue;
        };
        if sol[..s].iter().any(|&a| a < -1e-12) {
            continue;
        }
        combo.iter_mut().for_each(|v| *v = 0.0);
        for (a, &i) in support.iter().enumerate() {
            axpy(sol[a].max(0.0), &vectors[i], &mut combo);
        }
        best = best.min(norm(&combo));
    }
    best
}
