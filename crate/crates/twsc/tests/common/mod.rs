//! Shared oracles for the integration and acceptance suites. Everything here
//! is independent of the library's production code paths: the SVD oracle uses
//! one-sided Jacobi rotations, the optimum oracle is plain proximal-gradient
//! descent on the weighted objective, and the scalar oracle is a grid search.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(lo..hi))
}

/// One-sided Jacobi SVD: rotate column pairs of a working copy of `y` until
/// all pairs are orthogonal; singular values are the column norms, `d` the
/// normalized columns, and `v` the accumulated rotations.
///
/// Returns factors sorted by descending singular value. Intended for small
/// test fixtures only.
pub fn jacobi_svd(y: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = y.nrows();
    let m = y.ncols();
    let mut w = y.clone();
    let mut v = DMatrix::<f64>::identity(m, m);

    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..n {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..m {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }

    let mut entries: Vec<(f64, usize)> = (0..m).map(|j| (w.column(j).norm(), j)).collect();
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let r = n.min(m);
    let mut d = DMatrix::zeros(n, r);
    let mut s = DVector::zeros(r);
    let mut vout = DMatrix::zeros(m, r);
    for (dst, &(norm, src)) in entries.iter().take(r).enumerate() {
        s[dst] = norm;
        if norm > 0.0 {
            d.set_column(dst, &(w.column(src) / norm));
        }
        vout.set_column(dst, &v.column(src));
    }
    (d, s, vout)
}

/// Expands per-channel weights to one multiplier per row: `n` rows split into
/// `w1.len()` equal blocks.
pub fn expand_row_weights(w1: &[f64], n: usize) -> Vec<f64> {
    let block = n / w1.len();
    (0..n).map(|i| w1[i / block]).collect()
}

/// The weighted sparse-coding objective in its transferred form:
/// `||W1 (Y - D diag(w3) C) W2||_F^2 + ||C||_1`, summed term by term in plain
/// scalar loops.
pub fn transferred_objective_scalar(
    y: &DMatrix<f64>,
    d: &DMatrix<f64>,
    w1: &[f64],
    w2: &[f64],
    w3: &[f64],
    c: &DMatrix<f64>,
) -> f64 {
    let n = y.nrows();
    let m = y.ncols();
    let r = w3.len();
    let row_w = expand_row_weights(w1, n);
    let mut fid = 0.0;
    for col in 0..m {
        for row in 0..n {
            let mut pred = 0.0;
            for k in 0..r {
                pred += d[(row, k)] * w3[k] * c[(k, col)];
            }
            let resid = row_w[row] * (y[(row, col)] - pred) * w2[col];
            fid += resid * resid;
        }
    }
    let l1: f64 = c.iter().map(|v| v.abs()).sum();
    fid + l1
}

/// Proximal-gradient descent (ISTA) on the transferred objective, run for a
/// fixed iteration budget. Independent of the ADMM path; serves as the
/// convex-optimum oracle.
pub fn proximal_gradient_optimum(
    y: &DMatrix<f64>,
    d: &DMatrix<f64>,
    w1: &[f64],
    w2: &[f64],
    w3: &[f64],
    iterations: usize,
) -> DMatrix<f64> {
    let n = y.nrows();
    let m = y.ncols();
    let r = w3.len();
    let row_w = expand_row_weights(w1, n);

    // H = W1 D diag(w3); smooth part is ||(W1 Y - H C) W2||^2.
    let mut h = DMatrix::zeros(n, r);
    for i in 0..n {
        for j in 0..r {
            h[(i, j)] = row_w[i] * d[(i, j)] * w3[j];
        }
    }
    let mut y1 = y.clone();
    for i in 0..n {
        for j in 0..m {
            y1[(i, j)] *= row_w[i];
        }
    }
    let a = h.transpose() * &h;
    let lam_max = nalgebra::SymmetricEigen::new(a)
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let w2_max_sq = w2.iter().map(|v| v * v).fold(0.0f64, f64::max);
    let lipschitz = 2.0 * lam_max * w2_max_sq;
    let step = 1.0 / lipschitz.max(1e-300);

    let mut c = DMatrix::<f64>::zeros(r, m);
    for _ in 0..iterations {
        // grad = 2 H^T (H C - W1 Y) diag(w2^2)
        let mut resid = &h * &c - &y1;
        for j in 0..m {
            let w = w2[j] * w2[j];
            for i in 0..n {
                resid[(i, j)] *= w;
            }
        }
        let grad = h.transpose() * resid * 2.0;
        for j in 0..m {
            for i in 0..r {
                let v = c[(i, j)] - step * grad[(i, j)];
                c[(i, j)] = v.signum() * (v.abs() - step).max(0.0);
            }
        }
    }
    c
}

/// Brute-force 1-D minimizer of `w^2 (y - g c)^2 + |c|` over a grid. `g` is the
/// combined atom scale `d * s`.
pub fn grid_search_scalar(y: f64, g: f64, w: f64, lo: f64, hi: f64, step: f64) -> f64 {
    let mut best_c = lo;
    let mut best_f = f64::INFINITY;
    let mut c = lo;
    while c <= hi {
        let resid = w * (y - g * c);
        let f = resid * resid + c.abs();
        if f < best_f {
            best_f = f;
            best_c = c;
        }
        c += step;
    }
    best_c
}
