#![allow(dead_code)]

use gdfpca::{BasisKind, FunctionalSeries, Grid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(len: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Dense least squares through the normal equations and a Cholesky
/// factorisation, independent of the crate's solvers. Adequate for the
/// well-conditioned random instances used here.
pub fn dense_lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let at = a.transpose();
    (&at * a).cholesky().expect("full column rank").solve(&(at * b))
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// One-based reading of the loading for lag `h` in design order:
/// position `k` in `1..=K+1` holds lag `K + 1 - k`.
pub fn design_loading(beta: &DMatrix<f64>, j: usize, k: isize) -> f64 {
    let lags = beta.nrows() as isize - 1;
    if k < 1 || k > lags + 1 {
        0.0
    } else {
        beta[((lags + 1 - k) as usize, j)]
    }
}

/// Stacked regression of the factor step: the row for `(t, j)` holds
/// `beta[h, j]` at column `t + K - h`.
pub fn factor_design(beta: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let (k1, m) = beta.shape();
    let lags = k1 - 1;
    let mut a = DMatrix::zeros(n * m, n + lags);
    for t in 0..n {
        for j in 0..m {
            for h in 0..=lags {
                a[(t * m + j, t + lags - h)] = beta[(h, j)];
            }
        }
    }
    a
}

/// Curves from coefficients on the raw (unorthonormalised) Fourier functions.
pub fn fourier_curves(coefs: &DMatrix<f64>, grid: &Grid) -> FunctionalSeries {
    let raw = gdfpca::basis::evaluate_raw(BasisKind::Fourier, coefs.ncols(), grid.points(), grid.lower(), grid.upper()).unwrap();
    FunctionalSeries::new(coefs * raw, grid.clone()).unwrap()
}

/// One dynamic factor with `K` lags driving all `m` coordinates, no noise.
pub fn one_factor_scores(n: usize, m: usize, lags: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut f = vec![0.0f64; n + lags];
    for i in 0..n + lags {
        let prev = if i > 0 { f[i - 1] } else { 0.0 };
        f[i] = 0.7 * prev + rng.sample::<f64, _>(StandardNormal);
    }
    let beta = gaussian(lags + 1, m, rng);
    let alpha = gaussian_vec(m, rng);
    gdfpca::gdpc::reconstruct_scores(&f, &beta, &alpha)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Direct evaluation of the one-based entry rule
/// `c[t, q] = chi[t - q + 1, j] - alpha_j` for `max(1, t - n + 1) <= q <= min(K + 1, t)`.
pub fn brute_c(scores: &DMatrix<f64>, alpha: &DVector<f64>, lags: usize) -> Vec<DMatrix<f64>> {
    let (n, m) = scores.shape();
    (0..m)
        .map(|j| {
            let mut c = DMatrix::zeros(n + lags, lags + 1);
            for t in 1..=n + lags {
                for q in 1..=lags + 1 {
                    let lo = 1.max(t as isize - n as isize + 1) as usize;
                    let hi = (lags + 1).min(t);
                    if lo <= q && q <= hi {
                        c[(t - 1, q - 1)] = scores[(t - q, j)] - alpha[j];
                    }
                }
            }
            c
        })
        .collect()
}

/// Direct evaluation of
/// `d[t, q] = sum_j sum_{v = max(t - K, 1)}^{min(t, n)} b_j[q - v + 1] b_j[t - v + 1]`
/// over the band `max(t - K, 1) <= q <= min(t + K, n + K)`.
pub fn brute_d(beta: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let (k1, m) = beta.shape();
    let lags = k1 - 1;
    let size = n + lags;
    let mut d = DMatrix::zeros(size, size);
    for j in 0..m {
        for t in 1..=size {
            let q_lo = (t as isize - lags as isize).max(1) as usize;
            let q_hi = (t + lags).min(size);
            for q in q_lo..=q_hi {
                let v_lo = (t as isize - lags as isize).max(1) as usize;
                let v_hi = t.min(n);
                for v in v_lo..=v_hi {
                    let a = design_loading(beta, j, q as isize - v as isize + 1);
                    let b = design_loading(beta, j, t as isize - v as isize + 1);
                    d[(t - 1, q - 1)] += a * b;
                }
            }
        }
    }
    d
}
