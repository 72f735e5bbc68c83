//! Score-level generalized dynamic principal component estimator.
//!
//! For an `n x m` score matrix `chi`, one component is a factor sequence `f`
//! of length `n + K`, a `(K + 1) x m` loading matrix `beta` and an intercept
//! `alpha`, reconstructing
//!
//! ```text
//! chi_hat[t, j] = alpha[j] + sum_{h=0..K} f_{t-h} * beta[h, j]
//! ```
//!
//! Storage convention: `f` is held in a zero-based vector where stored index
//! `i` is the factor value for time `i + 1 - K`, so `f_{t-h}` for the
//! zero-based row `t` is `f[t + K - h]`. Column `c` of the factor design
//! (and position `c` of every design-ordered loading vector) is therefore lag
//! `K - c`.
//!
//! The fit alternates two exact least-squares block updates: loadings and
//! intercept given `f` (one `(K + 2)`-dimensional regression shared by all
//! coordinates) and `f` given loadings (a banded `(n + K)`-dimensional normal
//! system), renormalising `f` after each factor step.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::ScoreMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, SymBand, CONDITION_LIMIT};

/// Initial factor used to start the alternating iterations.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Leading principal-component score sequence of the centred scores.
    FirstPc,
    /// Caller-provided factor of length `n + K` (normalised before use).
    Supplied(Vec<f64>),
    /// Standard Gaussian draw from the given seed (normalised before use).
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Number of lags `K` of the factor entering each reconstruction.
    pub lags: usize,
    /// Relative-improvement threshold of the stopping rule.
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { lags: 0, epsilon: 1e-6, max_iter: 500, init: Init::FirstPc }
    }
}

impl FitConfig {
    pub fn with_lags(lags: usize) -> Self {
        Self { lags, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One fitted component.
#[derive(Debug, Clone, PartialEq)]
pub struct GdpcFit {
    /// Factor, length `n + K`, stored index `i` = time `i + 1 - K`.
    pub f: DVector<f64>,
    /// Loadings, row `h` is lag `h`.
    pub beta: DMatrix<f64>,
    pub alpha: DVector<f64>,
    /// Objective after the initial loading step and after every sweep.
    pub mse_trace: Vec<f64>,
    /// Completed sweeps.
    pub iterations: usize,
    pub converged: bool,
}

impl GdpcFit {
    pub fn lags(&self) -> usize {
        self.beta.nrows() - 1
    }

    pub fn n(&self) -> usize {
        self.f.len() - self.lags()
    }

    pub fn m(&self) -> usize {
        self.beta.ncols()
    }

    pub fn final_mse(&self) -> f64 {
        *self.mse_trace.last().expect("trace is never empty")
    }

    /// Score-level reconstruction `chi_hat` (`n x m`).
    pub fn reconstruct(&self) -> DMatrix<f64> {
        reconstruct_scores(self.f.as_slice(), &self.beta, &self.alpha)
    }
}

/// Loadings reordered to design-column order: entry `(c, j)` is lag `K - c`.
fn design_ordered(beta: &DMatrix<f64>) -> DMatrix<f64> {
    let k = beta.nrows() - 1;
    DMatrix::from_fn(k + 1, beta.ncols(), |c, j| beta[(k - c, j)])
}

/// `n x (K + 2)` design whose row `t` is `(f[t], f[t+1], ..., f[t+K], 1)`.
pub fn build_factor_design(f: &[f64], n: usize, lags: usize) -> Result<DMatrix<f64>> {
    if f.len() != n + lags {
        return Err(Error::DimensionMismatch(format!(
            "factor has length {} but n + K = {}",
            f.len(),
            n + lags
        )));
    }
    Ok(DMatrix::from_fn(n, lags + 2, |t, c| if c == lags + 1 { 1.0 } else { f[t + c] }))
}

/// Exact least-squares loadings and intercept for a fixed factor.
///
/// All coordinates share one factorisation of the design `F(f)`.
pub fn update_loadings(f: &[f64], scores: &DMatrix<f64>, lags: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = scores.nrows();
    let design = build_factor_design(f, n, lags)?;
    // the guard is on F^T F, whose condition number is the square of that of F
    let qr = design.qr();
    let r = qr.r();
    let condition = linalg::gram_condition(&(r.transpose() * &r));
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularDesign { condition });
    }
    let solution = r
        .solve_upper_triangular(&(qr.q().transpose() * scores))
        .ok_or(Error::SingularDesign { condition })?;
    let beta = DMatrix::from_fn(lags + 1, scores.ncols(), |h, j| solution[(lags - h, j)]);
    let alpha = solution.row(lags + 1).transpose();
    Ok((beta, alpha))
}

/// The `m` matrices `C_j(alpha_j)` of size `(n + K) x (K + 1)`:
/// entry `(t, q)` (one-based) is `chi[t - q + 1, j] - alpha_j` when
/// `max(1, t - n + 1) <= q <= min(K + 1, t)` and zero otherwise.
pub fn build_c(scores: &DMatrix<f64>, alpha: &DVector<f64>, lags: usize) -> Result<Vec<DMatrix<f64>>> {
    let (n, m) = scores.shape();
    if alpha.len() != m {
        return Err(Error::DimensionMismatch(format!("alpha has length {} but scores have {m} columns", alpha.len())));
    }
    Ok((0..m)
        .map(|j| {
            DMatrix::from_fn(n + lags, lags + 1, |t, q| {
                if q <= t && t - q < n {
                    scores[(t - q, j)] - alpha[j]
                } else {
                    0.0
                }
            })
        })
        .collect())
}

/// Banded normal matrix of the factor step, `D = sum_j D_j`, where
/// `D_j[t, q] = sum_v b_j[q - v] b_j[t - v]` (zero-based, `v` over the `n`
/// observed times) and `b_j` is column `j` of the loadings in design order.
/// Loadings outside lag range count as zero.
pub fn build_d(beta: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    if beta.nrows() == 0 {
        return Err(Error::DimensionMismatch("beta must have at least one row".into()));
    }
    Ok(factor_normal_matrix(beta, n).to_dense())
}

fn factor_normal_matrix(beta: &DMatrix<f64>, n: usize) -> SymBand {
    let lags = beta.nrows() - 1;
    let ordered = design_ordered(beta);
    // lag-pair Gram over coordinates
    let pair = &ordered * ordered.transpose();
    let mut d = SymBand::zeros(n + lags, lags);
    for s in 0..n {
        for a in 0..=lags {
            for c in 0..=a {
                d.add(s + a, s + c, pair[(a, c)]);
            }
        }
    }
    d
}

/// Right-hand side `sum_j C_j(alpha_j) b_j` of the factor normal equations.
fn factor_rhs(scores: &DMatrix<f64>, beta: &DMatrix<f64>, alpha: &DVector<f64>) -> DVector<f64> {
    let (n, m) = scores.shape();
    let lags = beta.nrows() - 1;
    let ordered = design_ordered(beta);
    let mut rhs = DVector::zeros(n + lags);
    for j in 0..m {
        for s in 0..n {
            let centred = scores[(s, j)] - alpha[j];
            for c in 0..=lags {
                rhs[s + c] += ordered[(c, j)] * centred;
            }
        }
    }
    rhs
}

/// Exact minimiser over `f` of the least-squares objective with loadings and
/// intercept held fixed, before normalisation.
pub fn minimize_factor(scores: &DMatrix<f64>, beta: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, m) = scores.shape();
    if beta.ncols() != m || alpha.len() != m || beta.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "beta is {}x{} and alpha has length {}, scores have {m} columns",
            beta.nrows(),
            beta.ncols(),
            alpha.len()
        )));
    }
    let d = factor_normal_matrix(beta, n);
    let rhs = factor_rhs(scores, beta, alpha);
    if let Some(chol) = d.cholesky() {
        if chol.condition_estimate() <= CONDITION_LIMIT {
            return Ok(chol.solve(&rhs));
        }
    }
    let rhs = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    linalg::lstsq(&d.to_dense(), &rhs)
        .map(|x| x.column(0).into_owned())
        .map_err(|condition| Error::DegenerateLoadings { condition })
}

/// Centre and rescale so that `mean(f) = 0` and `|f|^2 = len - 1`.
pub fn normalize_factor(f: &DVector<f64>) -> Result<DVector<f64>> {
    let len = f.len();
    let mean = f.mean();
    let centred = f.add_scalar(-mean);
    let norm = centred.norm();
    if !(norm >= 1e-14) {
        return Err(Error::DegenerateFactor { norm });
    }
    Ok(centred * (((len - 1) as f64).sqrt() / norm))
}

/// Factor step: exact minimiser followed by normalisation.
pub fn update_factor(scores: &DMatrix<f64>, beta: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    normalize_factor(&minimize_factor(scores, beta, alpha)?)
}

/// Leading principal-component score sequence of the centred scores, padded
/// at the start with `K` copies of its first value and normalised.
pub fn initial_factor(scores: &DMatrix<f64>, lags: usize) -> Result<DVector<f64>> {
    let (n, m) = scores.shape();
    if n < lags + 2 {
        return Err(Error::InvalidArgument(format!("need n >= K + 2 (n = {n}, K = {lags})")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("score matrix has no columns".into()));
    }
    let (centred, _) = linalg::center_columns(scores);
    let total: f64 = centred.iter().map(|v| v * v).sum();
    let raw: f64 = scores.iter().map(|v| v * v).sum();
    if !(total > 1e-24 * raw) || total == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let covariance = centred.transpose() * &centred / (n - 1) as f64;
    let (_, vectors) = linalg::sorted_symmetric_eigen(covariance);
    let pc = &centred * vectors.column(0);
    let mut f = DVector::zeros(n + lags);
    for i in 0..lags {
        f[i] = pc[0];
    }
    f.rows_mut(lags, n).copy_from(&pc);
    normalize_factor(&f).map_err(|_| Error::DegenerateInput)
}

/// `chi_hat[t, j] = alpha[j] + sum_h f[t + K - h] beta[h, j]`.
pub fn reconstruct_scores(f: &[f64], beta: &DMatrix<f64>, alpha: &DVector<f64>) -> DMatrix<f64> {
    let lags = beta.nrows() - 1;
    let n = f.len() - lags;
    DMatrix::from_fn(n, beta.ncols(), |t, j| {
        alpha[j] + (0..=lags).map(|h| f[t + lags - h] * beta[(h, j)]).sum::<f64>()
    })
}

/// Least-squares objective `1/(n m) sum_t |chi_t - chi_hat_t|^2`.
pub fn objective(scores: &DMatrix<f64>, f: &[f64], beta: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    let (n, m) = scores.shape();
    (scores - reconstruct_scores(f, beta, alpha)).norm_squared() / (n * m) as f64
}

fn starting_factor(scores: &DMatrix<f64>, config: &FitConfig) -> Result<DVector<f64>> {
    let len = scores.nrows() + config.lags;
    match &config.init {
        Init::FirstPc => initial_factor(scores, config.lags),
        Init::Supplied(f) => {
            if f.len() != len {
                return Err(Error::DimensionMismatch(format!(
                    "supplied initial factor has length {} but n + K = {len}",
                    f.len()
                )));
            }
            normalize_factor(&DVector::from_column_slice(f))
        }
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let f = DVector::from_fn(len, |_, _| StandardNormal.sample(&mut rng));
            normalize_factor(&f)
        }
    }
}

fn at(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration { iteration, source: Box::new(e) }
}

/// Fit one component by alternating the loading and factor steps until the
/// relative objective improvement drops below `epsilon` or `max_iter` sweeps
/// have run.
pub fn fit_gdpc(scores: &ScoreMatrix, config: &FitConfig) -> Result<GdpcFit> {
    config.validate()?;
    let chi = scores.entries();
    let (n, m) = chi.shape();
    let lags = config.lags;
    if m == 0 {
        return Err(Error::InvalidArgument("score matrix has no columns".into()));
    }
    if n <= lags + 2 {
        return Err(Error::InvalidArgument(format!("need n > K + 2 (n = {n}, K = {lags})")));
    }

    let start = starting_factor(chi, config).map_err(at(0))?;
    let mut f = start.clone();
    let (mut beta, mut alpha) = update_loadings(f.as_slice(), chi, lags).map_err(at(0))?;
    let mut mse = objective(chi, f.as_slice(), &beta, &alpha);
    let mut trace = vec![mse];
    let mut converged = false;
    let mut iterations = 0;

    for iteration in 1..=config.max_iter {
        let f_next = update_factor(chi, &beta, &alpha).map_err(at(iteration))?;
        let (beta_next, alpha_next) = update_loadings(f_next.as_slice(), chi, lags).map_err(at(iteration))?;
        let mse_next = objective(chi, f_next.as_slice(), &beta_next, &alpha_next);
        f = f_next;
        beta = beta_next;
        alpha = alpha_next;
        trace.push(mse_next);
        iterations = iteration;
        if mse == 0.0 || (mse - mse_next) / mse < config.epsilon {
            converged = true;
            break;
        }
        mse = mse_next;
    }

    if f.dot(&start) < 0.0 {
        f.neg_mut();
        beta.neg_mut();
    }
    Ok(GdpcFit { f, beta, alpha, mse_trace: trace, iterations, converged })
}

/// Scores minus the component's reconstruction.
pub fn residual_scores(scores: &ScoreMatrix, fit: &GdpcFit) -> Result<ScoreMatrix> {
    if scores.n() != fit.n() || scores.m() != fit.m() {
        return Err(Error::DimensionMismatch(format!(
            "scores are {}x{} but the fit is for {}x{}",
            scores.n(),
            scores.m(),
            fit.n(),
            fit.m()
        )));
    }
    ScoreMatrix::new(scores.entries() - fit.reconstruct())
}
