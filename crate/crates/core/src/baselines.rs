//! Classical FPCA on truncated scores: eigen-decomposition of the sample
//! covariance (normalised by `n - 1`) of the centred score matrix.

use nalgebra::{DMatrix, DVector};

use crate::basis::ScoreMatrix;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaFit {
    pub mean_scores: DVector<f64>,
    /// All `m` covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Leading `p` eigenvectors as columns (`m x p`).
    pub eigenvectors: DMatrix<f64>,
    /// Centred scores times eigenvectors (`n x p`).
    pub pc_scores: DMatrix<f64>,
}

impl FpcaFit {
    pub fn p(&self) -> usize {
        self.eigenvectors.ncols()
    }

    pub fn n(&self) -> usize {
        self.pc_scores.nrows()
    }

    /// `(1/n) sum_t |chi_t - chi_hat_t|^2` of the `p_used`-component
    /// reconstruction, from the eigenvalue tail.
    pub fn tail_mse(&self, p_used: usize) -> f64 {
        let n = self.n() as f64;
        self.eigenvalues.iter().skip(p_used).sum::<f64>() * (n - 1.0) / n
    }
}

pub fn fit_fpca(scores: &ScoreMatrix, p: usize) -> Result<FpcaFit> {
    let (n, m) = (scores.n(), scores.m());
    if p == 0 || p > m {
        return Err(Error::InvalidArgument(format!("number of components must be in 1..={m}, got {p}")));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 observations, got {n}")));
    }
    let (centred, mean_scores) = linalg::center_columns(scores.entries());
    let covariance = centred.transpose() * &centred / (n - 1) as f64;
    let (eigenvalues, vectors) = linalg::sorted_symmetric_eigen(covariance);
    let eigenvectors = vectors.columns(0, p).into_owned();
    let pc_scores = &centred * &eigenvectors;
    Ok(FpcaFit { mean_scores, eigenvalues, eigenvectors, pc_scores })
}

/// Mean plus the first `p_used` principal components.
pub fn reconstruct_fpca(fit: &FpcaFit, p_used: usize) -> Result<ScoreMatrix> {
    if p_used == 0 || p_used > fit.p() {
        return Err(Error::InvalidArgument(format!(
            "number of components must be in 1..={}, got {p_used}",
            fit.p()
        )));
    }
    let mut out = fit.pc_scores.columns(0, p_used) * fit.eigenvectors.columns(0, p_used).transpose();
    for mut row in out.row_iter_mut() {
        row += fit.mean_scores.transpose();
    }
    ScoreMatrix::new(out)
}
