//! Small dense/banded helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Largest condition number accepted before a system is declared singular.
pub(crate) const CONDITION_LIMIT: f64 = 1e12;

/// Symmetric positive definite matrix in lower-band storage.
///
/// `band[i][d]` holds entry `(i, i - d)` for `d <= bandwidth`.
#[derive(Debug, Clone)]
pub(crate) struct SymBand {
    n: usize,
    bandwidth: usize,
    band: Vec<Vec<f64>>,
}

impl SymBand {
    pub(crate) fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bandwidth, band: vec![vec![0.0; bandwidth + 1]; n] }
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, value: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.band[r][r - c] += value;
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bandwidth {
            0.0
        } else {
            self.band[r][r - c]
        }
    }

    pub(crate) fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Banded Cholesky factorisation; `None` when a pivot is not positive.
    pub(crate) fn cholesky(&self) -> Option<BandCholesky> {
        let (n, bw) = (self.n, self.bandwidth);
        let mut l = vec![vec![0.0; bw + 1]; n];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = self.band[i][i - j];
                for k in lo.max(j.saturating_sub(bw))..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][i - j] = s / l[j][0];
                }
            }
        }
        Some(BandCholesky { n, bandwidth: bw, l })
    }
}

pub(crate) struct BandCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<Vec<f64>>,
}

impl BandCholesky {
    /// Squared ratio of extreme pivots, a cheap lower estimate of the condition number.
    pub(crate) fn condition_estimate(&self) -> f64 {
        let (lo, hi) = self
            .l
            .iter()
            .map(|row| row[0])
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        (hi / lo).powi(2)
    }

    pub(crate) fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let (n, bw) = (self.n, self.bandwidth);
        let mut y = rhs.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i][i - k] * y[k];
            }
            y[i] = s / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.l[k][k - i] * y[k];
            }
            y[i] = s / self.l[i][0];
        }
        y
    }
}

/// Least-squares solution of `a x = b` (`a` tall or square) through a
/// Householder QR, refusing designs whose condition number exceeds the limit.
/// Returns the solution or the condition number of `a`.
///
/// The condition number comes from the eigenvalues of `R^T R = a^T a`; the
/// dense SVD is avoided because it loses accuracy on some structured designs.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, f64> {
    assert!(a.nrows() >= a.ncols(), "least squares needs at least as many rows as columns");
    let qr = a.clone().qr();
    let r = qr.r();
    let condition = gram_condition(&(r.transpose() * &r)).sqrt();
    if !(condition <= CONDITION_LIMIT) {
        return Err(condition);
    }
    r.solve_upper_triangular(&(qr.q().transpose() * b)).ok_or(condition)
}

/// Ratio of the extreme eigenvalues of a positive semidefinite matrix.
pub(crate) fn gram_condition(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone());
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if hi <= 0.0 || lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Operator 2-norm.
pub(crate) fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.transpose() * a).eigenvalues.max().max(0.0).sqrt()
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted descending.
pub(crate) fn sorted_symmetric_eigen(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // deterministic sign: largest-magnitude entry positive
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Centre the columns of a matrix, returning the centred copy and the column means.
pub(crate) fn center_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let mut centred = x.clone();
    for (j, mut col) in centred.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (centred, means)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_matches_dense_solve() {
        let n = 9;
        let mut a = SymBand::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 6.0 + i as f64 * 0.1);
            if i >= 1 {
                a.add(i, i - 1, -1.5);
            }
            if i >= 2 {
                a.add(i, i - 2, 0.25);
            }
        }
        let rhs = DVector::from_fn(n, |i, _| (i as f64).sin());
        let x = a.cholesky().unwrap().solve(&rhs);
        let dense = a.to_dense().lu().solve(&rhs).unwrap();
        assert!((x - dense).amax() < 1e-12);
    }

    #[test]
    fn band_cholesky_rejects_zero_matrix() {
        assert!(SymBand::zeros(4, 1).cholesky().is_none());
    }

    #[test]
    fn lstsq_reports_condition() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::from_element(3, 1, 1.0);
        assert!(lstsq(&a, &b).is_err());
    }

    #[test]
    fn lstsq_solves_overdetermined_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 2.0]);
        let x = lstsq(&a, &b).unwrap();
        // normal equations [[3, 3], [3, 5]] x = [5, 6]
        assert!((x[(0, 0)] - 7.0 / 6.0).abs() < 1e-14);
        assert!((x[(1, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -3.0, 2.0]));
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-14);
    }
}
