//! Seeded generators for the three simulation designs: a stationary FAR(1)
//! on Fourier coefficients, a smoothed VARI(1,1) panel and a dynamic factor
//! model with a static factor representation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::basis::{evaluate_raw, smooth_onto_grid, BasisKind, FunctionalSeries, Grid};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;

pub const DEFAULT_FAR1_BURN_IN: usize = 200;
/// Warm-up draws discarded from the factor VAR of the dynamic factor model.
pub const DFM_BURN_IN: usize = 200;
pub const DEFAULT_SMOOTHING_BASIS: usize = 21;

/// Master seed; replication `r` draws from ChaCha stream `r` of the master key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn stream(&self, replication: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(replication);
        rng
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // filled row by row so the draw order matches time order
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = StandardNormal.sample(rng);
        }
    }
    out
}

fn uniform_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    let dist = Uniform::new(lo, hi).expect("valid uniform bounds");
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = dist.sample(rng);
        }
    }
    out
}

/// `B = kappa G / (2 |G|_2)` with `G[i, j] = exp(-(i + j))`, one-based indices.
pub fn far1_transition(d: usize, kappa: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |i, j| (-((i + 1 + j + 1) as f64)).exp());
    let norm = spectral_norm(&g);
    g * (kappa / (2.0 * norm))
}

fn check_far1(d: usize, kappa: f64, n: usize) -> Result<()> {
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("d must be odd and at least 1, got {d}")));
    }
    if !(0.0..2.0).contains(&kappa) {
        return Err(Error::InvalidArgument(format!(
            "kappa must satisfy 0 <= kappa < 2 for a stationary transition, got {kappa}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    Ok(())
}

/// FAR(1) Fourier coefficients (`n x d`): `c_{t+1} = B c_t + e_{t+1}`,
/// standard Gaussian innovations, started at zero with `burn_in` draws discarded.
pub fn far1_coefficients<R: Rng + ?Sized>(
    d: usize,
    kappa: f64,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_far1(d, kappa, n)?;
    let b = far1_transition(d, kappa);
    let total = n + burn_in;
    let innovations = gaussian_matrix(total, d, rng);
    let mut out = DMatrix::zeros(n, d);
    let mut state = nalgebra::DVector::zeros(d);
    for t in 0..total {
        state = &b * state + innovations.row(t).transpose();
        if t >= burn_in {
            out.row_mut(t - burn_in).copy_from(&state.transpose());
        }
    }
    Ok(out)
}

/// FAR(1) curves: the coefficient series synthesised with `d` Fourier functions on `grid`.
pub fn gen_far1<R: Rng + ?Sized>(
    d: usize,
    kappa: f64,
    n: usize,
    burn_in: usize,
    grid: &Grid,
    rng: &mut R,
) -> Result<FunctionalSeries> {
    check_far1(d, kappa, n)?;
    let coefficients = far1_coefficients(d, kappa, n, burn_in, rng)?;
    let phi = evaluate_raw(BasisKind::Fourier, d, grid.points(), grid.lower(), grid.upper())?;
    FunctionalSeries::new(coefficients * phi, grid.clone())
}

/// Haar-distributed orthogonal matrix: Q of a Gaussian matrix with `diag(R) > 0`.
pub fn haar_orthogonal<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(m, m, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone)]
pub struct Vari11Panel {
    /// `A = V diag(lambda) V^T`.
    pub transition: DMatrix<f64>,
    /// Stationary increments `x_t` (`T x m`).
    pub increments: DMatrix<f64>,
    /// Integrated series `z_t` (`T x m`).
    pub levels: DMatrix<f64>,
}

/// VARI(1,1): `z_t = z_{t-1} + x_t`, `x_t = A x_{t-1} + u_t`, `z_0 = x_0 = 0`.
pub fn vari11_panel<R: Rng + ?Sized>(m: usize, t_len: usize, rng: &mut R) -> Result<Vari11Panel> {
    if m < 2 || t_len < 2 {
        return Err(Error::InvalidArgument(format!("need m >= 2 and T >= 2 (m = {m}, T = {t_len})")));
    }
    let v = haar_orthogonal(m, rng);
    let eig = Uniform::new_inclusive(0.0, 0.9).expect("valid uniform bounds");
    let lambda = nalgebra::DVector::from_fn(m, |_, _| eig.sample(rng));
    let transition = &v * DMatrix::from_diagonal(&lambda) * v.transpose();
    let shocks = gaussian_matrix(t_len, m, rng);
    let mut increments = DMatrix::zeros(t_len, m);
    let mut levels = DMatrix::zeros(t_len, m);
    let mut x = nalgebra::DVector::zeros(m);
    let mut z = nalgebra::DVector::zeros(m);
    for t in 0..t_len {
        x = &transition * x + shocks.row(t).transpose();
        z += &x;
        increments.row_mut(t).copy_from(&x.transpose());
        levels.row_mut(t).copy_from(&z.transpose());
    }
    Ok(Vari11Panel { transition, increments, levels })
}

/// `m` equispaced design abscissae on the grid's interval.
pub fn design_points(m: usize, grid: &Grid) -> Vec<f64> {
    let (a, b) = (grid.lower(), grid.upper());
    (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect()
}

fn check_smoothing(m: usize, n_basis: usize) -> Result<()> {
    if n_basis == 0 || n_basis.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("smoothing basis size must be odd, got {n_basis}")));
    }
    if n_basis > m {
        return Err(Error::InvalidArgument(format!(
            "smoothing basis size {n_basis} exceeds the panel dimension {m} (underdetermined)"
        )));
    }
    Ok(())
}

/// Smoothed VARI(1,1) curves: each cross-section `z_t` is fitted by least
/// squares onto `n_basis` Fourier functions at `m` equispaced points.
pub fn gen_vari11<R: Rng + ?Sized>(
    m: usize,
    t_len: usize,
    n_basis: usize,
    grid: &Grid,
    rng: &mut R,
) -> Result<FunctionalSeries> {
    check_smoothing(m, n_basis)?;
    let panel = vari11_panel(m, t_len, rng)?;
    smooth_onto_grid(&panel.levels, &design_points(m, grid), BasisKind::Fourier, n_basis, grid)
}

#[derive(Debug, Clone)]
pub struct DfmPanel {
    /// `m x r` loadings.
    pub lambda: DMatrix<f64>,
    /// `r x r` factor transition with `|D|_2 <= 1`.
    pub transition: DMatrix<f64>,
    /// `r x q` shock loadings.
    pub shock_loadings: DMatrix<f64>,
    /// `T x r` static factors.
    pub factors: DMatrix<f64>,
    /// `T x m` common part `F lambda^T`.
    pub common: DMatrix<f64>,
    /// `T x m` observed panel, common part plus unit Gaussian noise.
    pub observed: DMatrix<f64>,
}

/// Dynamic factor model `z_t = lambda F_t + e_t`, `F_t = D F_{t-1} + K u_t`.
pub fn dfm_panel<R: Rng + ?Sized>(m: usize, t_len: usize, r: usize, q: usize, rng: &mut R) -> Result<DfmPanel> {
    if q == 0 || r < q {
        return Err(Error::InvalidArgument(format!("need r >= q >= 1 (r = {r}, q = {q})")));
    }
    if m < r {
        return Err(Error::InvalidArgument(format!("need m >= r (m = {m}, r = {r})")));
    }
    if t_len < 2 {
        return Err(Error::InvalidArgument(format!("T must be at least 2, got {t_len}")));
    }
    let lambda = uniform_matrix(m, r, -1.0, 1.0, rng);
    let shock_loadings = uniform_matrix(r, q, -1.0, 1.0, rng);
    let raw = uniform_matrix(r, r, -1.0, 1.0, rng);
    let scale: f64 = Uniform::new(-1.0, 1.0).expect("valid uniform bounds").sample(rng);
    let transition = &raw * (scale / spectral_norm(&raw));

    let total = t_len + DFM_BURN_IN;
    let shocks = gaussian_matrix(total, q, rng);
    let mut factors = DMatrix::zeros(t_len, r);
    let mut state = nalgebra::DVector::zeros(r);
    for t in 0..total {
        state = &transition * state + &shock_loadings * shocks.row(t).transpose();
        if t >= DFM_BURN_IN {
            factors.row_mut(t - DFM_BURN_IN).copy_from(&state.transpose());
        }
    }
    let common = &factors * lambda.transpose();
    let observed = &common + gaussian_matrix(t_len, m, rng);
    Ok(DfmPanel { lambda, transition, shock_loadings, factors, common, observed })
}

/// Smoothed dynamic factor model curves together with the identically
/// smoothed noiseless common part.
pub fn gen_dfm<R: Rng + ?Sized>(
    m: usize,
    t_len: usize,
    r: usize,
    q: usize,
    grid: &Grid,
    n_basis: usize,
    rng: &mut R,
) -> Result<(FunctionalSeries, FunctionalSeries)> {
    check_smoothing(m, n_basis)?;
    let panel = dfm_panel(m, t_len, r, q, rng)?;
    let design = design_points(m, grid);
    let observed = smooth_onto_grid(&panel.observed, &design, BasisKind::Fourier, n_basis, grid)?;
    let common = smooth_onto_grid(&panel.common, &design, BasisKind::Fourier, n_basis, grid)?;
    Ok((observed, common))
}
