//! Quadrature grids, orthonormal basis systems and the maps between curves
//! and basis scores.
//!
//! Every [`BasisSystem`] is orthonormal under the trapezoidal inner product of
//! its grid, so score-space and function-space squared norms coincide for
//! curves in the span of the basis.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gram deviation above which an analytic basis is re-orthonormalised.
const ANALYTIC_GRAM_SLACK: f64 = 1e-12;

/// Sampling abscissae on a compact interval with trapezoidal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Grid on the given strictly increasing points, with trapezoidal weights.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {}", points.len())));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid(format!("point {i} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing (index {} -> {})",
                i,
                i + 1
            )));
        }
        let g = points.len();
        let mut weights = vec![0.0; g];
        for i in 0..g - 1 {
            let h = points[i + 1] - points[i];
            weights[i] += 0.5 * h;
            weights[i + 1] += 0.5 * h;
        }
        Ok(Self { points, weights })
    }

    /// `g` equispaced points on `[a, b]`, endpoints included.
    pub fn uniform(a: f64, b: f64, g: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidGrid(format!("bounds must satisfy a < b (got [{a}, {b}])")));
        }
        if g < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {g}")));
        }
        let h = (b - a) / (g - 1) as f64;
        let points = (0..g).map(|i| if i == g - 1 { b } else { a + i as f64 * h }).collect();
        Self::new(points)
    }

    /// The default simulation grid: 101 equispaced points on `[0, 1]`.
    pub fn default_unit() -> Self {
        Self::uniform(0.0, 1.0, 101).expect("valid default grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.points[0]
    }

    pub fn upper(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Quadrature inner product of two sampled curves.
    pub fn inner<'a>(&self, x: impl IntoIterator<Item = &'a f64>, y: impl IntoIterator<Item = &'a f64>) -> f64 {
        x.into_iter().zip(y).zip(&self.weights).map(|((a, b), w)| w * a * b).sum()
    }
}

/// Family of basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// Constant followed by (sin, cos) pairs of increasing frequency.
    Fourier,
    /// Clamped B-splines of the given order (degree + 1) with equispaced interior knots.
    Bspline { order: usize },
}

/// `m` orthonormal functions sampled on a grid (`values` is `m x G`).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSystem {
    kind: BasisKind,
    values: DMatrix<f64>,
    grid: Grid,
}

impl BasisSystem {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Quadrature Gram matrix of the system.
    pub fn gram(&self) -> DMatrix<f64> {
        gram(&self.values, &self.grid)
    }
}

/// Curves `X_t(u_g)` stored as an `n x G` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSeries {
    values: DMatrix<f64>,
    grid: Grid,
}

impl FunctionalSeries {
    pub fn new(values: DMatrix<f64>, grid: Grid) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "series has {} columns but grid has {} points",
                values.ncols(),
                grid.len()
            )));
        }
        if values.nrows() < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 curves, got {}", values.nrows())));
        }
        check_finite(&values)?;
        Ok(Self { values, grid })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

/// Basis coefficients `chi[t, j] = <X_t, phi_j>` as an `n x m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix(DMatrix<f64>);

impl ScoreMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_finite(&entries)?;
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn m(&self) -> usize {
        self.0.ncols()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            if !x[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn gram(values: &DMatrix<f64>, grid: &Grid) -> DMatrix<f64> {
    let m = values.nrows();
    DMatrix::from_fn(m, m, |i, j| grid.inner(values.row(i).iter(), values.row(j).iter()))
}

/// Raw (not orthonormalised) basis functions at arbitrary points of `[a, b]`,
/// returned as an `m x points.len()` matrix.
///
/// Fourier functions are normalised for the continuous inner product on `[a, b]`.
pub fn evaluate_raw(kind: BasisKind, m: usize, points: &[f64], a: f64, b: f64) -> Result<DMatrix<f64>> {
    validate_kind(kind, m)?;
    if !(a < b) {
        return Err(Error::InvalidGrid(format!("bounds must satisfy a < b (got [{a}, {b}])")));
    }
    Ok(match kind {
        BasisKind::Fourier => fourier_values(m, points, a, b),
        BasisKind::Bspline { order } => bspline_values(m, order, points, a, b),
    })
}

fn validate_kind(kind: BasisKind, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidBasis("basis size must be at least 1".into()));
    }
    match kind {
        BasisKind::Fourier if m.is_multiple_of(2) => {
            Err(Error::InvalidBasis(format!("Fourier basis size must be odd, got {m}")))
        }
        BasisKind::Bspline { order: 0 } => Err(Error::InvalidBasis("B-spline order must be at least 1".into())),
        BasisKind::Bspline { order } if m < order => Err(Error::InvalidBasis(format!(
            "B-spline basis size {m} is smaller than its order {order} (interior knots = m - order)"
        ))),
        _ => Ok(()),
    }
}

fn fourier_values(m: usize, points: &[f64], a: f64, b: f64) -> DMatrix<f64> {
    let len = b - a;
    let c0 = 1.0 / len.sqrt();
    let c1 = SQRT_2 / len.sqrt();
    DMatrix::from_fn(m, points.len(), |j, g| {
        let x = (points[g] - a) / len;
        if j == 0 {
            c0
        } else {
            let k = j.div_ceil(2) as f64;
            if j % 2 == 1 {
                c1 * (2.0 * PI * k * x).sin()
            } else {
                c1 * (2.0 * PI * k * x).cos()
            }
        }
    })
}

fn bspline_values(m: usize, order: usize, points: &[f64], a: f64, b: f64) -> DMatrix<f64> {
    let interior = m - order;
    let mut knots = vec![a; order];
    knots.extend((1..=interior).map(|i| a + (b - a) * i as f64 / (interior + 1) as f64));
    knots.extend(std::iter::repeat_n(b, order));

    let mut out = DMatrix::zeros(m, points.len());
    for (g, &u) in points.iter().enumerate() {
        // span index: knots[span] <= u < knots[span + 1], with u == b mapped to the last span
        let span = if u >= b {
            m - 1
        } else {
            let mut s = order - 1;
            while s + 1 < m && knots[s + 1] <= u {
                s += 1;
            }
            s
        };
        // Cox-de Boor triangle for the `order` non-zero functions on this span
        let mut local = vec![0.0; order];
        local[0] = 1.0;
        for d in 1..order {
            let mut saved = 0.0;
            for r in 0..d {
                let left = knots[span + 1 + r - d];
                let right = knots[span + 1 + r];
                let denom = right - left;
                let temp = if denom > 0.0 { local[r] / denom } else { 0.0 };
                local[r] = saved + (right - u) * temp;
                saved = (u - left) * temp;
            }
            local[d] = saved;
        }
        for (r, v) in local.into_iter().enumerate() {
            out[(span + 1 - order + r, g)] = v;
        }
    }
    out
}

/// Modified Gram-Schmidt (two passes) under the quadrature inner product.
fn orthonormalize(mut values: DMatrix<f64>, grid: &Grid) -> Result<DMatrix<f64>> {
    let m = values.nrows();
    for j in 0..m {
        let original = grid.inner(values.row(j).iter(), values.row(j).iter()).sqrt();
        for _pass in 0..2 {
            for i in 0..j {
                let proj = grid.inner(values.row(j).iter(), values.row(i).iter());
                let qi = values.row(i).into_owned();
                let mut row = values.row_mut(j);
                row -= qi * proj;
            }
        }
        let norm = grid.inner(values.row(j).iter(), values.row(j).iter()).sqrt();
        if !(norm > 1e-10 * original.max(f64::MIN_POSITIVE)) {
            return Err(Error::InvalidBasis(format!(
                "basis function {} is linearly dependent on the previous ones at this grid resolution",
                j + 1
            )));
        }
        values.row_mut(j).scale_mut(1.0 / norm);
    }
    Ok(values)
}

/// Build an orthonormal basis system of `m` functions on `grid`.
///
/// Fourier functions are used analytically whenever they are already
/// orthonormal under the grid quadrature (uniform grids); otherwise, and
/// always for B-splines, the raw functions go through modified Gram-Schmidt.
pub fn make_basis(kind: BasisKind, m: usize, grid: &Grid) -> Result<BasisSystem> {
    validate_kind(kind, m)?;
    if m > grid.len() {
        return Err(Error::InvalidBasis(format!(
            "basis size {m} exceeds the number of grid points {}",
            grid.len()
        )));
    }
    let raw = evaluate_raw(kind, m, grid.points(), grid.lower(), grid.upper())?;
    let values = match kind {
        BasisKind::Fourier => {
            let deviation = (gram(&raw, grid) - DMatrix::identity(m, m)).amax();
            if deviation > ANALYTIC_GRAM_SLACK {
                orthonormalize(raw, grid)?
            } else {
                raw
            }
        }
        BasisKind::Bspline { .. } => orthonormalize(raw, grid)?,
    };
    Ok(BasisSystem { kind, values, grid: grid.clone() })
}

/// Quadrature scores `chi[t, j] = sum_g w_g X_t(u_g) phi_j(u_g)`.
pub fn project_scores(series: &FunctionalSeries, basis: &BasisSystem) -> Result<ScoreMatrix> {
    if series.grid() != basis.grid() {
        return Err(Error::GridMismatch);
    }
    let mut weighted = series.values().clone();
    for (g, mut col) in weighted.column_iter_mut().enumerate() {
        col.scale_mut(basis.grid().weights()[g]);
    }
    ScoreMatrix::new(weighted * basis.values().transpose())
}

/// Curves `X_t(u_g) = sum_j chi[t, j] phi_j(u_g)`.
pub fn synthesize_curves(scores: &ScoreMatrix, basis: &BasisSystem) -> Result<FunctionalSeries> {
    if scores.m() != basis.m() {
        return Err(Error::DimensionMismatch(format!(
            "scores have {} columns but basis has {} functions",
            scores.m(),
            basis.m()
        )));
    }
    FunctionalSeries::new(scores.entries() * basis.values(), basis.grid().clone())
}

/// Least-squares smoothing of discretely observed rows onto `n_basis` raw
/// basis functions, re-sampled on `grid`.
///
/// `panel` is `n x P` with row `t` observed at the `design` abscissae.
pub fn smooth_onto_grid(
    panel: &DMatrix<f64>,
    design: &[f64],
    kind: BasisKind,
    n_basis: usize,
    grid: &Grid,
) -> Result<FunctionalSeries> {
    if panel.ncols() != design.len() {
        return Err(Error::DimensionMismatch(format!(
            "panel has {} columns but {} design points were given",
            panel.ncols(),
            design.len()
        )));
    }
    if n_basis > design.len() {
        return Err(Error::InvalidBasis(format!(
            "cannot smooth {} observation points onto {n_basis} basis functions (underdetermined)",
            design.len()
        )));
    }
    let (a, b) = (grid.lower(), grid.upper());
    let at_design = evaluate_raw(kind, n_basis, design, a, b)?;
    let at_grid = evaluate_raw(kind, n_basis, grid.points(), a, b)?;
    // coefficients (n_basis x n) solve  at_design^T c = panel^T  in least squares
    let coefficients = crate::linalg::lstsq(&at_design.transpose(), &panel.transpose()).map_err(|condition| {
        Error::InvalidBasis(format!("smoothing design is ill-conditioned (condition number {condition:.3e})"))
    })?;
    FunctionalSeries::new(coefficients.transpose() * at_grid, grid.clone())
}
