//! Functional layer: truncate curves to basis scores, fit components
//! greedily on residuals, and map reconstructions back to curves.

use nalgebra::{DMatrix, DVector};

use crate::basis::{project_scores, synthesize_curves, BasisSystem, FunctionalSeries, ScoreMatrix};
use crate::error::{Error, Result};
use crate::gdpc::{fit_gdpc, residual_scores, FitConfig, GdpcFit};

/// `p` components fitted in sequence, component `k` on the residuals of
/// components `1..k`.
#[derive(Debug, Clone)]
pub struct FgdpcaModel {
    pub basis: BasisSystem,
    pub components: Vec<GdpcFit>,
    pub lags: usize,
}

/// Grid-sampled intercept and loading curves of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingCurves {
    pub alpha_curve: DVector<f64>,
    /// Row `h` is the lag-`h` loading curve.
    pub beta_curves: DMatrix<f64>,
}

impl FgdpcaModel {
    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    fn check_p(&self, p_used: usize) -> Result<()> {
        if p_used == 0 || p_used > self.p() {
            return Err(Error::InvalidArgument(format!(
                "number of components must be in 1..={}, got {p_used}",
                self.p()
            )));
        }
        Ok(())
    }

    /// Sum of the first `p_used` score-level reconstructions.
    pub fn reconstruct_scores(&self, p_used: usize) -> Result<ScoreMatrix> {
        self.check_p(p_used)?;
        let total = self.components[..p_used]
            .iter()
            .fold(DMatrix::zeros(self.n(), self.m()), |acc, c| acc + c.reconstruct());
        ScoreMatrix::new(total)
    }

    pub fn loading_curves(&self) -> Vec<LoadingCurves> {
        let phi = self.basis.values();
        self.components
            .iter()
            .map(|c| LoadingCurves {
                alpha_curve: (c.alpha.transpose() * phi).transpose(),
                beta_curves: &c.beta * phi,
            })
            .collect()
    }
}

pub fn fit_fgdpca(series: &FunctionalSeries, basis: &BasisSystem, p: usize, config: &FitConfig) -> Result<FgdpcaModel> {
    if p == 0 {
        return Err(Error::InvalidArgument("number of components must be at least 1".into()));
    }
    let scores = project_scores(series, basis)?;
    fit_fgdpca_scores(&scores, basis, p, config)
}

/// Same as [`fit_fgdpca`] starting from already projected scores.
pub fn fit_fgdpca_scores(scores: &ScoreMatrix, basis: &BasisSystem, p: usize, config: &FitConfig) -> Result<FgdpcaModel> {
    if p == 0 {
        return Err(Error::InvalidArgument("number of components must be at least 1".into()));
    }
    if scores.m() != basis.m() {
        return Err(Error::DimensionMismatch(format!(
            "scores have {} columns but basis has {} functions",
            scores.m(),
            basis.m()
        )));
    }
    let mut components = Vec::with_capacity(p);
    let mut current = scores.clone();
    for k in 0..p {
        let fit = fit_gdpc(&current, config)?;
        if k + 1 < p {
            current = residual_scores(&current, &fit)?;
        }
        components.push(fit);
    }
    Ok(FgdpcaModel { basis: basis.clone(), components, lags: config.lags })
}

/// Curves `alpha(u) + sum_h f_{t-h} beta_h(u)` summed over the first `p_used` components.
pub fn reconstruct_functional(model: &FgdpcaModel, p_used: usize) -> Result<FunctionalSeries> {
    synthesize_curves(&model.reconstruct_scores(p_used)?, &model.basis)
}

fn check_pair(series: &FunctionalSeries, reconstruction: &FunctionalSeries) -> Result<()> {
    if series.grid() != reconstruction.grid() {
        return Err(Error::GridMismatch);
    }
    if series.n() != reconstruction.n() {
        return Err(Error::DimensionMismatch(format!(
            "series has {} curves but reconstruction has {}",
            series.n(),
            reconstruction.n()
        )));
    }
    Ok(())
}

/// Quadrature sum of squared curve norms over all rows.
fn total_squared_norm(values: &DMatrix<f64>, weights: &[f64]) -> f64 {
    values
        .column_iter()
        .zip(weights)
        .map(|(col, w)| w * col.norm_squared())
        .sum()
}

/// `(1/n) sum_t |X_t - X_t^R|^2` under the grid quadrature.
pub fn functional_mse(series: &FunctionalSeries, reconstruction: &FunctionalSeries) -> Result<f64> {
    check_pair(series, reconstruction)?;
    let diff = series.values() - reconstruction.values();
    Ok(total_squared_norm(&diff, series.grid().weights()) / series.n() as f64)
}

/// `1 - sum_t |X_t - X_t^R|^2 / sum_t |X_t - mean|^2`, not clamped.
pub fn explained_variance(series: &FunctionalSeries, reconstruction: &FunctionalSeries) -> Result<f64> {
    check_pair(series, reconstruction)?;
    let weights = series.grid().weights();
    let (centred, _) = crate::linalg::center_columns(series.values());
    let total = total_squared_norm(&centred, weights);
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("series has zero total variance".into()));
    }
    let residual = total_squared_norm(&(series.values() - reconstruction.values()), weights);
    Ok(1.0 - residual / total)
}
