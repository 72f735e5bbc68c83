//! Generalized dynamic functional principal component analysis.
//!
//! Functional time series are truncated onto an orthonormal basis, and each
//! component is a single factor sequence `f` whose current and `K` past
//! values linearly reconstruct every curve through `K + 1` loading curves
//! plus an intercept curve. Components are estimated by alternating exact
//! least-squares updates; higher-order components are fitted greedily on the
//! residuals of the earlier ones.
//!
//! Module map:
//! - [`basis`]: grids, orthonormal Fourier/B-spline systems, projection.
//! - [`gdpc`]: the score-level estimator (design matrices, block updates, fit loop).
//! - [`fgdpca`]: the functional layer, reconstruction and functional metrics.
//! - [`baselines`]: classical FPCA on the truncated scores.
//! - [`simgen`]: seeded FAR(1), VARI(1,1) and dynamic factor model generators.
//! - [`metrics`]: replication studies and summary statistics.
//! - [`harness`]: CSV ingestion, run configuration, reports and the CLI.

// `!(x <= limit)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod basis;
mod error;
pub mod fgdpca;
pub mod gdpc;
pub mod harness;
mod linalg;
pub mod metrics;
pub mod simgen;

pub use baselines::{fit_fpca, reconstruct_fpca, FpcaFit};
pub use basis::{make_basis, project_scores, synthesize_curves, BasisKind, BasisSystem, FunctionalSeries, Grid, ScoreMatrix};
pub use error::{Error, Result};

pub use fgdpca::{explained_variance, fit_fgdpca, functional_mse, reconstruct_functional, FgdpcaModel, LoadingCurves};
pub use gdpc::{fit_gdpc, residual_scores, FitConfig, GdpcFit, Init};
