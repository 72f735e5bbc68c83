//! Replication studies: repeated generate-fit-evaluate runs on independent
//! seed streams, summarised by medians and quartiles per method and
//! component count.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_fpca, reconstruct_fpca};
use crate::basis::{make_basis, project_scores, synthesize_curves, BasisKind, BasisSystem, FunctionalSeries, Grid, ScoreMatrix};
use crate::error::{Error, Result};
use crate::fgdpca::{explained_variance, functional_mse};
use crate::gdpc::{fit_gdpc, residual_scores, FitConfig};
use crate::simgen::{gen_dfm, gen_far1, gen_vari11, Seed};

/// Replications used by [`select_p`].
pub const SELECT_P_REPLICATIONS: usize = 10;

/// Environment variable capping replication parallelism.
pub const THREADS_ENV: &str = "GDFPCA_THREADS";

/// Anything that can produce one replication's data from its seed stream.
pub trait Dgp: Sync {
    fn generate(&self, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<FunctionalSeries>;

    /// Truncation dimension used when the study does not set one.
    fn default_truncation(&self) -> usize;

    fn describe(&self) -> serde_json::Value;
}

/// The three simulation designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dgp", rename_all = "lowercase")]
pub enum DgpConfig {
    Far1 { d: usize, kappa: f64, n: usize, burn_in: usize },
    Vari11 { m: usize, t: usize, n_basis: usize },
    Dfm { m: usize, t: usize, r: usize, q: usize, n_basis: usize },
}

impl Dgp for DgpConfig {
    fn generate(&self, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<FunctionalSeries> {
        match *self {
            DgpConfig::Far1 { d, kappa, n, burn_in } => gen_far1(d, kappa, n, burn_in, grid, rng),
            DgpConfig::Vari11 { m, t, n_basis } => gen_vari11(m, t, n_basis, grid, rng),
            DgpConfig::Dfm { m, t, r, q, n_basis } => gen_dfm(m, t, r, q, grid, n_basis, rng).map(|(x, _)| x),
        }
    }

    fn default_truncation(&self) -> usize {
        match *self {
            DgpConfig::Far1 { d, .. } => d,
            DgpConfig::Vari11 { n_basis, .. } | DgpConfig::Dfm { n_basis, .. } => n_basis,
        }
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serialisable config")
    }
}

/// Fitting settings shared by every replication of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub grid: Grid,
    /// Number of Fourier functions the curves are truncated to; `None` uses the DGP default.
    pub truncation: Option<usize>,
    pub fit: FitConfig,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self { grid: Grid::default_unit(), truncation: None, fit: FitConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gdfpca,
    Fpca,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Gdfpca => "gdfpca",
            Method::Fpca => "fpca",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gdfpca" => Ok(Method::Gdfpca),
            "fpca" => Ok(Method::Fpca),
            other => Err(format!("unknown method `{other}` (expected gdfpca or fpca)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub method: Method,
    pub p: usize,
    pub mse: f64,
    pub explained_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    /// Linearly interpolated quartiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self { q1: quantile(&sorted, 0.25), median: quantile(&sorted, 0.5), q3: quantile(&sorted, 0.75) })
    }
}

fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median of a sample (linear interpolation between the middle pair).
pub fn median(values: &[f64]) -> Option<f64> {
    Quartiles::of(values).map(|q| q.median)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub p: usize,
    pub count: usize,
    pub mse: Quartiles,
    pub explained_variance: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyParameters {
    pub dgp: serde_json::Value,
    pub grid_points: usize,
    pub truncation: usize,
    pub lags: usize,
    pub epsilon: f64,
    pub max_iter: usize,
    pub methods: Vec<Method>,
    pub p_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub parameters: StudyParameters,
    /// Records of successful replications, ordered by replication, method, p.
    pub records: Vec<ReplicationRecord>,
    pub summaries: Vec<MethodSummary>,
    pub failures: Vec<ReplicationFailure>,
}

impl ReplicationSummary {
    pub fn summary(&self, method: Method, p: usize) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method && s.p == p)
    }

    pub fn succeeded(&self) -> usize {
        self.parameters.replications - self.failures.len()
    }
}

/// Summaries per (method, p) from a set of records, independent of record order.
pub fn summarize(records: &[ReplicationRecord]) -> Vec<MethodSummary> {
    let mut groups: BTreeMap<(Method, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let entry = groups.entry((r.method, r.p)).or_default();
        entry.0.push(r.mse);
        entry.1.push(r.explained_variance);
    }
    groups
        .into_iter()
        .map(|((method, p), (mse, ev))| MethodSummary {
            method,
            p,
            count: mse.len(),
            mse: Quartiles::of(&mse).expect("non-empty group"),
            explained_variance: Quartiles::of(&ev).expect("non-empty group"),
        })
        .collect()
}

/// Thread pool honouring `GDFPCA_THREADS` (all available cores when unset).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))
}

/// Functional MSE and explained variance of a score-level reconstruction.
fn evaluate(series: &FunctionalSeries, basis: &BasisSystem, reconstruction: &ScoreMatrix) -> Result<(f64, f64)> {
    let curves = synthesize_curves(reconstruction, basis)?;
    Ok((functional_mse(series, &curves)?, explained_variance(series, &curves)?))
}

/// Per-p (mse, explained variance) of greedy components, for `p = 1..=p_max`.
pub fn gdfpca_path(
    series: &FunctionalSeries,
    basis: &BasisSystem,
    p_max: usize,
    config: &FitConfig,
) -> Result<Vec<(f64, f64)>> {
    let scores = project_scores(series, basis)?;
    let mut residual = scores.clone();
    let mut total = nalgebra::DMatrix::zeros(scores.n(), scores.m());
    let mut out = Vec::with_capacity(p_max);
    for _ in 0..p_max {
        let fit = fit_gdpc(&residual, config)?;
        total += fit.reconstruct();
        residual = residual_scores(&residual, &fit)?;
        out.push(evaluate(series, basis, &ScoreMatrix::new(total.clone())?)?);
    }
    Ok(out)
}

/// Per-p (mse, explained variance) of FPCA, for `p = 1..=p_max`.
pub fn fpca_path(series: &FunctionalSeries, basis: &BasisSystem, p_max: usize) -> Result<Vec<(f64, f64)>> {
    let scores = project_scores(series, basis)?;
    let fit = fit_fpca(&scores, p_max)?;
    (1..=p_max).map(|p| evaluate(series, basis, &reconstruct_fpca(&fit, p)?)).collect()
}

fn truncation_of<D: Dgp>(dgp: &D, settings: &StudySettings) -> usize {
    settings.truncation.unwrap_or_else(|| dgp.default_truncation())
}

fn replication_records<D: Dgp>(
    dgp: &D,
    settings: &StudySettings,
    basis: &BasisSystem,
    methods: &[Method],
    p_list: &[usize],
    replication: usize,
    seed: Seed,
) -> Result<Vec<ReplicationRecord>> {
    let series = dgp.generate(&settings.grid, &mut seed.stream(replication as u64))?;
    let p_max = *p_list.iter().max().expect("validated non-empty");
    let mut records = Vec::with_capacity(methods.len() * p_list.len());
    for &method in methods {
        let path = match method {
            Method::Gdfpca => gdfpca_path(&series, basis, p_max, &settings.fit)?,
            Method::Fpca => fpca_path(&series, basis, p_max)?,
        };
        for &p in p_list {
            let (mse, explained_variance) = path[p - 1];
            records.push(ReplicationRecord { replication, method, p, mse, explained_variance });
        }
    }
    Ok(records)
}

/// Run `reps` replications of `dgp`, fitting every method at every `p`.
///
/// Replication `r` uses seed stream `r`; a failed replication is recorded in
/// `failures` and excluded from the summaries.
pub fn run_replications<D: Dgp>(
    dgp: &D,
    settings: &StudySettings,
    methods: &[Method],
    p_list: &[usize],
    reps: usize,
    seed: Seed,
) -> Result<ReplicationSummary> {
    let truncation = truncation_of(dgp, settings);
    let mut problems = Vec::new();
    if reps == 0 {
        problems.push("reps must be at least 1".to_string());
    }
    if methods.is_empty() {
        problems.push("at least one method is required".to_string());
    }
    if p_list.is_empty() {
        problems.push("at least one component count is required".to_string());
    }
    if let Some(&p) = p_list.iter().find(|&&p| p == 0 || p > truncation) {
        problems.push(format!("component count {p} outside 1..={truncation}"));
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    settings.fit.validate()?;
    let basis = make_basis(BasisKind::Fourier, truncation, &settings.grid)?;

    let mut unique = Vec::with_capacity(methods.len());
    for &m in methods {
        if !unique.contains(&m) {
            unique.push(m);
        }
    }
    let methods = unique;
    let mut p_list = p_list.to_vec();
    p_list.sort_unstable();
    p_list.dedup();

    let pool = thread_pool()?;
    let outcomes: Vec<Result<Vec<ReplicationRecord>>> = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| replication_records(dgp, settings, &basis, &methods, &p_list, r, seed))
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (replication, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.extend(r),
            Err(e) => failures.push(ReplicationFailure { replication, message: e.to_string() }),
        }
    }
    let summaries = summarize(&records);
    Ok(ReplicationSummary {
        parameters: StudyParameters {
            dgp: dgp.describe(),
            grid_points: settings.grid.len(),
            truncation,
            lags: settings.fit.lags,
            epsilon: settings.fit.epsilon,
            max_iter: settings.fit.max_iter,
            methods,
            p_list,
            replications: reps,
            seed: seed.master,
        },
        records,
        summaries,
        failures,
    })
}

/// Incrementally fitted greedy model of one replication.
struct GreedyState {
    series: FunctionalSeries,
    residual: ScoreMatrix,
    total: nalgebra::DMatrix<f64>,
    explained: f64,
    exhausted: bool,
}

impl GreedyState {
    fn advance(&mut self, basis: &BasisSystem, config: &FitConfig) -> Result<()> {
        if self.exhausted {
            return Ok(());
        }
        let fit = match fit_gdpc(&self.residual, config) {
            Ok(fit) => fit,
            // residuals with no variance left: further components add nothing
            Err(Error::AtIteration { iteration: 0, source }) if *source == Error::DegenerateInput => {
                self.exhausted = true;
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        self.total += fit.reconstruct();
        self.residual = residual_scores(&self.residual, &fit)?;
        self.explained = evaluate(&self.series, basis, &ScoreMatrix::new(self.total.clone())?)?.1;
        Ok(())
    }
}

/// Smallest `p` whose median GDFPCA explained variance over
/// [`SELECT_P_REPLICATIONS`] replications reaches `threshold`, capped at the
/// truncation dimension.
pub fn select_p<D: Dgp>(dgp: &D, settings: &StudySettings, threshold: f64, seed: Seed) -> Result<usize> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    settings.fit.validate()?;
    let truncation = truncation_of(dgp, settings);
    let basis = make_basis(BasisKind::Fourier, truncation, &settings.grid)?;
    let pool = thread_pool()?;
    pool.install(|| {
        let mut states: Vec<GreedyState> = (0..SELECT_P_REPLICATIONS)
            .into_par_iter()
            .map(|r| {
                let series = dgp.generate(&settings.grid, &mut seed.stream(r as u64))?;
                let residual = project_scores(&series, &basis)?;
                let total = nalgebra::DMatrix::zeros(residual.n(), residual.m());
                Ok(GreedyState { series, residual, total, explained: f64::NEG_INFINITY, exhausted: false })
            })
            .collect::<Result<_>>()?;
        let mut best = f64::NEG_INFINITY;
        for p in 1..=truncation {
            states.par_iter_mut().map(|s| s.advance(&basis, &settings.fit)).collect::<Result<Vec<()>>>()?;
            let values: Vec<f64> = states.iter().map(|s| s.explained).collect();
            let med = median(&values).expect("non-empty");
            best = best.max(med);
            if med >= threshold {
                return Ok(p);
            }
        }
        Err(Error::ThresholdUnreachable { threshold, p_max: truncation, best })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        let q = Quartiles::of(&[1.0, 2.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.25, 1.5, 1.75));
        assert!(Quartiles::of(&[]).is_none());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("GDFPCA".parse::<Method>(), Ok(Method::Gdfpca));
        assert_eq!(" fpca".parse::<Method>(), Ok(Method::Fpca));
        assert!("dfpca".parse::<Method>().is_err());
    }

    #[test]
    fn invalid_study_lists_every_problem() {
        let dgp = DgpConfig::Far1 { d: 5, kappa: 0.3, n: 50, burn_in: 10 };
        let err = run_replications(&dgp, &StudySettings::default(), &[], &[0], 0, Seed::new(1)).unwrap_err();
        match err {
            Error::Config(problems) => assert_eq!(problems.len(), 3, "{problems:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn threshold_must_be_a_fraction() {
        let dgp = DgpConfig::Far1 { d: 5, kappa: 0.3, n: 50, burn_in: 10 };
        assert!(select_p(&dgp, &StudySettings::default(), 1.0, Seed::new(1)).is_err());
    }
}
