//! The `simulate`, `fit` and `compare` subcommands.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::baselines::{fit_fpca, reconstruct_fpca};
use crate::basis::{make_basis, project_scores, synthesize_curves, BasisKind, BasisSystem, FunctionalSeries};
use crate::error::{Error, Result};
use crate::fgdpca::{explained_variance, fit_fgdpca, functional_mse, reconstruct_functional, FgdpcaModel};
use crate::metrics::{run_replications, Dgp, Method, ReplicationSummary, StudySettings};
use crate::simgen::Seed;

use super::config::{CompareSource, ComparePlan, FitPlan, Invocation, ModelPlan, Plan, SimulatePlan};
use super::dataset::{format_number, load_fts_csv, write_matrix_csv};
use super::report::{ComponentTrace, MethodResult, Report, RunMetadata};

/// Files written by a subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub files: Vec<std::path::PathBuf>,
    pub report: Option<Report>,
}

pub fn run(invocation: &Invocation) -> Result<Outputs> {
    match &invocation.plan {
        Plan::Simulate(plan) => run_simulate(plan),
        Plan::Fit(plan) => run_fit(plan, metadata(invocation, plan.seed)),
        Plan::Compare(plan) => run_compare(plan, metadata(invocation, plan.seed)),
    }
}

fn metadata(invocation: &Invocation, seed: u64) -> RunMetadata {
    RunMetadata {
        command: invocation.command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: invocation.echo.clone(),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Simulated curves, one row per time point, no header.
pub fn run_simulate(plan: &SimulatePlan) -> Result<Outputs> {
    let series = plan.dgp.generate(&plan.grid, &mut Seed::new(plan.seed).stream(0))?;
    if let Some(parent) = plan.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_matrix_csv(&plan.out, series.values(), None)?;
    Ok(Outputs { files: vec![plan.out.clone()], report: None })
}

fn model_basis(model: &ModelPlan, series: &FunctionalSeries) -> Result<BasisSystem> {
    let m = model.m.ok_or_else(|| Error::Config(vec!["missing required parameter `m`".into()]))?;
    make_basis(model.basis, m, series.grid())
}

fn gdfpca_results(series: &FunctionalSeries, model: &FgdpcaModel) -> Result<Vec<MethodResult>> {
    (1..=model.p())
        .map(|p| {
            let rec = reconstruct_functional(model, p)?;
            Ok(MethodResult {
                method: Method::Gdfpca,
                p,
                mse: functional_mse(series, &rec)?,
                explained_variance: explained_variance(series, &rec)?,
            })
        })
        .collect()
}

fn fpca_results(series: &FunctionalSeries, basis: &BasisSystem, p_max: usize) -> Result<Vec<MethodResult>> {
    let fit = fit_fpca(&project_scores(series, basis)?, p_max)?;
    (1..=p_max)
        .map(|p| {
            let rec = synthesize_curves(&reconstruct_fpca(&fit, p)?, basis)?;
            Ok(MethodResult {
                method: Method::Fpca,
                p,
                mse: functional_mse(series, &rec)?,
                explained_variance: explained_variance(series, &rec)?,
            })
        })
        .collect()
}

/// Explained-variance table: one row per method, one column per `p`.
fn write_ev_table(path: &Path, methods: &[Method], p_max: usize, value: impl Fn(Method, usize) -> Option<f64>) -> Result<()> {
    let mut out = String::from("method");
    for p in 1..=p_max {
        out.push_str(&format!(",p{p}"));
    }
    out.push('\n');
    for &method in methods {
        out.push_str(method.label());
        for p in 1..=p_max {
            out.push(',');
            if let Some(v) = value(method, p) {
                out.push_str(&format_number(v));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ComponentJson<'a> {
    component: usize,
    factor: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<Vec<f64>>,
    alpha_curve: Vec<f64>,
    beta_curves: Vec<Vec<f64>>,
    mse_trace: &'a [f64],
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct ModelJson<'a> {
    basis: BasisKind,
    m: usize,
    lags: usize,
    grid: &'a [f64],
    components: Vec<ComponentJson<'a>>,
}

fn rows(matrix: &DMatrix<f64>) -> Vec<Vec<f64>> {
    matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn write_model(path: &Path, model: &FgdpcaModel) -> Result<()> {
    let curves = model.loading_curves();
    let json = ModelJson {
        basis: model.basis.kind(),
        m: model.m(),
        lags: model.lags,
        grid: model.basis.grid().points(),
        components: model
            .components
            .iter()
            .zip(&curves)
            .enumerate()
            .map(|(k, (c, lc))| ComponentJson {
                component: k + 1,
                factor: c.f.iter().copied().collect(),
                alpha: c.alpha.iter().copied().collect(),
                beta: rows(&c.beta),
                alpha_curve: lc.alpha_curve.iter().copied().collect(),
                beta_curves: rows(&lc.beta_curves),
                mse_trace: &c.mse_trace,
                iterations: c.iterations,
                converged: c.converged,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Fit on a dataset and write `model.json`, `reconstruction.csv`,
/// `explained_variance.csv` and `report.json`.
pub fn run_fit(plan: &FitPlan, metadata: RunMetadata) -> Result<Outputs> {
    let series = load_fts_csv(&plan.dataset)?;
    let basis = model_basis(&plan.model, &series)?;
    let model = fit_fgdpca(&series, &basis, plan.model.p, &plan.model.fit)?;
    let results = gdfpca_results(&series, &model)?;
    let reconstruction = reconstruct_functional(&model, model.p())?;

    let report = Report {
        metadata,
        results,
        traces: model.components.iter().enumerate().map(|(k, c)| ComponentTrace::of(k + 1, c)).collect(),
        study: None,
    };
    report.check_finite()?;

    create_dir(&plan.out_dir)?;
    let files = ["model.json", "reconstruction.csv", "explained_variance.csv", "report.json"].map(|f| plan.out_dir.join(f));
    write_model(&files[0], &model)?;
    write_matrix_csv(&files[1], reconstruction.values(), None)?;
    write_ev_table(&files[2], &[Method::Gdfpca], model.p(), |_, p| {
        report.results.iter().find(|r| r.p == p).map(|r| r.explained_variance)
    })?;
    report.write(&files[3])?;
    Ok(Outputs { files: files.to_vec(), report: Some(report) })
}

fn write_boxplot(path: &Path, study: &ReplicationSummary) -> Result<()> {
    let mut out = String::from("replication,method,p,mse,explained_variance\n");
    for r in &study.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.replication,
            r.method.label(),
            r.p,
            format_number(r.mse),
            format_number(r.explained_variance)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Compare methods on a dataset or a simulation study and write
/// `report.json`, `explained_variance.csv` and, for studies, `boxplot_data.csv`.
pub fn run_compare(plan: &ComparePlan, metadata: RunMetadata) -> Result<Outputs> {
    let p_max = plan.model.p;
    let (results, traces, study) = match &plan.source {
        CompareSource::Dataset(spec) => {
            let series = load_fts_csv(spec)?;
            let basis = model_basis(&plan.model, &series)?;
            let mut results = Vec::new();
            let mut traces = Vec::new();
            for &method in &plan.methods {
                match method {
                    Method::Gdfpca => {
                        let model = fit_fgdpca(&series, &basis, p_max, &plan.model.fit)?;
                        results.extend(gdfpca_results(&series, &model)?);
                        traces = model.components.iter().enumerate().map(|(k, c)| ComponentTrace::of(k + 1, c)).collect();
                    }
                    Method::Fpca => results.extend(fpca_results(&series, &basis, p_max)?),
                }
            }
            (results, traces, None)
        }
        CompareSource::Simulation { dgp, grid, reps } => {
            if plan.model.basis != BasisKind::Fourier {
                return Err(Error::Config(vec!["simulation studies truncate onto the Fourier basis".into()]));
            }
            let settings = StudySettings { grid: grid.clone(), truncation: plan.model.m, fit: plan.model.fit.clone() };
            let p_list: Vec<usize> = (1..=p_max).collect();
            let study = run_replications(dgp, &settings, &plan.methods, &p_list, *reps, Seed::new(plan.seed))?;
            if study.succeeded() == 0 {
                let first = study.failures.first().map(|f| f.message.clone()).unwrap_or_default();
                return Err(Error::Data(format!("every replication failed; first failure: {first}")));
            }
            let results = plan
                .methods
                .iter()
                .flat_map(|&method| (1..=p_max).map(move |p| (method, p)))
                .filter_map(|(method, p)| {
                    study.summary(method, p).map(|s| MethodResult {
                        method,
                        p,
                        mse: s.mse.median,
                        explained_variance: s.explained_variance.median,
                    })
                })
                .collect();
            (results, Vec::new(), Some(study))
        }
    };

    let report = Report { metadata, results, traces, study };
    report.check_finite()?;
    create_dir(&plan.out_dir)?;
    let mut files = vec![plan.out_dir.join("report.json"), plan.out_dir.join("explained_variance.csv")];
    report.write(&files[0])?;
    write_ev_table(&files[1], &plan.methods, p_max, |method, p| {
        report.results.iter().find(|r| r.method == method && r.p == p).map(|r| r.explained_variance)
    })?;
    if let Some(study) = &report.study {
        let path = plan.out_dir.join("boxplot_data.csv");
        write_boxplot(&path, study)?;
        files.push(path);
    }
    Ok(Outputs { files, report: Some(report) })
}
