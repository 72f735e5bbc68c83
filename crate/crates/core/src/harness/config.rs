//! Command-line and config-file settings.
//!
//! Every subcommand accepts `--config <file>` pointing at a flat JSON object
//! whose keys are the flag names with `-` replaced by `_` (`K` for the lag
//! count). Flags given on the command line override the file. The merged
//! settings are echoed into the report and can be fed back as a config file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, Grid};
use crate::error::{Error, Result};
use crate::gdpc::{FitConfig, Init};
use crate::metrics::{DgpConfig, Method};
use crate::simgen::DEFAULT_FAR1_BURN_IN;

use super::dataset::{DatasetSpec, Layout, Preprocessing};

macro_rules! settings_group {
    ($ty:ident { $($field:ident => $key:literal),* $(,)? }) => {
        impl $ty {
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            /// Field-wise `self` with `fallback` filling the gaps.
            pub fn or(self, fallback: Self) -> Self {
                Self { $($field: self.$field.or(fallback.$field)),* }
            }

            pub fn present(&self) -> Vec<&'static str> {
                let mut keys = Vec::new();
                $(if self.$field.is_some() { keys.push($key); })*
                keys
            }
        }
    };
}

#[derive(Debug, Parser)]
#[command(name = "gdfpca", version, about = "Generalized dynamic functional principal component analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Generate a simulated functional time series and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit GDFPCA on a CSV dataset and write the model, reconstruction and report.
    Fit(FitArgs),
    /// Compare GDFPCA with FPCA on a simulation study or a dataset.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CommonArgs {
    /// Master random seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}
settings_group!(CommonArgs { seed => "seed" });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpArgs {
    /// Data-generating process: far1, vari11 or dfm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dgp: Option<String>,
    /// far1: number of Fourier coefficients driven by the VAR(1) (odd) [default: 15].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// far1: transition scale, 0 <= kappa < 2 [default: 0.3].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Number of curves, also accepted as --T [default: 300 for far1, 100 otherwise].
    #[arg(long, visible_alias = "T")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// far1: discarded warm-up draws [default: 200].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    /// vari11/dfm: cross-sectional dimension of the discrete panel [default: 50].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel_dim: Option<usize>,
    /// dfm: number of static factors [default: 6].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// dfm: number of dynamic shocks [default: 2].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// vari11/dfm: Fourier functions used to smooth the panel (odd) [default: 21].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_basis: Option<usize>,
    /// Points of the uniform evaluation grid on [0, 1] [default: 101].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}
settings_group!(DgpArgs {
    dgp => "dgp", d => "d", kappa => "kappa", n => "n", burn_in => "burn_in", panel_dim => "panel_dim",
    r => "r", q => "q", n_basis => "n_basis", grid_points => "grid_points",
});

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetArgs {
    /// Input CSV of curves.
    #[arg(long = "in")]
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// CSV orientation: time_by_grid or grid_by_time [default: time_by_grid].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    /// Lower end of the curve domain [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    /// Upper end of the curve domain [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    /// Replace rows by differenced logs along time.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_return: Option<bool>,
    /// Remove the mean of every grid point.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<bool>,
    /// Scale every grid point to unit variance.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<bool>,
    /// Smoothing basis: fourier or bspline (requires --smooth-n).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth_basis: Option<String>,
    /// Number of smoothing basis functions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth_n: Option<usize>,
}
settings_group!(DatasetArgs {
    input => "in", layout => "layout", lower => "lower", upper => "upper", log_return => "log_return",
    center => "center", scale => "scale", smooth_basis => "smooth_basis", smooth_n => "smooth_n",
});

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelArgs {
    /// Truncation basis: fourier or bspline [default: fourier].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    /// Truncation dimension (number of basis functions).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// B-spline order [default: 4].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Number of factor lags per component [default: 2].
    #[arg(long = "K")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub lags: Option<usize>,
    /// Number of components (compare: components 1..=p).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    /// Relative-improvement stopping threshold [default: 1e-6].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Iteration cap per component [default: 500].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}
settings_group!(ModelArgs {
    basis => "basis", m => "m", order => "order", lags => "K", p => "p", epsilon => "epsilon", max_iter => "max_iter",
});

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyArgs {
    /// Comma-separated methods among gdfpca and fpca [default: fpca,gdfpca].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<String>,
    /// Replications of a simulation study [default: 50].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
}
settings_group!(StudyArgs { methods => "methods", reps => "reps" });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct OutFileArgs {
    /// Output CSV path.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}
settings_group!(OutFileArgs { out => "out" });

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct OutDirArgs {
    /// Output directory [default: current directory].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}
settings_group!(OutDirArgs { out_dir => "out_dir" });

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Flat JSON config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[command(flatten)]
    pub output: OutFileArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Flat JSON config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutDirArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Flat JSON config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub study: StudyArgs,
    #[command(flatten)]
    pub output: OutDirArgs,
}

/// Where a comparison gets its data.
#[derive(Debug, Clone, PartialEq)]
pub enum CompareSource {
    Simulation { dgp: DgpConfig, grid: Grid, reps: usize },
    Dataset(DatasetSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelPlan {
    pub basis: BasisKind,
    /// `None` means the simulation default truncation.
    pub m: Option<usize>,
    pub p: usize,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatePlan {
    pub dgp: DgpConfig,
    pub grid: Grid,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitPlan {
    pub dataset: DatasetSpec,
    pub model: ModelPlan,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparePlan {
    pub source: CompareSource,
    pub model: ModelPlan,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Simulate(SimulatePlan),
    Fit(FitPlan),
    Compare(ComparePlan),
}

/// A validated invocation plus the merged settings it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: &'static str,
    pub plan: Plan,
    /// Merged flat settings, reusable as a config file.
    pub echo: serde_json::Map<String, serde_json::Value>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_LAGS: usize = 2;
pub const DEFAULT_REPS: usize = 50;

#[derive(Debug)]
pub enum CliError {
    /// Parse failures, `--help` and `--version` (clap renders these itself).
    Clap(clap::Error),
    Invalid(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Invalid(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

fn read_config(path: &Path, allowed: &[&[&str]]) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound { path: path.display().to_string() },
        _ => Error::Io(format!("{}: {e}", path.display())),
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(vec![format!("{}: not valid JSON ({e})", path.display())]))?;
    let object = value
        .as_object()
        .ok_or_else(|| Error::Config(vec![format!("{}: expected a flat JSON object", path.display())]))?;
    let unknown: Vec<String> = object
        .keys()
        .filter(|k| !allowed.iter().any(|group| group.contains(&k.as_str())))
        .map(|k| format!("unknown config key `{k}`"))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Config(unknown));
    }
    Ok(value)
}

fn from_config<T: serde::de::DeserializeOwned + Default>(value: Option<&serde_json::Value>) -> Result<T> {
    match value {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(vec![format!("config file: {e}")])),
    }
}

fn echo_of(parts: &[serde_json::Value]) -> serde_json::Map<String, serde_json::Value> {
    let mut map = serde_json::Map::new();
    for part in parts {
        if let Some(obj) = part.as_object() {
            for (k, v) in obj {
                map.insert(k.clone(), v.clone());
            }
        }
    }
    map
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("settings serialise")
}

/// Parse `argv` (including the program name), merge any config file and
/// validate everything, reporting all violations at once.
pub fn standardize_cli<I, T>(argv: I) -> std::result::Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    Ok(match cli.command {
        Command::Simulate(args) => {
            let file = match &args.config {
                Some(p) => Some(read_config(p, &[CommonArgs::KEYS, DgpArgs::KEYS, OutFileArgs::KEYS])?),
                None => None,
            };
            let common = args.common.or(from_config(file.as_ref())?);
            let dgp = args.dgp.or(from_config(file.as_ref())?);
            let output = args.output.or(from_config(file.as_ref())?);
            let echo = echo_of(&[to_value(&common), to_value(&dgp), to_value(&output)]);

            let mut problems = Vec::new();
            let dgp_config = resolve_dgp(&dgp, &mut problems);
            let grid = resolve_sim_grid(&dgp, &mut problems);
            if output.out.is_none() {
                problems.push("missing required parameter `out`".into());
            }
            finish(problems)?;
            Invocation {
                command: "simulate",
                plan: Plan::Simulate(SimulatePlan {
                    dgp: dgp_config.expect("validated"),
                    grid: grid.expect("validated"),
                    seed: common.seed.unwrap_or(DEFAULT_SEED),
                    out: output.out.expect("validated"),
                }),
                echo,
            }
        }
        Command::Fit(args) => {
            let file = match &args.config {
                Some(p) => Some(read_config(p, &[CommonArgs::KEYS, DatasetArgs::KEYS, ModelArgs::KEYS, OutDirArgs::KEYS])?),
                None => None,
            };
            let common = args.common.or(from_config(file.as_ref())?);
            let dataset = args.dataset.or(from_config(file.as_ref())?);
            let model = args.model.or(from_config(file.as_ref())?);
            let output = args.output.or(from_config(file.as_ref())?);
            let echo = echo_of(&[to_value(&common), to_value(&dataset), to_value(&model), to_value(&output)]);

            let mut problems = Vec::new();
            let spec = resolve_dataset(&dataset, &mut problems);
            let plan = resolve_model(&model, true, &mut problems);
            finish(problems)?;
            Invocation {
                command: "fit",
                plan: Plan::Fit(FitPlan {
                    dataset: spec.expect("validated"),
                    model: plan.expect("validated"),
                    seed: common.seed.unwrap_or(DEFAULT_SEED),
                    out_dir: output.out_dir.unwrap_or_else(|| PathBuf::from(".")),
                }),
                echo,
            }
        }
        Command::Compare(args) => {
            let file = match &args.config {
                Some(p) => Some(read_config(
                    p,
                    &[CommonArgs::KEYS, DgpArgs::KEYS, DatasetArgs::KEYS, ModelArgs::KEYS, StudyArgs::KEYS, OutDirArgs::KEYS],
                )?),
                None => None,
            };
            let common = args.common.or(from_config(file.as_ref())?);
            let dgp = args.dgp.or(from_config(file.as_ref())?);
            let dataset = args.dataset.or(from_config(file.as_ref())?);
            let model = args.model.or(from_config(file.as_ref())?);
            let study = args.study.or(from_config(file.as_ref())?);
            let output = args.output.or(from_config(file.as_ref())?);
            let echo = echo_of(&[
                to_value(&common),
                to_value(&dgp),
                to_value(&dataset),
                to_value(&model),
                to_value(&study),
                to_value(&output),
            ]);

            let mut problems = Vec::new();
            let source = match (dgp.dgp.is_some(), dataset.input.is_some()) {
                (true, true) => {
                    problems.push("conflicting parameters: `dgp` and `in` are mutually exclusive".into());
                    None
                }
                (false, false) => {
                    problems.push("missing required parameter: one of `dgp` or `in`".into());
                    None
                }
                (true, false) => {
                    for key in dataset.present() {
                        problems.push(format!("conflicting parameters: `{key}` applies to datasets, not to `dgp`"));
                    }
                    let cfg = resolve_dgp(&dgp, &mut problems);
                    let grid = resolve_sim_grid(&dgp, &mut problems);
                    let reps = study.reps.unwrap_or(DEFAULT_REPS);
                    if reps == 0 {
                        problems.push("reps must be at least 1".into());
                    }
                    match (cfg, grid) {
                        (Some(dgp), Some(grid)) => Some(CompareSource::Simulation { dgp, grid, reps }),
                        _ => None,
                    }
                }
                (false, true) => {
                    for key in dgp.present() {
                        problems.push(format!("conflicting parameters: `{key}` applies to simulations, not to `in`"));
                    }
                    if study.reps.is_some() {
                        problems.push("conflicting parameters: `reps` applies to simulations, not to `in`".into());
                    }
                    resolve_dataset(&dataset, &mut problems).map(CompareSource::Dataset)
                }
            };
            let is_dataset = matches!(source, Some(CompareSource::Dataset(_)));
            let mut plan = resolve_model(&model, is_dataset, &mut problems);
            if let (Some(CompareSource::Simulation { dgp, .. }), Some(plan)) = (&source, plan.as_mut()) {
                if plan.basis != BasisKind::Fourier {
                    problems.push("simulation studies truncate onto the Fourier basis; `basis` must be fourier".into());
                }
                let m = plan.m.unwrap_or_else(|| crate::metrics::Dgp::default_truncation(dgp));
                if plan.p > m {
                    problems.push(format!("p = {} exceeds the truncation dimension m = {m}", plan.p));
                }
            }
            let methods = resolve_methods(study.methods.as_deref(), &mut problems);
            finish(problems)?;
            Invocation {
                command: "compare",
                plan: Plan::Compare(ComparePlan {
                    source: source.expect("validated"),
                    model: plan.expect("validated"),
                    methods,
                    seed: common.seed.unwrap_or(DEFAULT_SEED),
                    out_dir: output.out_dir.unwrap_or_else(|| PathBuf::from(".")),
                }),
                echo,
            }
        }
    })
}

fn finish(problems: Vec<String>) -> Result<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}

fn resolve_sim_grid(dgp: &DgpArgs, problems: &mut Vec<String>) -> Option<Grid> {
    let points = dgp.grid_points.unwrap_or(101);
    if points < 2 {
        problems.push(format!("grid_points = {points} must be at least 2"));
        return None;
    }
    Grid::uniform(0.0, 1.0, points).ok()
}

fn resolve_dgp(args: &DgpArgs, problems: &mut Vec<String>) -> Option<DgpConfig> {
    let Some(name) = args.dgp.as_deref() else {
        problems.push("missing required parameter `dgp` (far1, vari11 or dfm)".into());
        return None;
    };
    let reject = |problems: &mut Vec<String>, key: &str, present: bool| {
        if present {
            problems.push(format!("conflicting parameters: `{key}` does not apply to dgp `{name}`"));
        }
    };
    let before = problems.len();
    let config = match name {
        "far1" => {
            reject(problems, "panel_dim", args.panel_dim.is_some());
            reject(problems, "r", args.r.is_some());
            reject(problems, "q", args.q.is_some());
            reject(problems, "n_basis", args.n_basis.is_some());
            let d = args.d.unwrap_or(15);
            let kappa = args.kappa.unwrap_or(0.3);
            let n = args.n.unwrap_or(300);
            if d == 0 || d.is_multiple_of(2) {
                problems.push(format!("d = {d} must be odd and at least 1"));
            }
            if !(0.0..2.0).contains(&kappa) {
                problems.push(format!("kappa = {kappa} violates the stationarity bound 0 <= kappa < 2"));
            }
            if n < 2 {
                problems.push(format!("n = {n} must be at least 2"));
            }
            DgpConfig::Far1 { d, kappa, n, burn_in: args.burn_in.unwrap_or(DEFAULT_FAR1_BURN_IN) }
        }
        "vari11" | "dfm" => {
            reject(problems, "d", args.d.is_some());
            reject(problems, "kappa", args.kappa.is_some());
            reject(problems, "burn_in", args.burn_in.is_some());
            let m = args.panel_dim.unwrap_or(50);
            let t = args.n.unwrap_or(100);
            let n_basis = args.n_basis.unwrap_or(crate::simgen::DEFAULT_SMOOTHING_BASIS);
            if m < 2 {
                problems.push(format!("panel_dim = {m} must be at least 2"));
            }
            if t < 2 {
                problems.push(format!("n = {t} must be at least 2"));
            }
            if n_basis == 0 || n_basis.is_multiple_of(2) {
                problems.push(format!("n_basis = {n_basis} must be odd"));
            }
            if n_basis > m {
                problems.push(format!("n_basis = {n_basis} exceeds panel_dim = {m} (underdetermined smoothing)"));
            }
            if name == "vari11" {
                reject(problems, "r", args.r.is_some());
                reject(problems, "q", args.q.is_some());
                DgpConfig::Vari11 { m, t, n_basis }
            } else {
                let r = args.r.unwrap_or(6);
                let q = args.q.unwrap_or(2);
                if q == 0 || r < q {
                    problems.push(format!("r = {r} and q = {q} must satisfy r >= q >= 1"));
                }
                if r > m {
                    problems.push(format!("r = {r} exceeds panel_dim = {m}"));
                }
                DgpConfig::Dfm { m, t, r, q, n_basis }
            }
        }
        other => {
            problems.push(format!("unknown dgp `{other}` (expected far1, vari11 or dfm)"));
            return None;
        }
    };
    (problems.len() == before).then_some(config)
}

fn resolve_basis_kind(name: Option<&str>, order: Option<usize>, key: &str, problems: &mut Vec<String>) -> Option<BasisKind> {
    match name.unwrap_or("fourier") {
        "fourier" => {
            if order.is_some() && key == "basis" {
                problems.push("conflicting parameters: `order` only applies to bspline bases".into());
            }
            Some(BasisKind::Fourier)
        }
        "bspline" => {
            let order = order.unwrap_or(4);
            if order == 0 {
                problems.push("order must be at least 1".into());
                return None;
            }
            Some(BasisKind::Bspline { order })
        }
        other => {
            problems.push(format!("unknown {key} `{other}` (expected fourier or bspline)"));
            None
        }
    }
}

fn resolve_dataset(args: &DatasetArgs, problems: &mut Vec<String>) -> Option<DatasetSpec> {
    let before = problems.len();
    let Some(path) = args.input.clone() else {
        problems.push("missing required parameter `in`".into());
        return None;
    };
    let layout = match args.layout.as_deref().map(str::parse::<Layout>).transpose() {
        Ok(l) => l.unwrap_or_default(),
        Err(e) => {
            problems.push(e);
            Layout::TimeByGrid
        }
    };
    let lower = args.lower.unwrap_or(0.0);
    let upper = args.upper.unwrap_or(1.0);
    if !(lower < upper) {
        problems.push(format!("bounds must satisfy lower < upper (got lower = {lower}, upper = {upper})"));
    }
    let smoothing = match (args.smooth_basis.as_deref(), args.smooth_n) {
        (None, None) => None,
        (kind, Some(n)) => {
            let kind = resolve_basis_kind(kind, None, "smooth_basis", problems);
            if n == 0 {
                problems.push("smooth_n must be at least 1".into());
            }
            kind.map(|k| (k, n))
        }
        (Some(_), None) => {
            problems.push("missing required parameter `smooth_n` for `smooth_basis`".into());
            None
        }
    };
    let spec = DatasetSpec {
        path,
        layout,
        lower,
        upper,
        preprocessing: Preprocessing {
            log_return: args.log_return.unwrap_or(false),
            center: args.center.unwrap_or(false),
            scale: args.scale.unwrap_or(false),
        },
        smoothing,
    };
    (problems.len() == before).then_some(spec)
}

fn resolve_model(args: &ModelArgs, require_m: bool, problems: &mut Vec<String>) -> Option<ModelPlan> {
    let before = problems.len();
    let basis = resolve_basis_kind(args.basis.as_deref(), args.order, "basis", problems);
    if require_m && args.m.is_none() {
        problems.push("missing required parameter `m`".into());
    }
    if let (Some(m), Some(kind)) = (args.m, basis) {
        if m == 0 {
            problems.push("m must be at least 1".into());
        }
        match kind {
            BasisKind::Fourier if m % 2 == 0 => problems.push(format!("m = {m} must be odd for a Fourier basis")),
            BasisKind::Bspline { order } if m < order => {
                problems.push(format!("m = {m} must be at least the B-spline order {order}"))
            }
            _ => {}
        }
    }
    let p = match args.p {
        None => {
            problems.push("missing required parameter `p`".into());
            0
        }
        Some(0) => {
            problems.push("p must be at least 1".into());
            0
        }
        Some(p) => p,
    };
    if let (Some(m), true) = (args.m, p > 0) {
        if p > m {
            problems.push(format!("p = {p} exceeds the truncation dimension m = {m}"));
        }
    }
    let fit = FitConfig {
        lags: args.lags.unwrap_or(DEFAULT_LAGS),
        epsilon: args.epsilon.unwrap_or(1e-6),
        max_iter: args.max_iter.unwrap_or(500),
        init: Init::FirstPc,
    };
    if !(fit.epsilon > 0.0) {
        problems.push(format!("epsilon = {} must be positive", fit.epsilon));
    }
    if fit.max_iter == 0 {
        problems.push("max_iter must be at least 1".into());
    }
    (problems.len() == before).then(|| ModelPlan { basis: basis.expect("validated"), m: args.m, p, fit })
}

fn resolve_methods(list: Option<&str>, problems: &mut Vec<String>) -> Vec<Method> {
    let list = list.unwrap_or("fpca,gdfpca");
    let mut methods = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        match item.parse::<Method>() {
            Ok(m) if !methods.contains(&m) => methods.push(m),
            Ok(_) => {}
            Err(e) => problems.push(e),
        }
    }
    if methods.is_empty() {
        problems.push("methods must name at least one of gdfpca, fpca".into());
    }
    methods
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Invocation, CliError> {
        standardize_cli(std::iter::once("gdfpca").chain(args.iter().copied()))
    }

    fn problems(args: &[&str]) -> Vec<String> {
        match parse(args) {
            Err(CliError::Invalid(Error::Config(p))) => p,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn simulate_defaults() {
        let inv = parse(&["simulate", "--dgp", "far1", "--out", "x.csv"]).unwrap();
        let Plan::Simulate(plan) = inv.plan else { panic!() };
        assert_eq!(plan.dgp, DgpConfig::Far1 { d: 15, kappa: 0.3, n: 300, burn_in: 200 });
        assert_eq!(plan.grid.len(), 101);
        assert_eq!(plan.seed, DEFAULT_SEED);
    }

    #[test]
    fn t_alias_sets_n() {
        let inv = parse(&["simulate", "--dgp", "vari11", "--T", "40", "--out", "x.csv"]).unwrap();
        let Plan::Simulate(plan) = inv.plan else { panic!() };
        assert_eq!(plan.dgp, DgpConfig::Vari11 { m: 50, t: 40, n_basis: 21 });
    }

    #[test]
    fn kappa_names_stationarity_bound() {
        let p = problems(&["simulate", "--dgp", "far1", "--kappa", "2.5", "--out", "x.csv"]);
        assert_eq!(p.len(), 1);
        assert!(p[0].contains("stationarity"));
    }

    #[test]
    fn all_violations_listed() {
        let p = problems(&["fit", "--in", "x.csv", "--m", "4", "--p", "9", "--epsilon", "0", "--lower", "2"]);
        assert_eq!(p.len(), 4, "{p:?}");
    }

    #[test]
    fn compare_needs_exactly_one_source() {
        assert!(problems(&["compare", "--p", "2"]).iter().any(|s| s.contains("one of")));
        let p = problems(&["compare", "--p", "2", "--m", "5", "--dgp", "far1", "--in", "x.csv"]);
        assert!(p.iter().any(|s| s.contains("mutually exclusive")));
    }

    #[test]
    fn flags_not_applying_to_dgp_conflict() {
        let p = problems(&["simulate", "--dgp", "far1", "--r", "3", "--out", "x.csv"]);
        assert!(p[0].contains("`r`"));
    }

    #[test]
    fn unknown_flag_is_clap_error() {
        assert!(matches!(parse(&["fit", "--bogus"]), Err(CliError::Clap(_))));
    }

    #[test]
    fn config_file_merges_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"dgp": "far1", "n": 50, "seed": 9, "out": "a.csv"}"#).unwrap();
        let inv = parse(&["simulate", "--config", path.to_str().unwrap(), "--n", "60"]).unwrap();
        let Plan::Simulate(plan) = &inv.plan else { panic!() };
        assert_eq!(plan.seed, 9);
        assert!(matches!(plan.dgp, DgpConfig::Far1 { n: 60, .. }));
        assert_eq!(inv.echo["n"], 60);

        // the echo reproduces the run
        let echo_path = dir.path().join("echo.json");
        std::fs::write(&echo_path, serde_json::to_string(&inv.echo).unwrap()).unwrap();
        let again = parse(&["simulate", "--config", echo_path.to_str().unwrap()]).unwrap();
        assert_eq!(again.plan, inv.plan);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"dgp": "far1", "reps": 3, "out": "a.csv"}"#).unwrap();
        let err = parse(&["simulate", "--config", path.to_str().unwrap()]).unwrap_err();
        assert!(matches!(err, CliError::Invalid(Error::Config(ref p)) if p[0].contains("reps")));
    }

    #[test]
    fn methods_parsed_in_order() {
        let inv = parse(&["compare", "--dgp", "vari11", "--p", "2", "--methods", "gdfpca,fpca,gdfpca"]).unwrap();
        let Plan::Compare(plan) = inv.plan else { panic!() };
        assert_eq!(plan.methods, vec![Method::Gdfpca, Method::Fpca]);
    }
}
