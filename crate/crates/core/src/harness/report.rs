//! Run reports written as `report.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gdpc::GdpcFit;
use crate::metrics::{Method, ReplicationSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Merged settings of the run; valid as a `--config` file.
    pub config: serde_json::Map<String, serde_json::Value>,
}

/// Explained variance and functional MSE of one method at one `p`.
/// For simulation studies these are medians over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub p: usize,
    pub mse: f64,
    pub explained_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTrace {
    pub component: usize,
    pub iterations: usize,
    pub converged: bool,
    pub mse_trace: Vec<f64>,
}

impl ComponentTrace {
    pub fn of(component: usize, fit: &GdpcFit) -> Self {
        Self { component, iterations: fit.iterations, converged: fit.converged, mse_trace: fit.mse_trace.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: RunMetadata,
    pub results: Vec<MethodResult>,
    pub traces: Vec<ComponentTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study: Option<ReplicationSummary>,
}

impl Report {
    /// Fails on the first non-finite number, naming where it sits.
    pub fn check_finite(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Data(format!("non-finite value in report: {what}")));
        for r in &self.results {
            if !r.mse.is_finite() || !r.explained_variance.is_finite() {
                return bad(format!("{} p = {}", r.method.label(), r.p));
            }
        }
        for t in &self.traces {
            if t.mse_trace.iter().any(|v| !v.is_finite()) {
                return bad(format!("trace of component {}", t.component));
            }
        }
        if let Some(study) = &self.study {
            if !study.parameters.epsilon.is_finite() {
                return bad("study epsilon".into());
            }
            for r in &study.records {
                if !r.mse.is_finite() || !r.explained_variance.is_finite() {
                    return bad(format!("replication {} {} p = {}", r.replication, r.method.label(), r.p));
                }
            }
            for s in &study.summaries {
                let q = [s.mse.q1, s.mse.median, s.mse.q3, s.explained_variance.q1, s.explained_variance.median, s.explained_variance.q3];
                if q.iter().any(|v| !v.is_finite()) {
                    return bad(format!("summary {} p = {}", s.method.label(), s.p));
                }
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.check_finite()?;
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}
