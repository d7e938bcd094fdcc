//! Experiment orchestration behind the command-line tool: config files,
//! running a mechanism over a query file, oracle comparison and reports.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod report;

use std::path::Path;

use serde_json::json;
use thiserror::Error;

use crate::embedding::EmbeddingError;
use crate::engine::EngineError;
use crate::learner::LearnerError;
use crate::metric::{MetricError, MetricSpec, Point};
use crate::release::ReleaseError;

pub use compare::{compare, read_values, ErrorStats};
pub use config::{ExperimentConfig, ProjectionConfig};
pub use experiment::{run_experiment, Experiment, Mechanism, Outcome};
pub use report::{Record, Report};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("answer stream has {answers} entries but oracle has {oracle}")]
    LengthMismatch { answers: usize, oracle: usize },
    #[error("max error {max} exceeds bound {bound}")]
    Threshold { max: f64, bound: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Release(#[from] ReleaseError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

fn engine_error(e: &HarnessError) -> Option<&EngineError> {
    match e {
        HarnessError::Engine(e)
        | HarnessError::Release(ReleaseError::Engine(e))
        | HarnessError::Embedding(EmbeddingError::Release(ReleaseError::Engine(e))) => Some(e),
        _ => None,
    }
}

impl HarnessError {
    pub fn is_infeasible(&self) -> bool {
        matches!(engine_error(self), Some(EngineError::Infeasible { .. }))
    }

    /// 2 validation, 3 infeasible calibration, 4 accuracy threshold.
    pub fn exit_code(&self) -> i32 {
        if self.is_infeasible() {
            3
        } else if matches!(self, HarnessError::Threshold { .. }) {
            4
        } else {
            2
        }
    }

    pub fn kind(&self) -> &'static str {
        if self.is_infeasible() {
            return "infeasible";
        }
        match self {
            HarnessError::Io { .. } => "io",
            HarnessError::Config(_) => "config",
            HarnessError::LengthMismatch { .. } => "length_mismatch",
            HarnessError::Threshold { .. } => "threshold",
            _ => "validation",
        }
    }

    /// Machine-readable form written to stderr by the CLI.
    pub fn to_json(&self) -> String {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let Some(EngineError::Infeasible { minimal_alpha, .. }) = engine_error(self) {
            body["minimal_alpha"] = json!(minimal_alpha);
        }
        json!({ "error": body }).to_string()
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads a points file; parse errors carry the file name and line.
pub fn load_points(path: &Path) -> Result<Vec<Point>> {
    let text = read_file(path)?;
    crate::io::parse_points(&text).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_metric(path: &Path, check_triangle: bool) -> Result<MetricSpec> {
    let text = read_file(path)?;
    crate::io::parse_matrix(&text, check_triangle).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
