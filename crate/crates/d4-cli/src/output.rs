//! Errors, exit codes and writers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use d4_core::error::{EngineError, ExperimentError, ModelError, PrepError};
use d4_core::experiments::ExperimentReport;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resource(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Resource(_) => "resource",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Resource(m) | CliError::Internal(m) => m,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "exit_code": self.exit_code(), "message": self.message() }
        })
        .to_string()
    }
}

fn engine(e: &EngineError) -> CliError {
    match e {
        EngineError::RegisterOverflow { .. } | EngineError::SupportOverflow { .. } => CliError::Resource(e.to_string()),
        EngineError::ImpossibleOutcome(_) => CliError::Usage(e.to_string()),
        _ => CliError::Internal(e.to_string()),
    }
}

fn model(e: &ModelError) -> CliError {
    match e {
        ModelError::Engine(x) => engine(x),
        _ => CliError::Usage(e.to_string()),
    }
}

fn prep(e: &PrepError) -> CliError {
    match e {
        PrepError::Engine(x) => engine(x),
        PrepError::Model(x) => model(x),
        PrepError::Noise(_) => CliError::Usage(e.to_string()),
        PrepError::HeraldedDiscard(_) => CliError::Internal(e.to_string()),
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match &e {
            ExperimentError::Engine(x) => engine(x),
            ExperimentError::Model(x) => model(x),
            ExperimentError::Prep(x) => prep(x),
            ExperimentError::OutOfRange(_) => CliError::Usage(e.to_string()),
            ExperimentError::ConstraintViolation(_) | ExperimentError::ZeroNormState => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        model(&e)
    }
}

impl From<PrepError> for CliError {
    fn from(e: PrepError) -> Self {
        prep(&e)
    }
}

impl From<d4_core::error::LatticeError> for CliError {
    fn from(e: d4_core::error::LatticeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Pretty JSON to `path`, or stdout.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Resource(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Resource(e.to_string())),
    }
}

/// One row per report: id, sector, every star, triangle and logical, then
/// energy density and pinning.
pub fn write_csv(reports: &[ExperimentReport], path: &Path) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Resource(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let Some(first) = reports.first() else {
        return w.flush().map_err(|e| CliError::Resource(e.to_string()));
    };
    let mut header = vec![String::from("experiment"), String::from("sector")];
    header.extend((0..first.stars.len()).map(|s| format!("A{s}")));
    header.extend((0..first.triangles.len()).map(|t| format!("B{t}")));
    header.extend(first.logicals.iter().map(|l| l.label.clone()));
    header.extend(["energy_density", "pinning"].map(String::from));
    let sampled = reports.iter().any(|r| r.stars.iter().any(|e| e.sem > 0.0));
    if sampled {
        header.extend((0..first.stars.len()).map(|s| format!("A{s}_sem")));
        header.extend((0..first.triangles.len()).map(|t| format!("B{t}_sem")));
    }
    w.write_record(&header).map_err(io)?;
    for r in reports {
        let mut row = vec![r.experiment.clone(), r.sector.map(|s| s.bit_string()).unwrap_or_default()];
        row.extend(r.stars.iter().chain(&r.triangles).map(|e| e.mean.to_string()));
        row.extend(r.logicals.iter().map(|l| l.value.mean.to_string()));
        row.push(r.energy_density().to_string());
        row.push(r.scalar("pinning").map(|p| p.to_string()).unwrap_or_default());
        if sampled {
            row.extend(r.stars.iter().chain(&r.triangles).map(|e| e.sem.to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Resource(e.to_string()))
}
