use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{ReportFormat, ScenarioPlan, SCHEMA_VERSION};
use super::run::{CheckRow, ScenarioResult};
use super::ScenarioError;

/// The JSON report document.
#[derive(Serialize)]
pub struct Report<'a> {
    pub schema_version: u32,
    pub generator: String,
    pub config: &'a [ScenarioPlan],
    pub results: &'a [ScenarioResult],
}

impl<'a> Report<'a> {
    pub fn new(config: &'a [ScenarioPlan], results: &'a [ScenarioResult]) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            generator: format!("reachkit {}", env!("CARGO_PKG_VERSION")),
            config,
            results,
        }
    }
}

pub fn to_json(config: &[ScenarioPlan], results: &[ScenarioResult]) -> Result<String, ScenarioError> {
    serde_json::to_string_pretty(&Report::new(config, results)).map_err(|e| ScenarioError::Io(e.to_string()))
}

/// One row per check: `scenario,check,lhs,rhs,residual,pass`.
pub fn to_csv(results: &[ScenarioResult]) -> Result<String, ScenarioError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| ScenarioError::Io(e.to_string());
    w.write_record(["scenario", "check", "lhs", "rhs", "residual", "pass"]).map_err(io)?;
    for row in results.iter().flat_map(|r| &r.checks) {
        let CheckRow {
            scenario,
            check,
            lhs,
            rhs,
            residual,
            pass,
        } = row;
        w.write_record([
            scenario.clone(),
            check.clone(),
            lhs.to_string(),
            rhs.to_string(),
            residual.to_string(),
            pass.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| ScenarioError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ScenarioError::Io(e.to_string()))
}

pub fn render(config: &[ScenarioPlan], results: &[ScenarioResult], format: ReportFormat) -> Result<String, ScenarioError> {
    match format {
        ReportFormat::Json => to_json(config, results),
        ReportFormat::Csv => to_csv(results),
    }
}

/// Write the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(
    config: &[ScenarioPlan],
    results: &[ScenarioResult],
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<(), ScenarioError> {
    let text = render(config, results, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| ScenarioError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| ScenarioError::Io(e.to_string()))
        }
    }
}
