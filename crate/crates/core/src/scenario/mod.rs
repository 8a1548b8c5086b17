//! Scenario registry, config loading, orchestration and reports.
//!
//! A config file is TOML with a `schema_version` and a list of `[[scenario]]`
//! tables. Each scenario names a built-in family and may override its
//! parameters, resolutions, tolerances and checks. [`run_scenario`] builds the
//! immersion, estimates the reach both ways, runs the curvature checks and
//! collects one [`CheckRow`] per check.

mod config;
mod plot;
mod registry;
mod report;
mod run;


use thiserror::Error;

use crate::error::GeomError;

pub use config::{
    CheckOverrides, Checks, ConfigFile, OutputConfig, ReportFormat, Resolution, ResolutionOverrides, ScenarioConfig,
    ScenarioPlan, ToleranceOverrides, Tolerances, SCHEMA_VERSION,
};
pub use plot::emit_plots;
pub use registry::{build, default_plan, families, Built, FamilyInfo};
pub use report::{emit_report, render, to_csv, to_json, Report};
pub use run::{run_scenario, run_scenarios, CheckRow, EqualityProbe, ScenarioResult};

/// Failure of a scenario run, with its process exit status.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown scenario: {0}")]
    NotFound(String),
    #[error("numeric error: {0}")]
    Numeric(#[from] GeomError),
    #[error("I/O error: {0}")]
    Io(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) | ScenarioError::NotFound(_) => 2,
            ScenarioError::Numeric(_) => 3,
            ScenarioError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioError::Config(_) => "config",
            ScenarioError::NotFound(_) => "scenario_not_found",
            ScenarioError::Numeric(_) => "numeric",
            ScenarioError::Io(_) => "io",
        }
    }

    /// Machine-readable error record.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
