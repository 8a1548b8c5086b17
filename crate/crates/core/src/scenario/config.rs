use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::registry;
use super::ScenarioError;

/// Schema version written to and accepted from config files and reports.
pub const SCHEMA_VERSION: u32 = 1;

/// A config file: a schema version, an optional output section and a list of scenarios.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub format: Option<ReportFormat>,
    pub plots: Option<PathBuf>,
}

/// One scenario as written in a config file. Everything except `name` is optional
/// and falls back to the registry defaults of the family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Built-in family; defaults to `name`.
    pub family: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub resolution: ResolutionOverrides,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub checks: CheckOverrides,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionOverrides {
    pub surface_samples: Option<usize>,
    pub normal_samples: Option<usize>,
    pub ambient_samples: Option<usize>,
    pub march_step: Option<f64>,
    pub horizon: Option<f64>,
    pub quadrature_order: Option<usize>,
    pub ode_steps: Option<usize>,
    pub foot_starts: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub dist_tol: Option<f64>,
    pub cluster_tol: Option<f64>,
    pub pass_tol: Option<f64>,
    pub assign_tol: Option<f64>,
    pub equality_tol: Option<f64>,
    pub reach_rel_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckOverrides {
    pub medial: Option<bool>,
    pub geodesic_probes: Option<usize>,
    pub normal_probes: Option<usize>,
    pub variation_probes: Option<usize>,
    pub variation_depth: Option<f64>,
    pub fd_step: Option<f64>,
    pub defect_probes: Option<usize>,
    pub bottleneck: Option<bool>,
    pub curvature_lower: Option<f64>,
}

/// Fully resolved scenario: family defaults merged with the config overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPlan {
    pub name: String,
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub resolution: Resolution,
    pub tolerances: Tolerances,
    pub checks: Checks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub surface_samples: usize,
    pub normal_samples: usize,
    pub ambient_samples: usize,
    pub march_step: f64,
    /// Normal-collision horizon; `None` uses 4 x the sampled diameter.
    pub horizon: Option<f64>,
    pub quadrature_order: usize,
    /// RK4 steps per geodesic in chart ambients; `None` keeps the default.
    pub ode_steps: Option<usize>,
    pub foot_starts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub dist_tol: f64,
    pub cluster_tol: f64,
    /// Slack allowed on inequalities.
    pub pass_tol: f64,
    /// Distance slack for reach-assigning witnesses.
    pub assign_tol: f64,
    /// Relative tolerance of equality checks.
    pub equality_tol: f64,
    /// Relative tolerance of reach against its analytic value and between methods.
    pub reach_rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub medial: bool,
    pub geodesic_probes: usize,
    pub normal_probes: usize,
    pub variation_probes: usize,
    /// Depth of the second-variation probes as a fraction of the estimated reach.
    pub variation_depth: f64,
    pub fd_step: f64,
    pub defect_probes: usize,
    pub bottleneck: bool,
    /// Curvature lower bound of the ambient; required when it has no constant curvature.
    pub curvature_lower: Option<f64>,
    /// Parameter axis along which `|alpha''| = 1/tau` is expected, for equality scenarios.
    pub equality_axis: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Resolve every scenario against the registry, in config order.
    pub fn plans(&self) -> Result<Vec<ScenarioPlan>, ScenarioError> {
        self.scenarios.iter().map(ScenarioConfig::resolve).collect()
    }
}

impl ScenarioConfig {
    pub fn builtin(name: &str) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn resolve(&self) -> Result<ScenarioPlan, ScenarioError> {
        if self.name.trim().is_empty() {
            return Err(ScenarioError::Config("scenario name must not be empty".into()));
        }
        let family = self.family.clone().unwrap_or_else(|| self.name.clone());
        let mut plan = registry::default_plan(&family)?;
        plan.name = self.name.clone();
        for (k, v) in &self.params {
            match plan.params.get_mut(k) {
                Some(slot) => *slot = *v,
                None => {
                    return Err(ScenarioError::Config(format!("family {family} has no parameter {k:?}")));
                }
            }
        }
        let r = &self.resolution;
        let res = &mut plan.resolution;
        override_with(&mut res.surface_samples, r.surface_samples);
        override_with(&mut res.normal_samples, r.normal_samples);
        override_with(&mut res.ambient_samples, r.ambient_samples);
        override_with(&mut res.march_step, r.march_step);
        override_with(&mut res.quadrature_order, r.quadrature_order);
        override_with(&mut res.foot_starts, r.foot_starts);
        if r.horizon.is_some() {
            res.horizon = r.horizon;
        }
        if r.ode_steps.is_some() {
            res.ode_steps = r.ode_steps;
        }
        let t = &self.tolerances;
        let tol = &mut plan.tolerances;
        override_with(&mut tol.dist_tol, t.dist_tol);
        override_with(&mut tol.cluster_tol, t.cluster_tol);
        override_with(&mut tol.pass_tol, t.pass_tol);
        override_with(&mut tol.assign_tol, t.assign_tol);
        override_with(&mut tol.equality_tol, t.equality_tol);
        override_with(&mut tol.reach_rel_tol, t.reach_rel_tol);
        let c = &self.checks;
        let checks = &mut plan.checks;
        override_with(&mut checks.medial, c.medial);
        override_with(&mut checks.geodesic_probes, c.geodesic_probes);
        override_with(&mut checks.normal_probes, c.normal_probes);
        override_with(&mut checks.variation_probes, c.variation_probes);
        override_with(&mut checks.variation_depth, c.variation_depth);
        override_with(&mut checks.fd_step, c.fd_step);
        override_with(&mut checks.defect_probes, c.defect_probes);
        override_with(&mut checks.bottleneck, c.bottleneck);
        if c.curvature_lower.is_some() {
            checks.curvature_lower = c.curvature_lower;
        }
        plan.validate()?;
        Ok(plan)
    }
}

fn override_with<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn positive(name: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<(), ScenarioError> {
    if v > 0 {
        Ok(())
    } else {
        Err(ScenarioError::Config(format!("{name} must be positive")))
    }
}

impl ScenarioPlan {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let r = &self.resolution;
        nonzero("surface_samples", r.surface_samples)?;
        if r.surface_samples < 2 {
            return Err(ScenarioError::Config("surface_samples must be at least 2".into()));
        }
        nonzero("normal_samples", r.normal_samples)?;
        nonzero("ambient_samples", r.ambient_samples)?;
        nonzero("quadrature_order", r.quadrature_order)?;
        nonzero("foot_starts", r.foot_starts)?;
        positive("march_step", r.march_step)?;
        if let Some(h) = r.horizon {
            positive("horizon", h)?;
        }
        if let Some(s) = r.ode_steps {
            nonzero("ode_steps", s)?;
        }
        let t = &self.tolerances;
        positive("dist_tol", t.dist_tol)?;
        positive("cluster_tol", t.cluster_tol)?;
        positive("pass_tol", t.pass_tol)?;
        positive("assign_tol", t.assign_tol)?;
        positive("equality_tol", t.equality_tol)?;
        positive("reach_rel_tol", t.reach_rel_tol)?;
        let c = &self.checks;
        nonzero("geodesic_probes", c.geodesic_probes)?;
        nonzero("normal_probes", c.normal_probes)?;
        positive("fd_step", c.fd_step)?;
        if !(c.variation_depth > 0.0 && c.variation_depth < 1.0) {
            return Err(ScenarioError::Config(format!(
                "variation_depth must lie in (0, 1), got {}",
                c.variation_depth
            )));
        }
        // the family builder checks its own parameters
        registry::build(self).map(|_| ())
    }
}
