use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, TAU};

use nalgebra::DVector;
use serde::Serialize;

use super::config::{Checks, Resolution, ScenarioPlan, Tolerances};
use super::ScenarioError;
use crate::ambient::{AmbientSpace, ChartMetric};
use crate::immersion::families;
use crate::immersion::{AxisKind, Immersion, ParamDomain};

/// A registry entry as shown by `list`.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: BTreeMap<String, f64>,
}

/// An immersion built from a plan, with what is known about it in closed form.
pub struct Built {
    pub immersion: Immersion,
    pub analytic_reach: Option<f64>,
    /// Curvature lower bound used when the plan declares none.
    pub curvature_lower: Option<f64>,
}

struct Entry {
    name: &'static str,
    description: &'static str,
    params: &'static [(&'static str, f64)],
}

const ENTRIES: &[Entry] = &[
    Entry {
        name: "circle",
        description: "circle of the given radius in the Euclidean plane",
        params: &[("radius", 2.0)],
    },
    Entry {
        name: "ellipse",
        description: "ellipse with semi-axes a, b in the Euclidean plane",
        params: &[("a", 2.0), ("b", 1.0)],
    },
    Entry {
        name: "round-sphere",
        description: "round 2-sphere of the given radius in Euclidean 3-space",
        params: &[("radius", 1.0)],
    },
    Entry {
        name: "torus",
        description: "torus of revolution with radii major > minor in Euclidean 3-space",
        params: &[("major", 2.0), ("minor", 0.5)],
    },
    Entry {
        name: "great-circle-on-sphere",
        description: "equator of the round 2-sphere",
        params: &[("sphere_radius", 1.0)],
    },
    Entry {
        name: "small-circle-on-sphere",
        description: "circle of the given colatitude on the round 2-sphere",
        params: &[("sphere_radius", 1.0), ("colatitude", FRAC_PI_3)],
    },
    Entry {
        name: "hyperbolic-circle",
        description: "geodesic circle in the hyperbolic plane of curvature c < 0",
        params: &[("curvature", -1.0), ("radius", 1.0)],
    },
    Entry {
        name: "geodesic-on-chart-sphere-metric",
        description: "tilted great circle of the unit sphere in the stereographic chart metric",
        params: &[("tilt", FRAC_PI_4)],
    },
    Entry {
        name: "space-circle",
        description: "circle of the given radius in Euclidean 3-space (codimension 2)",
        params: &[("radius", 1.0)],
    },
    Entry {
        name: "circle-in-conformal-bump",
        description: "coordinate circle in the conformally perturbed flat metric exp(2 a exp(-|x|^2))",
        params: &[("amplitude", 0.1), ("radius", 0.8)],
    },
];

pub fn families() -> Vec<FamilyInfo> {
    ENTRIES
        .iter()
        .map(|e| FamilyInfo {
            name: e.name,
            description: e.description,
            params: params_of(e),
        })
        .collect()
}

fn params_of(e: &Entry) -> BTreeMap<String, f64> {
    e.params.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Registry defaults for `family`.
pub fn default_plan(family: &str) -> Result<ScenarioPlan, ScenarioError> {
    let entry = ENTRIES
        .iter()
        .find(|e| e.name == family)
        .ok_or_else(|| ScenarioError::NotFound(family.to_string()))?;
    let mut plan = ScenarioPlan {
        name: family.to_string(),
        family: family.to_string(),
        params: params_of(entry),
        resolution: Resolution {
            surface_samples: 16,
            normal_samples: 8,
            ambient_samples: 256,
            march_step: 0.05,
            horizon: None,
            quadrature_order: 8,
            ode_steps: None,
            foot_starts: 8,
        },
        tolerances: Tolerances {
            dist_tol: 1e-9,
            cluster_tol: 1e-3,
            pass_tol: 1e-6,
            assign_tol: 1e-6,
            equality_tol: 1e-3,
            reach_rel_tol: 0.02,
        },
        checks: Checks {
            medial: true,
            geodesic_probes: 8,
            normal_probes: 2,
            variation_probes: 4,
            variation_depth: 0.5,
            fd_step: 1e-3,
            defect_probes: 2,
            bottleneck: true,
            curvature_lower: None,
            equality_axis: None,
        },
    };
    let (res, checks) = (&mut plan.resolution, &mut plan.checks);
    match family {
        "circle" | "space-circle" => checks.equality_axis = Some(0),
        "ellipse" => res.surface_samples = 32,
        "round-sphere" => {
            res.surface_samples = 8;
            res.foot_starts = 16;
            checks.equality_axis = Some(0);
        }
        "torus" => {
            res.surface_samples = 8;
            res.foot_starts = 16;
            checks.equality_axis = Some(0);
        }
        "geodesic-on-chart-sphere-metric" => {
            res.surface_samples = 3;
            res.march_step = 0.3;
            res.horizon = Some(1.2);
            res.ode_steps = Some(64);
            plan.tolerances.dist_tol = 1e-7;
            checks.medial = false;
            checks.geodesic_probes = 4;
            checks.variation_probes = 2;
            checks.defect_probes = 1;
        }
        "circle-in-conformal-bump" => {
            res.surface_samples = 4;
            res.march_step = 0.1;
            res.horizon = Some(1.2);
            res.ode_steps = Some(64);
            plan.tolerances.dist_tol = 1e-7;
            checks.medial = false;
            checks.geodesic_probes = 4;
            checks.variation_probes = 2;
            checks.defect_probes = 1;
        }
        _ => {}
    }
    Ok(plan)
}

fn param(plan: &ScenarioPlan, key: &str) -> f64 {
    plan.params[key]
}

fn require(ok: bool, what: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::Config(what.to_string()))
    }
}

/// Build the immersion of `plan` and its closed-form reach, if known.
pub fn build(plan: &ScenarioPlan) -> Result<Built, ScenarioError> {
    if !ENTRIES.iter().any(|e| e.name == plan.family) {
        return Err(ScenarioError::NotFound(plan.family.clone()));
    }
    for (k, v) in &plan.params {
        require(v.is_finite(), &format!("parameter {k} must be finite"))?;
    }
    let mut curvature_lower = None;
    let (immersion, analytic_reach) = match plan.family.as_str() {
        "circle" => {
            let r = param(plan, "radius");
            require(r > 0.0, "radius must be positive")?;
            (families::circle(r), Some(r))
        }
        "ellipse" => {
            let (a, b) = (param(plan, "a"), param(plan, "b"));
            require(a > 0.0 && b > 0.0, "semi-axes must be positive")?;
            let (lo, hi) = (a.min(b), a.max(b));
            (families::ellipse(a, b), Some(lo * lo / hi))
        }
        "round-sphere" => {
            let r = param(plan, "radius");
            require(r > 0.0, "radius must be positive")?;
            (families::round_sphere(r), Some(r))
        }
        "torus" => {
            let (big, small) = (param(plan, "major"), param(plan, "minor"));
            require(big > small && small > 0.0, "torus radii need major > minor > 0")?;
            (families::torus(big, small), Some(small.min(big - small)))
        }
        "great-circle-on-sphere" => {
            let r = param(plan, "sphere_radius");
            require(r > 0.0, "sphere_radius must be positive")?;
            (families::equator(r), Some(r * FRAC_PI_2))
        }
        "small-circle-on-sphere" => {
            let (r, rho) = (param(plan, "sphere_radius"), param(plan, "colatitude"));
            require(r > 0.0, "sphere_radius must be positive")?;
            require(rho > 0.0 && rho < PI, "colatitude must lie in (0, pi)")?;
            (families::sphere_latitude(r, rho), Some(r * rho.min(PI - rho)))
        }
        "hyperbolic-circle" => {
            let (c, rho) = (param(plan, "curvature"), param(plan, "radius"));
            require(c < 0.0, "curvature must be negative")?;
            require(rho > 0.0, "radius must be positive")?;
            (families::hyperbolic_circle(c, rho), Some(rho))
        }
        "geodesic-on-chart-sphere-metric" => {
            let tilt = param(plan, "tilt");
            require(tilt > 0.0 && tilt < FRAC_PI_2, "tilt must lie in (0, pi/2)")?;
            (families::chart_great_circle(tilt), Some(FRAC_PI_2))
        }
        "space-circle" => {
            let r = param(plan, "radius");
            require(r > 0.0, "radius must be positive")?;
            (families::space_circle(r), Some(r))
        }
        "circle-in-conformal-bump" => {
            let (a, r) = (param(plan, "amplitude"), param(plan, "radius"));
            require(a.abs() <= 1.0, "amplitude must lie in [-1, 1]")?;
            require(r > 0.0 && r < 10.0, "radius must lie in (0, 10)")?;
            // kappa = 4 a exp(-2 phi) exp(-|x|^2) (1 - |x|^2) with |phi| <= |a|
            curvature_lower = Some(-4.0 * a.abs() * (2.0 * a.abs()).exp());
            (bump_circle(a, r), None)
        }
        other => return Err(ScenarioError::NotFound(other.to_string())),
    };
    let immersion = match plan.resolution.ode_steps {
        Some(steps) => immersion.with_ode_steps(steps),
        None => immersion,
    };
    Ok(Built {
        immersion,
        analytic_reach,
        curvature_lower,
    })
}

fn bump_circle(amplitude: f64, r: f64) -> Immersion {
    Immersion::new(
        "circle-in-conformal-bump",
        AmbientSpace::chart(2, ChartMetric::ConformalBump { amplitude }, 50.0),
        ParamDomain::new(vec![0.0], vec![TAU], vec![AxisKind::Periodic]),
        move |u| DVector::from_column_slice(&[r * u[0].cos(), r * u[0].sin()]),
    )
}
