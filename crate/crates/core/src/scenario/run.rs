use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioPlan;
use super::registry::{self, Built};
use super::ScenarioError;
use crate::error::Result;
use crate::immersion::{default_steps, Immersion, TangentFrame};
use crate::reach::{
    reach_assigning_points, reach_medial_infimum_with, reach_normal_collision_with, start_params, Classification,
    CollisionConfig, EstimateStatus, FootConfig, MedialConfig, ReachAssigner, ReachEstimate,
};
use crate::variation::{
    check_bottleneck_equality, check_extrinsic_bounds_with, second_variation_check, transport_defect,
    BottleneckReport, BoundConfig, BoundReport, DefectReport, EqualityStatus, VariationReport,
};

/// One pass/fail line of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub scenario: String,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

/// `|alpha''|` along a fixed parameter axis and `|A_eta|` for `eta = alpha'' / |alpha''|`.
#[derive(Clone, Debug, Serialize)]
pub struct EqualityProbe {
    pub param: Vec<f64>,
    pub accel_norm: f64,
    pub shape_norm: f64,
    pub target: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioResult {
    pub name: String,
    pub family: String,
    pub ambient: String,
    pub analytic_reach: Option<f64>,
    pub collision: ReachEstimate,
    pub medial: Option<ReachEstimate>,
    pub assigners: Vec<ReachAssigner>,
    pub bounds: Vec<BoundReport>,
    pub equality: Vec<EqualityProbe>,
    pub variations: Vec<VariationReport>,
    pub bottlenecks: Vec<BottleneckReport>,
    pub defects: Vec<DefectReport>,
    pub checks: Vec<CheckRow>,
    pub pass: bool,
    pub wall_time_s: f64,
}

struct Rows<'a> {
    scenario: &'a str,
    rows: Vec<CheckRow>,
}

impl Rows<'_> {
    fn push(&mut self, check: &str, lhs: f64, rhs: f64, residual: f64, pass: bool) {
        self.rows.push(CheckRow {
            scenario: self.scenario.to_string(),
            check: check.to_string(),
            lhs,
            rhs,
            residual,
            pass,
        });
    }

    /// Worst case of `rhs - lhs >= -tol` over `items`.
    fn inequality(&mut self, check: &str, items: impl Iterator<Item = (f64, f64)>, tol: f64) {
        let worst = items.min_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)));
        if let Some((lhs, rhs)) = worst {
            let residual = rhs - lhs;
            self.push(check, lhs, rhs, residual, residual >= -tol);
        }
    }

    /// Worst case of `|lhs - rhs| <= tol` over `items`.
    fn equality(&mut self, check: &str, items: impl Iterator<Item = (f64, f64)>, tol: f64) {
        let worst = items.max_by(|a, b| (a.0 - a.1).abs().total_cmp(&(b.0 - b.1).abs()));
        if let Some((lhs, rhs)) = worst {
            let residual = lhs - rhs;
            self.push(check, lhs, rhs, residual, residual.abs() <= tol);
        }
    }
}

fn foot_config(plan: &ScenarioPlan) -> FootConfig {
    FootConfig {
        starts: plan.resolution.foot_starts,
        dist_tol: plan.tolerances.dist_tol,
        cluster_tol: plan.tolerances.cluster_tol,
    }
}

fn unit_axis(frame: &TangentFrame, axis: usize) -> DVector<f64> {
    let k = frame.param_dim();
    let w = DVector::from_fn(k, |i, _| if i == axis % k { 1.0 } else { 0.0 });
    let n = frame.norm(&w);
    w / n
}

/// Unit normals for probe `i`: `±nu` in codimension 1, a rotating direction otherwise.
fn probe_normal(frame: &TangentFrame, i: usize) -> DVector<f64> {
    let n = &frame.normals;
    if n.len() == 1 {
        if i.is_multiple_of(2) {
            n[0].clone()
        } else {
            -&n[0]
        }
    } else {
        let a = 0.5 + i as f64;
        &n[0] * a.cos() + &n[1] * a.sin()
    }
}

fn reach_row(rows: &mut Rows, check: &str, est: &ReachEstimate, analytic: Option<f64>, rel: f64) {
    match (est.status, analytic) {
        (EstimateStatus::Converged, Some(tau)) => {
            let residual = (est.tau_hat - tau) / tau;
            rows.push(check, est.tau_hat, tau, residual, residual.abs() <= rel);
        }
        (EstimateStatus::ExceedsHorizon { horizon }, Some(tau)) => {
            let residual = (tau - horizon) / tau;
            rows.push(&format!("{check}_horizon"), horizon, tau, residual, residual >= -rel);
        }
        (EstimateStatus::InsufficientResolution, _) => rows.push(check, 0.0, analytic.unwrap_or(0.0), 0.0, false),
        _ => {}
    }
}

fn equality_probes(imm: &Immersion, params: &[DVector<f64>], axis: usize, tau: f64) -> Result<Vec<EqualityProbe>> {
    let space = imm.space();
    params
        .iter()
        .map(|u| {
            let frame = imm.frame(u)?;
            let w = unit_axis(&frame, axis);
            let accel = frame.second_fundamental(space, &w, &w);
            let accel_norm = space.norm(&frame.point, &accel);
            let shape_norm = if accel_norm > 1e-12 {
                imm.shape_norm_in(&frame, &(&accel / accel_norm)).norm
            } else {
                0.0
            };
            Ok(EqualityProbe {
                param: u.iter().copied().collect(),
                accel_norm,
                shape_norm,
                target: 1.0 / tau,
            })
        })
        .collect()
}

fn variation_probes(imm: &Immersion, plan: &ScenarioPlan, tau: f64) -> Result<Vec<VariationReport>> {
    let c = &plan.checks;
    let params = start_params(imm, c.variation_probes);
    params
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let frame = imm.frame(u)?;
            let eta = probe_normal(&frame, i);
            let w = unit_axis(&frame, i);
            second_variation_check(
                imm,
                u,
                &eta,
                &w,
                c.variation_depth * tau,
                Some(c.fd_step),
                plan.resolution.quadrature_order,
            )
        })
        .collect()
}

fn defect_probes(imm: &Immersion, plan: &ScenarioPlan, est: &ReachEstimate, c: f64) -> Result<Vec<DefectReport>> {
    start_params(imm, plan.checks.defect_probes)
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let frame = imm.frame(u)?;
            let w = unit_axis(&frame, i);
            let alpha = imm.intrinsic_geodesic(u, &w, 1.0, default_steps(1.0))?;
            transport_defect(imm, &alpha, &w, est, c)
        })
        .collect()
}

/// At most one reach-assigning point per classification, in witness order.
fn representatives(assigners: &[ReachAssigner]) -> Vec<&ReachAssigner> {
    let mut out: Vec<&ReachAssigner> = Vec::new();
    for a in assigners {
        if !out.iter().any(|b| b.classification == a.classification) {
            out.push(a);
        }
    }
    out
}

/// Build the scenario, run both reach estimators and every configured check.
pub fn run_scenario(plan: &ScenarioPlan) -> std::result::Result<ScenarioResult, ScenarioError> {
    plan.validate()?;
    let start = Instant::now();
    let Built {
        immersion: imm,
        analytic_reach,
        curvature_lower,
    } = registry::build(plan)?;
    let tol = &plan.tolerances;
    let res = &plan.resolution;
    let checks = &plan.checks;
    let mut rows = Rows {
        scenario: &plan.name,
        rows: Vec::new(),
    };

    let mut ccfg = CollisionConfig::new(&imm, res.surface_samples, res.normal_samples, res.march_step);
    ccfg.horizon = res.horizon;
    ccfg.foot = foot_config(plan);
    let collision = reach_normal_collision_with(&imm, &ccfg)?;
    reach_row(&mut rows, "reach_normal_collision", &collision, analytic_reach, tol.reach_rel_tol);
    let medial = if checks.medial {
        let mut mcfg = MedialConfig::new(&imm, res.ambient_samples);
        mcfg.foot = foot_config(plan);
        let m = reach_medial_infimum_with(&imm, &mcfg)?;
        reach_row(&mut rows, "reach_medial_infimum", &m, analytic_reach, tol.reach_rel_tol);
        if collision.status == EstimateStatus::Converged && m.status == EstimateStatus::Converged {
            let mean = 0.5 * (collision.tau_hat + m.tau_hat);
            let residual = (m.tau_hat - collision.tau_hat) / mean;
            rows.push("reach_agreement", m.tau_hat, collision.tau_hat, residual, residual.abs() <= tol.reach_rel_tol);
        }
        Some(m)
    } else {
        None
    };
    let tau = collision.tau_hat;

    let assigners = if collision.is_bounded() && checks.bottleneck {
        reach_assigning_points(&imm, &collision, tol.assign_tol)?
    } else {
        Vec::new()
    };

    let mut bcfg = BoundConfig::new(checks.geodesic_probes, checks.normal_probes, tol.pass_tol);
    bcfg.c_lower = checks.curvature_lower.or(curvature_lower);
    bcfg.order = res.quadrature_order;
    let bounds = check_extrinsic_bounds_with(&imm, &collision, &bcfg)?;
    rows.inequality("theorem_3_5_pairing", bounds.iter().map(|b| (b.accel_pairing, b.b)), tol.pass_tol);
    rows.inequality(
        "theorem_3_5_accel",
        bounds.iter().filter_map(|b| b.accel_norm.map(|a| (a, b.b))),
        tol.pass_tol,
    );
    rows.inequality("theorem_3_5_shape", bounds.iter().map(|b| (b.shape_norm, b.b)), tol.pass_tol);
    rows.inequality(
        "sharper_bound",
        bounds.iter().filter_map(|b| b.sharper_rhs.map(|r| (b.accel_pairing, r))),
        tol.pass_tol,
    );
    let c_used = bounds.first().map(|b| b.c_lower).unwrap_or(0.0);

    let equality = match checks.equality_axis {
        Some(axis) => {
            let params = start_params(&imm, checks.geodesic_probes);
            let probes = equality_probes(&imm, &params, axis, tau)?;
            let rel = tol.equality_tol / tau;
            rows.equality("theorem_3_5_equality_accel", probes.iter().map(|p| (p.accel_norm, p.target)), rel);
            rows.equality("theorem_3_5_equality_shape", probes.iter().map(|p| (p.shape_norm, p.target)), rel);
            probes
        }
        None => Vec::new(),
    };

    let variations = variation_probes(&imm, plan, tau)?;
    rows.equality(
        "second_variation_fd",
        variations.iter().map(|v| (v.fd.unwrap_or(f64::INFINITY), v.closed)),
        variations.iter().map(|v| v.fd_tol).fold(f64::INFINITY, f64::min),
    );
    rows.inequality("second_variation_nonnegative", variations.iter().map(|v| (0.0, v.closed)), tol.pass_tol);
    if let Some(k) = imm.space().curvature_constant() {
        let exact_tol = if imm.space().is_chart() { 1e-6 } else { 1e-10 };
        rows.equality("curvature_integral", variations.iter().map(|v| (v.integral.value, k / 3.0)), exact_tol);
    }

    let mut bottlenecks = Vec::new();
    for a in representatives(&assigners) {
        let r = check_bottleneck_equality(&imm, a, tol.equality_tol)?;
        match (r.status, r.flat_ambient) {
            (EqualityStatus::Evaluated, true) => {
                rows.equality("bottleneck_equality", std::iter::once((r.lhs, r.rhs)), tol.equality_tol)
            }
            (EqualityStatus::Evaluated, false) => {
                rows.inequality("bottleneck_inequality", std::iter::once((r.lhs, r.rhs)), tol.pass_tol)
            }
            (EqualityStatus::ScanFailure, _) => rows.push("bottleneck_scan", 0.0, 0.0, 0.0, false),
            (EqualityStatus::NotApplicable, _) => {}
        }
        bottlenecks.push(r);
    }

    let defects = if checks.defect_probes > 0 {
        defect_probes(&imm, plan, &collision, c_used)?
    } else {
        Vec::new()
    };
    rows.inequality("transport_defect", defects.iter().map(|d| (d.d.abs(), d.bound)), tol.pass_tol);
    rows.inequality(
        "transport_defect_derivative",
        defects.iter().map(|d| (d.derivative_residual, 1e-4)),
        0.0,
    );

    let checks_out = rows.rows;
    let pass = checks_out.iter().all(|r| r.pass);
    Ok(ScenarioResult {
        name: plan.name.clone(),
        family: plan.family.clone(),
        ambient: format!("{:?}", imm.space().kind()),
        analytic_reach,
        collision,
        medial,
        assigners,
        bounds,
        equality,
        variations,
        bottlenecks,
        defects,
        checks: checks_out,
        pass,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Run every plan; scenarios may run concurrently, results keep config order.
pub fn run_scenarios(plans: &[ScenarioPlan]) -> Vec<std::result::Result<ScenarioResult, ScenarioError>> {
    plans.par_iter().map(run_scenario).collect()
}

impl ScenarioResult {
    /// Classifications of the reach-assigning points found.
    pub fn classifications(&self) -> Vec<Classification> {
        self.assigners.iter().map(|a| a.classification).collect()
    }
}
