use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::integral::curvature_integral;
use super::second::normal_geodesic;
use crate::error::{GeomError, Result};
use crate::immersion::{Immersion, TangentFrame};
use crate::numeric::halton;
use crate::reach::{start_params, ReachEstimate};

/// `B(tau, c) = (3 - tau^2 c) / (3 tau)`.
pub fn bound_b(tau: f64, c: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(GeomError::InvalidReach(tau));
    }
    Ok((3.0 - tau * tau * c) / (3.0 * tau))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConfig {
    /// Sampled points of `M`, each with one unit tangent direction.
    pub geodesic_probes: usize,
    /// Unit normals per point.
    pub normal_probes: usize,
    pub tol: f64,
    /// Curvature lower bound of `N`; required for charts without constant curvature.
    pub c_lower: Option<f64>,
    /// Gauss-Legendre order of the curvature integral (nonconstant curvature only).
    pub order: usize,
}

impl BoundConfig {
    pub fn new(geodesic_probes: usize, normal_probes: usize, tol: f64) -> Self {
        BoundConfig {
            geodesic_probes,
            normal_probes,
            tol,
            c_lower: None,
            order: 8,
        }
    }
}

/// One probe `(p, alpha'(0), eta)` checked against `B(tau, c)`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub tau: f64,
    pub c_lower: f64,
    pub b: f64,
    pub param: Vec<f64>,
    pub point: Vec<f64>,
    pub eta: Vec<f64>,
    pub direction: Vec<f64>,
    /// `<alpha''(0), eta>`.
    pub accel_pairing: f64,
    /// `|alpha''(0)|`; `None` when `alpha''(0) = 0` (check not applicable).
    pub accel_norm: Option<f64>,
    /// `|A_eta|`.
    pub shape_norm: f64,
    pub residual_pairing: f64,
    pub residual_accel: Option<f64>,
    pub residual_shape: f64,
    pub pass_pairing: bool,
    pub pass_accel: Option<bool>,
    pub pass_shape: bool,
    /// `1/tau - tau I` along this probe's normal geodesic (nonconstant curvature only).
    pub sharper_rhs: Option<f64>,
    pub sharper_residual: Option<f64>,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.pass_pairing && self.pass_shape && self.pass_accel.unwrap_or(true)
    }
}

pub fn check_extrinsic_bounds(
    imm: &Immersion,
    estimate: &ReachEstimate,
    geodesic_probes: usize,
    normal_probes: usize,
    tol: f64,
) -> Result<Vec<BoundReport>> {
    check_extrinsic_bounds_with(imm, estimate, &BoundConfig::new(geodesic_probes, normal_probes, tol))
}

/// Unit tangent coefficients from a point of `[0, 1]^k`, orthonormal in the induced metric.
fn unit_direction(frame: &TangentFrame, sample: &[f64]) -> DVector<f64> {
    let k = frame.param_dim();
    let mut y = DVector::from_fn(k, |i, _| 2.0 * sample[i] - 1.0);
    if y.norm() < 1e-9 {
        y = DVector::from_fn(k, |i, _| if i == 0 { 1.0 } else { 0.0 });
    }
    y /= y.norm();
    let l = frame.metric.clone().cholesky().expect("frame metric is SPD").l();
    let linv_t = l.try_inverse().expect("triangular factor is invertible").transpose();
    linv_t * y
}

fn unit_normals(frame: &TangentFrame, count: usize) -> Vec<DVector<f64>> {
    match frame.normals.len() {
        0 => Vec::new(),
        1 if count >= 2 => vec![frame.normals[0].clone(), -&frame.normals[0]],
        1 => vec![frame.normals[0].clone()],
        _ => (0..count.max(1))
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / count.max(1) as f64;
                &frame.normals[0] * a.cos() + &frame.normals[1] * a.sin()
            })
            .collect(),
    }
}

pub fn check_extrinsic_bounds_with(imm: &Immersion, estimate: &ReachEstimate, cfg: &BoundConfig) -> Result<Vec<BoundReport>> {
    let tau = estimate.tau_hat;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(GeomError::InvalidReach(tau));
    }
    if cfg.geodesic_probes == 0 || cfg.normal_probes == 0 || !(cfg.tol >= 0.0) {
        return Err(GeomError::InvalidConfiguration("bound checks need probes and a nonnegative tolerance".into()));
    }
    let space = imm.space();
    let constant = space.curvature_constant();
    let c = match (cfg.c_lower, constant) {
        (Some(c), Some(k)) if c > k + 1e-12 => {
            return Err(GeomError::InvalidConfiguration(format!(
                "declared curvature bound {c} exceeds the ambient curvature {k}"
            )))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => {
            return Err(GeomError::InvalidConfiguration(
                "a curvature lower bound must be declared for this ambient".into(),
            ))
        }
    };
    let b = bound_b(tau, c)?;
    let k = imm.param_dim();
    let params = start_params(imm, cfg.geodesic_probes);
    let probes: Vec<Result<Vec<BoundReport>>> = params
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let frame = imm.frame(u)?;
            let x = &frame.point;
            let w = unit_direction(&frame, &halton(i + 1, k + 2)[2..]);
            let dir = frame.to_ambient(&w);
            let accel = frame.second_fundamental(space, &w, &w);
            let accel_len = space.norm(x, &accel);
            let mut out = Vec::new();
            for eta in unit_normals(&frame, cfg.normal_probes) {
                if constant.is_none() {
                    // a declared bound is verified on the probed planes
                    let kappa = space.sectional_curvature_at(x, &dir, &eta)?;
                    if kappa < c - 1e-8 {
                        return Err(GeomError::InvalidConfiguration(format!(
                            "declared curvature bound {c} exceeds sampled curvature {kappa}"
                        )));
                    }
                }
                let pairing = space.inner(x, &accel, &eta);
                let shape = imm.shape_norm_in(&frame, &eta).norm;
                let accel_norm = (accel_len > 1e-12).then_some(accel_len);
                let sharper_rhs = if constant.is_none() {
                    let sigma = normal_geodesic(space, x, &eta, tau, 64)?;
                    let integral = curvature_integral(space, &sigma, &dir, cfg.order)?;
                    Some(1.0 / tau - tau * integral.value)
                } else {
                    None
                };
                let residual_accel = accel_norm.map(|a| b - a);
                out.push(BoundReport {
                    tau,
                    c_lower: c,
                    b,
                    param: u.iter().copied().collect(),
                    point: x.iter().copied().collect(),
                    eta: eta.iter().copied().collect(),
                    direction: dir.iter().copied().collect(),
                    accel_pairing: pairing,
                    accel_norm,
                    shape_norm: shape,
                    residual_pairing: b - pairing,
                    residual_accel,
                    residual_shape: b - shape,
                    pass_pairing: b - pairing >= -cfg.tol,
                    pass_accel: residual_accel.map(|r| r >= -cfg.tol),
                    pass_shape: b - shape >= -cfg.tol,
                    sharper_rhs,
                    sharper_residual: sharper_rhs.map(|r| r - pairing),
                });
            }
            Ok(out)
        })
        .collect();
    let mut reports = Vec::new();
    for p in probes {
        reports.extend(p?);
    }
    Ok(reports)
}
