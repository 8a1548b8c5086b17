use nalgebra::DVector;
use serde::Serialize;

use super::bounds::bound_b;
use crate::error::{GeomError, Result};
use crate::immersion::{Immersion, IntrinsicCurve};
use crate::reach::ReachEstimate;

const DEFECT_TOL: f64 = 1e-6;
const DERIVATIVE_TOL: f64 = 1e-4;

/// Intrinsic versus ambient parallel transport along a unit-speed curve of length 1.
#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    /// `D = <v^N(1), v^M(1)> - <v0, v0>`.
    pub d: f64,
    /// Arclength samples and `f(s) = <v^M(s), v^N(s)> - <v0, v0>`.
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub tau: f64,
    pub c: f64,
    /// `B(tau, c) = (3 - tau^2 c) / (3 tau)`, the bound used.
    pub bound: f64,
    /// `(3 - tau c) / (3 tau)`, recorded for comparison; differs from `bound` when `c != 0`.
    pub linear_c_bound: f64,
    pub pass: bool,
    /// Largest `|f'(s) - <Pi(alpha', v^M), v^N>|` over interior samples.
    pub derivative_residual: f64,
    pub derivative_pass: bool,
    pub totally_geodesic: bool,
}

/// Transport the unit tangent coefficients `v0` along `alpha` inside `M` and
/// inside `N`, and compare. `c` is the curvature lower bound used in `B`.
pub fn transport_defect(
    imm: &Immersion,
    alpha: &IntrinsicCurve,
    v0: &DVector<f64>,
    estimate: &ReachEstimate,
    c: f64,
) -> Result<DefectReport> {
    if !alpha.unit_speed || (alpha.s_max - 1.0).abs() > 1e-6 {
        return Err(GeomError::Convention(format!(
            "curve must be unit speed with length 1, got length {}",
            alpha.s_max
        )));
    }
    let tau = estimate.tau_hat;
    let bound = bound_b(tau, c)?;
    let linear_c_bound = (3.0 - tau * c) / (3.0 * tau);
    let space = imm.space();
    let frames = imm.curve_frames(alpha)?;
    let v0_norm = frames[0].norm(v0);
    if (v0_norm - 1.0).abs() > 1e-9 {
        return Err(GeomError::InvalidConfiguration(format!("v0 must be unit, |v0| = {v0_norm}")));
    }
    let s: Vec<f64> = alpha.samples.iter().map(|x| x.s).collect();
    let n = s.len();
    let finish = |f: Vec<f64>, derivative_residual: f64, totally_geodesic: bool| {
        let d = *f.last().expect("curve has samples");
        DefectReport {
            d,
            s: s.clone(),
            f,
            tau,
            c,
            bound,
            linear_c_bound,
            pass: d.abs() <= bound + DEFECT_TOL,
            derivative_residual,
            derivative_pass: derivative_residual <= DERIVATIVE_TOL,
            totally_geodesic,
        }
    };
    if imm.is_totally_geodesic(16)? {
        return Ok(finish(vec![0.0; n], 0.0, true));
    }
    let coeffs = imm.intrinsic_transport_field(alpha, v0)?;
    let vm: Vec<DVector<f64>> = frames.iter().zip(&coeffs).map(|(fr, c)| fr.to_ambient(c)).collect();
    let (points, velocities) = imm.curve_ambient(alpha)?;
    let vn = space.transport_along_samples(&points, &velocities, alpha.ds(), &vm[0])?;
    let base = space.inner(&points[0], &vm[0], &vm[0]);
    let f: Vec<f64> = (0..n).map(|i| space.inner(&points[i], &vm[i], &vn[i]) - base).collect();
    let h = alpha.ds();
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let fd = (f[i + 1] - f[i - 1]) / (2.0 * h);
        let pi = frames[i].second_fundamental(space, &alpha.samples[i].du, &coeffs[i]);
        let rhs = space.inner(&points[i], &pi, &vn[i]);
        worst = worst.max((fd - rhs).abs());
    }
    Ok(finish(f, worst, false))
}
