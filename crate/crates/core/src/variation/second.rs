use nalgebra::DVector;
use serde::Serialize;

use super::integral::{curvature_integral, CurvatureIntegral};
use crate::ambient::{AmbientSpace, GeodesicPath, Point};
use crate::error::{GeomError, Result};
use crate::immersion::Immersion;
use crate::reach::{foot_points, FootConfig};

/// Polygon resolution of the explicit variation (Richardson pair `N`, `2N`).
const CHI_NODES: usize = 128;

/// `L''(0)` in closed form, with the finite-difference cross-check when available.
#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    pub tau: f64,
    pub integral: CurvatureIntegral,
    /// `<eta, alpha''(0)>`.
    pub accel_pairing: f64,
    pub closed: f64,
    pub fd: Option<f64>,
    pub h: f64,
    /// Agreement tolerance `max(1e-3, 10 h^2)`.
    pub fd_tol: f64,
    pub agrees: Option<bool>,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(GeomError::InvalidReach(tau))
    }
}

/// `1/tau - tau I - <eta, alpha''(0)>`.
pub fn second_variation_closed(tau: f64, integral: &CurvatureIntegral, accel_pairing: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(1.0 / tau - tau * integral.value - accel_pairing)
}

/// `sigma(t) = exp_p(t tau eta)` on `[0, 1]`.
pub fn normal_geodesic(space: &AmbientSpace, p: &DVector<f64>, eta: &DVector<f64>, tau: f64, steps: usize) -> Result<GeodesicPath> {
    space.geodesic_from(p, &(eta * tau), steps)
}

fn segment(space: &AmbientSpace, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if space.is_chart() {
        let mid = (a + b) * 0.5;
        Ok(space.norm(&mid, &(b - a)))
    } else {
        space.distance(a, b)
    }
}

/// Length of `t -> exp_{sigma(t)}((1 - t) P_t W)` with `W = log_p(a)`: a curve
/// from `a` to `q` whose variation field in `a` is `(1 - t) U(t)`.
fn chi_length(space: &AmbientSpace, p: &DVector<f64>, eta: &DVector<f64>, tau: f64, a: &DVector<f64>, nodes: usize) -> Result<f64> {
    let w = if a == p {
        DVector::zeros(p.len())
    } else {
        space.log_near(p, a, Some(&(a - p)))?.1
    };
    let sigma = normal_geodesic(space, p, eta, tau, nodes)?;
    let field = space.transport_field(&sigma, &w)?;
    let mut points = Vec::with_capacity(nodes + 1);
    for (s, pw) in sigma.samples.iter().zip(&field) {
        points.push(space.exp(&s.point, &(pw * (1.0 - s.t)))?);
    }
    let mut len = 0.0;
    for pair in points.windows(2) {
        len += segment(space, &pair[0], &pair[1])?;
    }
    Ok(len)
}

fn chi_length_extrapolated(space: &AmbientSpace, p: &DVector<f64>, eta: &DVector<f64>, tau: f64, a: &DVector<f64>) -> Result<f64> {
    let coarse = chi_length(space, p, eta, tau, a, CHI_NODES)?;
    let fine = chi_length(space, p, eta, tau, a, 2 * CHI_NODES)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Central second difference `(L(h) - 2 L(0) + L(-h)) / h^2` of the length of
/// an explicit variation from `alpha(s)` to `q = exp_p(tau eta)` with variation
/// field `(1 - t) U(t)`, where `alpha` is the intrinsic geodesic of `M` from
/// `p = F(u)` with initial coefficients `w`.
pub fn second_variation_fd(
    imm: &Immersion,
    u: &DVector<f64>,
    eta: &DVector<f64>,
    w: &DVector<f64>,
    tau: f64,
    h: f64,
) -> Result<f64> {
    check_tau(tau)?;
    if !(h > 0.0) {
        return Err(GeomError::InvalidConfiguration("finite-difference step must be positive".into()));
    }
    let space = imm.space();
    let p = imm.eval(u);
    let q = space.exp(&p, &(eta * tau))?;
    let cfg = FootConfig::for_dim(imm.param_dim());
    let set = foot_points(imm, &Point(q), cfg.starts, cfg.dist_tol, cfg.cluster_tol)?;
    let foot = &set.minimizers[0];
    if set.multiplicity() != 1 || space.distance(&foot.point_vec(), &p).unwrap_or(f64::INFINITY) > 1e-6 {
        return Err(GeomError::InvalidConfiguration(
            "exp_p(tau eta) does not have p as its unique foot point".into(),
        ));
    }
    let ahead = imm.intrinsic_geodesic(u, w, h, 16)?;
    let behind = imm.intrinsic_geodesic(u, &-w, h, 16)?;
    let a_plus = imm.eval(&ahead.end().u);
    let a_minus = imm.eval(&behind.end().u);
    let l_plus = chi_length_extrapolated(space, &p, eta, tau, &a_plus)?;
    let l_zero = chi_length_extrapolated(space, &p, eta, tau, &p)?;
    let l_minus = chi_length_extrapolated(space, &p, eta, tau, &a_minus)?;
    Ok((l_plus - 2.0 * l_zero + l_minus) / (h * h))
}

/// Closed-form `L''(0)` at `p = F(u)` for the unit normal `eta` and unit
/// tangent coefficients `w`, optionally cross-checked by finite differences.
pub fn second_variation_check(
    imm: &Immersion,
    u: &DVector<f64>,
    eta: &DVector<f64>,
    w: &DVector<f64>,
    tau: f64,
    h: Option<f64>,
    order: usize,
) -> Result<VariationReport> {
    check_tau(tau)?;
    let space = imm.space();
    let frame = imm.frame(u)?;
    let u0 = frame.to_ambient(w);
    let sigma = normal_geodesic(space, &frame.point, eta, tau, 64)?;
    let integral = curvature_integral(space, &sigma, &u0, order)?;
    let accel = frame.second_fundamental(space, w, w);
    let accel_pairing = space.inner(&frame.point, eta, &accel);
    let closed = second_variation_closed(tau, &integral, accel_pairing)?;
    let step = h.unwrap_or(1e-3);
    let fd_tol = 1e-3_f64.max(10.0 * step * step);
    let fd = match h {
        Some(h) => Some(second_variation_fd(imm, u, eta, w, tau, h)?),
        None => None,
    };
    Ok(VariationReport {
        tau,
        integral,
        accel_pairing,
        closed,
        fd,
        h: step,
        fd_tol,
        agrees: fd.map(|f| (f - closed).abs() <= fd_tol),
    })
}
