use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::integral::{curvature_integral, CurvatureIntegral};
use crate::error::{GeomError, Result};
use crate::immersion::{AxisKind, Immersion, IntrinsicCurve, ParamDomain};
use crate::reach::{Classification, ReachAssigner};

/// Samples of the stationary-point scan along the intrinsic geodesic.
const SCAN_SAMPLES: usize = 64;
const INTRINSIC_STEPS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityCase {
    Bottleneck,
    UniqueFootPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityStatus {
    Evaluated,
    /// `alpha'' = 0` along the probe geodesic: nothing to compare.
    NotApplicable,
    /// No stationary point of `s -> d(q, alpha(s))` was bracketed.
    ScanFailure,
}

/// `<alpha''(s0), sigma'(0)>` against `1 - L^2 I` at a reach-assigning point.
#[derive(Clone, Debug, Serialize)]
pub struct BottleneckReport {
    pub case: EqualityCase,
    pub status: EqualityStatus,
    pub q: Vec<f64>,
    /// Arclength of the stationary point along `alpha`.
    pub s0: Option<f64>,
    /// Intrinsic distance between the two foot points (bottleneck case).
    pub geodesic_length: Option<f64>,
    /// `L = d(q, alpha(s0))`.
    pub distance: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub integral: Option<CurvatureIntegral>,
    pub tol: f64,
    pub pass: bool,
    /// Equality is exact only in flat ambients; elsewhere the residual is informational.
    pub flat_ambient: bool,
    /// `L` was constant along `alpha` (continuous foot-point family); `s0` is the midpoint.
    pub constant_distance: bool,
    /// Unique case: the direction is the extremal eigendirection of `A_eta`.
    pub direction_approximates_limit: bool,
    /// Scan of `s -> d(q, alpha(s))` (bottleneck case).
    pub profile_s: Vec<f64>,
    pub profile_distance: Vec<f64>,
}

fn wrapped_difference(dom: &ParamDomain, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.len(), |i, _| {
        let d = a[i] - b[i];
        if dom.axes[i] == AxisKind::Periodic {
            let span = dom.upper[i] - dom.lower[i];
            let r = d.rem_euclid(span);
            if r > 0.5 * span {
                r - span
            } else {
                r
            }
        } else {
            d
        }
    })
}

/// Initial coefficients `w` of the intrinsic geodesic with `u(0) = from`,
/// `u(1) = to`, by Newton shooting from the parameter difference.
pub fn intrinsic_log(imm: &Immersion, from: &DVector<f64>, to: &DVector<f64>) -> Result<DVector<f64>> {
    let dom = imm.domain();
    let k = from.len();
    let residual = |w: &DVector<f64>| -> Result<DVector<f64>> {
        let c = imm.intrinsic_geodesic(from, w, 1.0, INTRINSIC_STEPS)?;
        Ok(wrapped_difference(dom, &c.end().u, to))
    };
    let mut w = wrapped_difference(dom, to, from);
    let mut r = residual(&w)?;
    for _ in 0..40 {
        if r.norm() < 1e-11 {
            return Ok(w);
        }
        let h = 1e-7 * (1.0 + w.norm());
        let mut jac = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut wp = w.clone();
            wp[j] += h;
            jac.set_column(j, &((residual(&wp)? - &r) / h));
        }
        let step = jac.lu().solve(&-&r).ok_or(GeomError::Convergence { residual: r.norm() })?;
        let mut lambda = 1.0;
        loop {
            let cand = &w + &step * lambda;
            if let Ok(rc) = residual(&cand) {
                if rc.norm() < r.norm() {
                    w = cand;
                    r = rc;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return if r.norm() < 1e-8 { Ok(w) } else { Err(GeomError::Convergence { residual: r.norm() }) };
            }
        }
    }
    if r.norm() < 1e-8 {
        Ok(w)
    } else {
        Err(GeomError::Convergence { residual: r.norm() })
    }
}

struct Probe {
    point: DVector<f64>,
    velocity: DVector<f64>,
    coeffs: DVector<f64>,
    u: DVector<f64>,
    log: DVector<f64>,
    distance: f64,
}

impl Probe {
    /// `d/ds d(q, alpha(s)) = -<log_{alpha(s)} q, alpha'(s)> / d`.
    fn slope(&self, imm: &Immersion) -> f64 {
        -imm.space().inner(&self.point, &self.log, &self.velocity) / self.distance
    }
}

fn probe_at(imm: &Immersion, u0: &DVector<f64>, w: &DVector<f64>, s: f64, q: &DVector<f64>) -> Result<Probe> {
    let (u, coeffs) = if s == 0.0 {
        (u0.clone(), w.clone())
    } else {
        let c: IntrinsicCurve = imm.intrinsic_geodesic(u0, w, s, INTRINSIC_STEPS)?;
        (c.end().u.clone(), c.end().du.clone())
    };
    let frame = imm.frame(&u)?;
    let velocity = frame.to_ambient(&coeffs);
    let (distance, log) = imm.space().log_near(&frame.point, q, Some(&(q - &frame.point)))?;
    Ok(Probe {
        point: frame.point,
        velocity,
        coeffs,
        u,
        log,
        distance,
    })
}

/// Evaluate both sides at `alpha(s0)` with `alpha'(s0)` given by `probe`.
fn evaluate(imm: &Immersion, probe: &Probe, order: usize) -> Result<(f64, f64, Option<CurvatureIntegral>, bool)> {
    let space = imm.space();
    let frame = imm.frame(&probe.u)?;
    let accel = frame.second_fundamental(space, &probe.coeffs, &probe.coeffs);
    if space.norm(&frame.point, &accel) < 1e-10 {
        return Ok((0.0, 0.0, None, false));
    }
    let lhs = space.inner(&frame.point, &accel, &probe.log);
    // remove the residual component along sigma' left by the stationary-point solve
    let l2 = space.inner(&frame.point, &probe.log, &probe.log);
    let mut u0 = &probe.velocity - &probe.log * (space.inner(&frame.point, &probe.velocity, &probe.log) / l2);
    u0 /= space.norm(&frame.point, &u0);
    let sigma = space.geodesic_from(&frame.point, &probe.log, 64)?;
    let integral = curvature_integral(space, &sigma, &u0, order)?;
    let rhs = 1.0 - probe.distance * probe.distance * integral.value;
    Ok((lhs, rhs, Some(integral), true))
}

fn report(
    case: EqualityCase,
    q: &DVector<f64>,
    flat: bool,
    tol: f64,
) -> BottleneckReport {
    BottleneckReport {
        case,
        status: EqualityStatus::NotApplicable,
        q: q.iter().copied().collect(),
        s0: None,
        geodesic_length: None,
        distance: 0.0,
        lhs: 0.0,
        rhs: 0.0,
        residual: 0.0,
        integral: None,
        tol,
        pass: false,
        flat_ambient: flat,
        constant_distance: false,
        direction_approximates_limit: false,
        profile_s: Vec::new(),
        profile_distance: Vec::new(),
    }
}

/// Equality check at a reach-assigning point.
///
/// Bottleneck: along the intrinsic geodesic `alpha` between two foot points,
/// the stationary point `s0` of `d(q, alpha(s))` is bracketed on a
/// 64-sample scan of the slope and bisected. Unique foot point: `alpha`
/// starts in the extremal eigendirection of `A_eta`.
pub fn check_bottleneck_equality(imm: &Immersion, assigner: &ReachAssigner, tol: f64) -> Result<BottleneckReport> {
    let space = imm.space();
    let q = assigner.q.coords().clone();
    let flat = space.curvature_constant() == Some(0.0);
    let order = 8;
    let minima = &assigner.foot_points.minimizers;
    if minima.is_empty() {
        return Err(GeomError::ProjectionFailure);
    }
    match assigner.classification {
        Classification::UniqueFootPoint => {
            let mut out = report(EqualityCase::UniqueFootPoint, &q, flat, tol);
            out.direction_approximates_limit = true;
            let u = minima[0].param_vec();
            let frame = imm.frame(&u)?;
            let (d, log) = space.log_near(&frame.point, &q, Some(&(&q - &frame.point)))?;
            let shape = imm.shape_norm_in(&frame, &(&log / d));
            let probe = Probe {
                point: frame.point.clone(),
                velocity: shape.maximizer.clone(),
                coeffs: shape.maximizer_coeffs.clone(),
                u,
                log,
                distance: d,
            };
            let (lhs, rhs, integral, applicable) = evaluate(imm, &probe, order)?;
            out.distance = d;
            out.s0 = Some(0.0);
            if applicable {
                out.status = EqualityStatus::Evaluated;
                out.lhs = lhs;
                out.rhs = rhs;
                out.residual = lhs - rhs;
                out.integral = integral;
                out.pass = (lhs - rhs).abs() <= tol;
            }
            Ok(out)
        }
        Classification::Bottleneck => {
            let mut out = report(EqualityCase::Bottleneck, &q, flat, tol);
            let p = &minima[0];
            let other = minima[1..]
                .iter()
                .max_by(|a, b| {
                    let da = (a.point_vec() - p.point_vec()).norm();
                    let db = (b.point_vec() - p.point_vec()).norm();
                    da.total_cmp(&db)
                })
                .ok_or(GeomError::ProjectionFailure)?;
            let u0 = p.param_vec();
            let w = intrinsic_log(imm, &u0, &other.param_vec())?;
            let frame = imm.frame(&u0)?;
            let len = frame.norm(&w);
            let w = &w / len;
            out.geodesic_length = Some(len);
            let samples: Vec<Probe> = (0..=SCAN_SAMPLES)
                .map(|j| probe_at(imm, &u0, &w, len * j as f64 / SCAN_SAMPLES as f64, &q))
                .collect::<Result<_>>()?;
            let slopes: Vec<f64> = samples.iter().map(|s| s.slope(imm)).collect();
            out.profile_s = (0..=SCAN_SAMPLES).map(|j| len * j as f64 / SCAN_SAMPLES as f64).collect();
            out.profile_distance = samples.iter().map(|s| s.distance).collect();
            let flat_profile = slopes.iter().all(|s| s.abs() <= 1e-8);
            let stationary = if flat_profile {
                out.constant_distance = true;
                Some(samples.into_iter().nth(SCAN_SAMPLES / 2).expect("scan has samples"))
            } else {
                // a maximum of the distance: slope changes from + to -
                let bracket = (0..SCAN_SAMPLES)
                    .filter(|&j| slopes[j] > 0.0 && slopes[j + 1] <= 0.0)
                    .max_by(|&a, &b| samples[a].distance.total_cmp(&samples[b].distance));
                match bracket {
                    None => None,
                    Some(j) => {
                        let (mut lo, mut hi) = (len * j as f64 / SCAN_SAMPLES as f64, len * (j + 1) as f64 / SCAN_SAMPLES as f64);
                        let mut best = probe_at(imm, &u0, &w, hi, &q)?;
                        for _ in 0..50 {
                            let mid = 0.5 * (lo + hi);
                            let pm = probe_at(imm, &u0, &w, mid, &q)?;
                            if pm.slope(imm) > 0.0 {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                            best = pm;
                            if hi - lo < 1e-12 * (1.0 + len) {
                                break;
                            }
                        }
                        out.s0 = Some(0.5 * (lo + hi));
                        Some(best)
                    }
                }
            };
            let Some(probe) = stationary else {
                out.status = EqualityStatus::ScanFailure;
                return Ok(out);
            };
            if out.s0.is_none() {
                out.s0 = Some(0.5 * len);
            }
            out.distance = probe.distance;
            let (lhs, rhs, integral, applicable) = evaluate(imm, &probe, order)?;
            if applicable {
                out.status = EqualityStatus::Evaluated;
                out.lhs = lhs;
                out.rhs = rhs;
                out.residual = lhs - rhs;
                out.integral = integral;
                out.pass = (lhs - rhs).abs() <= tol;
            }
            Ok(out)
        }
    }
}
