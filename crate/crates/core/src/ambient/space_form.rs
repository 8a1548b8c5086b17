//! Closed-form geometry of the embedded space-form models.

use nalgebra::DVector;

use super::{AmbientKind, AmbientSpace, GeodesicPath};
use crate::error::{GeomError, Result};

/// Antipodal pairs closer than this angle to `pi` are rejected.
const ANTIPODAL_GUARD: f64 = 1e-7;

pub(super) fn minkowski(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    -a[0] * b[0] + a.rows(1, a.len() - 1).dot(&b.rows(1, b.len() - 1))
}

/// `(sigma(t), sigma'(t))` for `sigma(t) = exp_x(t v)`.
pub(super) fn point_at(
    space: &AmbientSpace,
    x: &DVector<f64>,
    v: &DVector<f64>,
    t: f64,
) -> (DVector<f64>, DVector<f64>) {
    match space.kind() {
        AmbientKind::Sphere { radius, .. } => {
            let s = v.norm();
            if s == 0.0 {
                return (x.clone(), v.clone());
            }
            let th = t * s / radius;
            let (sn, cs) = th.sin_cos();
            (x * cs + v * (radius * sn / s), x * (-s / radius * sn) + v * cs)
        }
        AmbientKind::Hyperbolic { curvature, .. } => {
            let k = 1.0 / (-curvature).sqrt();
            let s = minkowski(v, v).max(0.0).sqrt();
            if s == 0.0 {
                return (x.clone(), v.clone());
            }
            let th = t * s / k;
            let (sh, ch) = (th.sinh(), th.cosh());
            (x * ch + v * (k * sh / s), x * (s / k * sh) + v * ch)
        }
        _ => (x + v * t, v.clone()),
    }
}

pub(super) fn log(
    space: &AmbientSpace,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    match space.kind() {
        AmbientKind::Sphere { radius, .. } => {
            let r2 = radius * radius;
            let cosang = p.dot(q) / r2;
            let w = q - p * cosang;
            let wn = w.norm();
            let theta = (wn / radius).atan2(cosang);
            if theta > std::f64::consts::PI - ANTIPODAL_GUARD {
                return Err(GeomError::NonUniqueGeodesic(
                    "antipodal points on the sphere".into(),
                ));
            }
            if wn == 0.0 {
                return Ok((0.0, DVector::zeros(p.len())));
            }
            let d = radius * theta;
            Ok((d, w * (d / wn)))
        }
        AmbientKind::Hyperbolic { curvature, .. } => {
            let k = 1.0 / (-curvature).sqrt();
            let ch = -minkowski(p, q) / (k * k);
            let w = q - p * ch;
            let wn = minkowski(&w, &w).max(0.0).sqrt();
            if wn == 0.0 {
                return Ok((0.0, DVector::zeros(p.len())));
            }
            let d = k * (wn / k).asinh();
            Ok((d, w * (d / wn)))
        }
        _ => {
            let v = q - p;
            Ok((v.norm(), v))
        }
    }
}

pub(super) fn distance(space: &AmbientSpace, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
    match space.kind() {
        AmbientKind::Euclidean { .. } => Ok((q - p).norm()),
        AmbientKind::Sphere { radius, .. } => {
            // atan2 form keeps accuracy near 0 and near pi; distance itself is
            // well defined at antipodes.
            let r2 = radius * radius;
            let cosang = p.dot(q) / r2;
            let w = q - p * cosang;
            Ok(radius * (w.norm() / radius).atan2(cosang))
        }
        _ => Ok(log(space, p, q)?.0),
    }
}

/// Closed-form transport of `w` from the path start to sample `index`.
pub(super) fn transport(
    space: &AmbientSpace,
    path: &GeodesicPath,
    w: &DVector<f64>,
    index: usize,
) -> DVector<f64> {
    let x0 = path.start();
    let v0 = path.initial_velocity();
    let s2 = space.inner(x0, v0, v0);
    if s2 == 0.0 {
        return w.clone();
    }
    let a = space.inner(x0, w, v0) / s2;
    let perp = w - v0 * a;
    perp + &path.samples[index].velocity * a
}
