//! Built-in analytic immersions used by the scenario registry and tests.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;

use super::{AxisKind, Immersion, ParamDomain};
use crate::ambient::{AmbientSpace, ChartMetric};

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn loop_domain() -> ParamDomain {
    ParamDomain::new(vec![0.0], vec![TAU], vec![AxisKind::Periodic])
}

/// Circle of radius `r` centred at the origin of the Euclidean plane.
pub fn circle(r: f64) -> Immersion {
    Immersion::new("circle", AmbientSpace::euclidean(2), loop_domain(), move |u| {
        dv(&[r * u[0].cos(), r * u[0].sin()])
    })
}

/// Circle with closed-form derivatives (exercises the closed-form mode).
pub fn circle_closed_form(r: f64) -> Immersion {
    circle(r).with_closed_form(
        move |u| vec![dv(&[-r * u[0].sin(), r * u[0].cos()])],
        move |u| vec![vec![dv(&[-r * u[0].cos(), -r * u[0].sin()])]],
    )
}

/// Ellipse with semi-axes `a` (x) and `b` (y).
pub fn ellipse(a: f64, b: f64) -> Immersion {
    Immersion::new("ellipse", AmbientSpace::euclidean(2), loop_domain(), move |u| {
        dv(&[a * u[0].cos(), b * u[0].sin()])
    })
}

/// Round sphere of radius `r` in Euclidean 3-space, `(polar, azimuth)` chart.
pub fn round_sphere(r: f64) -> Immersion {
    Immersion::new(
        "round-sphere",
        AmbientSpace::euclidean(3),
        ParamDomain::new(vec![0.0, 0.0], vec![PI, TAU], vec![AxisKind::Closed, AxisKind::Periodic]),
        move |u| {
            let (st, ct) = u[0].sin_cos();
            let (sp, cp) = u[1].sin_cos();
            dv(&[r * st * cp, r * st * sp, r * ct])
        },
    )
}

/// Torus of revolution with tube angle `theta` and revolution angle `phi`.
pub fn torus(big_r: f64, r: f64) -> Immersion {
    Immersion::new(
        "torus",
        AmbientSpace::euclidean(3),
        ParamDomain::new(vec![0.0, 0.0], vec![TAU, TAU], vec![AxisKind::Periodic; 2]),
        move |u| {
            let (st, ct) = u[0].sin_cos();
            let (sp, cp) = u[1].sin_cos();
            let w = big_r + r * ct;
            dv(&[w * cp, w * sp, r * st])
        },
    )
}

/// Circle of colatitude `rho` on the sphere of radius `radius`.
pub fn sphere_latitude(radius: f64, rho: f64) -> Immersion {
    let name = if (rho - PI / 2.0).abs() < 1e-15 {
        "great-circle-on-sphere"
    } else {
        "small-circle-on-sphere"
    };
    let (sr, cr) = rho.sin_cos();
    Immersion::new(name, AmbientSpace::sphere(2, radius), loop_domain(), move |u| {
        dv(&[radius * sr * u[0].cos(), radius * sr * u[0].sin(), radius * cr])
    })
}

/// Equator of the sphere of radius `radius`.
pub fn equator(radius: f64) -> Immersion {
    sphere_latitude(radius, PI / 2.0)
}

/// Geodesic circle of radius `rho` about the base point of the hyperboloid.
pub fn hyperbolic_circle(curvature: f64, rho: f64) -> Immersion {
    let k = 1.0 / (-curvature).sqrt();
    let (ch, sh) = ((rho / k).cosh(), (rho / k).sinh());
    Immersion::new(
        "hyperbolic-circle",
        AmbientSpace::hyperbolic(2, curvature),
        loop_domain(),
        move |u| dv(&[k * ch, k * sh * u[0].cos(), k * sh * u[0].sin()]),
    )
}

/// Circle of radius `r` in the `xy`-plane of Euclidean 3-space (codimension 2).
pub fn space_circle(r: f64) -> Immersion {
    Immersion::new("space-circle", AmbientSpace::euclidean(3), loop_domain(), move |u| {
        dv(&[r * u[0].cos(), r * u[0].sin(), 0.0])
    })
}

/// Stereographic projection from the north pole of the unit sphere.
pub fn stereographic(p: &[f64; 3]) -> DVector<f64> {
    dv(&[p[0] / (1.0 - p[2]), p[1] / (1.0 - p[2])])
}

/// Inverse stereographic projection onto the unit sphere.
pub fn inverse_stereographic(x: &DVector<f64>) -> [f64; 3] {
    let r2 = x.norm_squared();
    [2.0 * x[0] / (1.0 + r2), 2.0 * x[1] / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0)]
}

/// Pole of the tilted great circle used by [`chart_great_circle`].
pub fn chart_great_circle_pole(tilt: f64) -> [f64; 3] {
    [tilt.sin(), 0.0, tilt.cos()]
}

/// Great circle of the unit sphere, tilted by `tilt` from the equator, seen in
/// stereographic coordinates. For `0 < tilt < pi/2` both poles of the circle
/// have finite chart images.
pub fn chart_great_circle(tilt: f64) -> Immersion {
    let (st, ct) = tilt.sin_cos();
    let e1 = [0.0, 1.0, 0.0];
    let e2 = [-ct, 0.0, st];
    Immersion::new(
        "geodesic-on-chart-sphere-metric",
        AmbientSpace::chart(2, ChartMetric::StereographicSphere { radius: 1.0 }, 50.0),
        loop_domain(),
        move |u| {
            let (s, c) = u[0].sin_cos();
            stereographic(&[
                c * e1[0] + s * e2[0],
                c * e1[1] + s * e2[1],
                c * e1[2] + s * e2[2],
            ])
        },
    )
}
