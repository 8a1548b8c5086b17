use nalgebra::DVector;
use serde::Serialize;

use crate::ambient::{AmbientSpace, GeodesicPath};
use crate::error::{GeomError, Result};
use crate::numeric::gauss_legendre_unit;

/// `U(t)` parallel along `sigma` and `V(t) = (1 - t) U(t)` on the path samples.
#[derive(Clone, Debug)]
pub struct VariationField {
    pub along: GeodesicPath,
    pub u: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureIntegral {
    pub value: f64,
    pub order: usize,
    pub nodes: usize,
}

fn check_unit_normal(space: &AmbientSpace, sigma: &GeodesicPath, u0: &DVector<f64>) -> Result<()> {
    let x = sigma.start();
    let n = space.norm(x, u0);
    if (n - 1.0).abs() > 1e-9 {
        return Err(GeomError::InvalidConfiguration(format!("U(0) must be unit, |U(0)| = {n}")));
    }
    let vel = sigma.initial_velocity();
    let speed = space.norm(x, vel);
    if speed > 0.0 && (space.inner(x, u0, vel) / speed).abs() > 1e-8 {
        return Err(GeomError::InvalidConfiguration("U(0) must be orthogonal to sigma'(0)".into()));
    }
    Ok(())
}

/// Transport `u0` along the samples of `sigma` and scale by `1 - t`.
pub fn variation_field(space: &AmbientSpace, sigma: &GeodesicPath, u0: &DVector<f64>) -> Result<VariationField> {
    check_unit_normal(space, sigma, u0)?;
    let u = space.transport_field(sigma, u0)?;
    let v = u
        .iter()
        .zip(&sigma.samples)
        .map(|(ui, s)| if s.t == 1.0 { DVector::zeros(ui.len()) } else { ui * (1.0 - s.t) })
        .collect();
    Ok(VariationField {
        along: sigma.clone(),
        u,
        v,
    })
}

/// `int_0^1 kappa(V, sigma') (1 - t)^2 dt` by Gauss-Legendre quadrature of `order` nodes.
///
/// `U` is evaluated at each node by transporting `u0` along the initial
/// segment `sigma|[0, t]`; the curvature of the plane `(V, sigma')` equals
/// that of `(U, sigma')`.
pub fn curvature_integral(
    space: &AmbientSpace,
    sigma: &GeodesicPath,
    u0: &DVector<f64>,
    order: usize,
) -> Result<CurvatureIntegral> {
    if order < 1 {
        return Err(GeomError::InvalidConfiguration("quadrature order must be positive".into()));
    }
    check_unit_normal(space, sigma, u0)?;
    let (nodes, weights) = gauss_legendre_unit(order);
    let x0 = sigma.start();
    let v0 = sigma.initial_velocity();
    let steps = sigma.steps().max(2);
    let mut value = 0.0;
    for (t, w) in nodes.iter().zip(&weights) {
        let segment = space.geodesic_from(x0, &(v0 * *t), steps)?;
        let u = space.transport_along_geodesic(&segment, u0)?;
        let vel = segment.final_velocity() / *t;
        let kappa = space.sectional_curvature_at(segment.end(), &u, &vel)?;
        value += w * kappa * (1.0 - t) * (1.0 - t);
    }
    Ok(CurvatureIntegral {
        value,
        order,
        nodes: nodes.len(),
    })
}
