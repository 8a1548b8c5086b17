//! Ambient manifolds: Euclidean space, the round sphere and the hyperboloid as
//! embedded models with closed-form geometry, and chart-defined metrics whose
//! geometry is integrated numerically.

mod chart;
mod space_form;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::numeric::{rk4_on_samples, rk4_step};

pub use chart::ChartMetric;

/// Default number of RK4 steps per unit parameter for chart geodesics.
pub const DEFAULT_ODE_STEPS: usize = 256;

/// A point in the model coordinates of its ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub DVector<f64>);

impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point(DVector::from_column_slice(coords))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    pub base: Point,
    pub components: DVector<f64>,
}

impl Tangent {
    pub fn new(base: Point, components: &[f64]) -> Self {
        Tangent {
            base,
            components: DVector::from_column_slice(components),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: DVector<f64>,
    pub velocity: DVector<f64>,
}

/// A constant-speed geodesic sampled on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    pub length: f64,
}

impl GeodesicPath {
    pub fn start(&self) -> &DVector<f64> {
        &self.samples[0].point
    }

    pub fn end(&self) -> &DVector<f64> {
        &self.samples[self.samples.len() - 1].point
    }

    pub fn initial_velocity(&self) -> &DVector<f64> {
        &self.samples[0].velocity
    }

    pub fn final_velocity(&self) -> &DVector<f64> {
        &self.samples[self.samples.len() - 1].velocity
    }

    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }
}

#[derive(Clone)]
pub enum AmbientKind {
    Euclidean { dim: usize },
    /// Round sphere of the given radius embedded in `R^(dim+1)`.
    Sphere { dim: usize, radius: f64 },
    /// Hyperboloid model `<x,x>_L = 1/curvature`, `x0 > 0`, with `curvature < 0`.
    Hyperbolic { dim: usize, curvature: f64 },
    /// Coordinates on `R^dim` restricted to the ball of `domain_radius`.
    Chart {
        dim: usize,
        metric: ChartMetric,
        domain_radius: f64,
    },
}

impl fmt::Debug for AmbientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmbientKind::Euclidean { dim } => write!(f, "euclidean({dim})"),
            AmbientKind::Sphere { dim, radius } => write!(f, "sphere({dim}, R={radius})"),
            AmbientKind::Hyperbolic { dim, curvature } => {
                write!(f, "hyperbolic({dim}, c={curvature})")
            }
            AmbientKind::Chart { dim, metric, .. } => write!(f, "chart({dim}, {metric:?})"),
        }
    }
}

/// The ambient Riemannian manifold `N`. Immutable once built.
#[derive(Clone, Debug)]
pub struct AmbientSpace {
    kind: AmbientKind,
    ode_steps: usize,
}

impl AmbientSpace {
    pub fn euclidean(dim: usize) -> Self {
        Self::from_kind(AmbientKind::Euclidean { dim })
    }

    pub fn sphere(dim: usize, radius: f64) -> Self {
        assert!(radius > 0.0, "sphere radius must be positive");
        Self::from_kind(AmbientKind::Sphere { dim, radius })
    }

    pub fn hyperbolic(dim: usize, curvature: f64) -> Self {
        assert!(curvature < 0.0, "hyperbolic curvature must be negative");
        Self::from_kind(AmbientKind::Hyperbolic { dim, curvature })
    }

    pub fn chart(dim: usize, metric: ChartMetric, domain_radius: f64) -> Self {
        Self::from_kind(AmbientKind::Chart {
            dim,
            metric,
            domain_radius,
        })
    }

    pub fn from_kind(kind: AmbientKind) -> Self {
        AmbientSpace {
            kind,
            ode_steps: DEFAULT_ODE_STEPS,
        }
    }

    /// Override the RK4 step count used for chart geodesics and transport.
    pub fn with_ode_steps(mut self, steps: usize) -> Self {
        self.ode_steps = steps.max(2);
        self
    }

    pub fn kind(&self) -> &AmbientKind {
        &self.kind
    }

    pub fn ode_steps(&self) -> usize {
        self.ode_steps
    }

    /// Intrinsic dimension of `N`.
    pub fn dim(&self) -> usize {
        match &self.kind {
            AmbientKind::Euclidean { dim }
            | AmbientKind::Sphere { dim, .. }
            | AmbientKind::Hyperbolic { dim, .. }
            | AmbientKind::Chart { dim, .. } => *dim,
        }
    }

    /// Length of a coordinate vector in the model representation.
    pub fn coord_dim(&self) -> usize {
        match &self.kind {
            AmbientKind::Sphere { dim, .. } | AmbientKind::Hyperbolic { dim, .. } => dim + 1,
            AmbientKind::Euclidean { dim } | AmbientKind::Chart { dim, .. } => *dim,
        }
    }

    /// The constant sectional curvature of a space form, `None` for charts.
    pub fn curvature_constant(&self) -> Option<f64> {
        match &self.kind {
            AmbientKind::Euclidean { .. } => Some(0.0),
            AmbientKind::Sphere { radius, .. } => Some(1.0 / (radius * radius)),
            AmbientKind::Hyperbolic { curvature, .. } => Some(*curvature),
            AmbientKind::Chart { metric, .. } => metric.constant_curvature(),
        }
    }

    pub fn is_chart(&self) -> bool {
        matches!(self.kind, AmbientKind::Chart { .. })
    }

    /// Metric inner product of two tangent vectors at `x`.
    pub fn inner(&self, x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match &self.kind {
            AmbientKind::Euclidean { .. } | AmbientKind::Sphere { .. } => a.dot(b),
            AmbientKind::Hyperbolic { .. } => space_form::minkowski(a, b),
            AmbientKind::Chart { metric, .. } => {
                let g = metric.eval(x.as_slice());
                (a.transpose() * g * b)[(0, 0)]
            }
        }
    }

    pub fn norm(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.inner(x, v, v).max(0.0).sqrt()
    }

    /// Chart metric matrix at `x` (identity-like for embedded models).
    pub fn metric_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.kind {
            AmbientKind::Chart { metric, .. } => metric.eval(x.as_slice()),
            AmbientKind::Hyperbolic { .. } => {
                let mut m = DMatrix::identity(x.len(), x.len());
                m[(0, 0)] = -1.0;
                m
            }
            _ => DMatrix::identity(x.len(), x.len()),
        }
    }

    /// Residual of the model constraint for a point (0 for Euclidean/chart inside domain).
    pub fn point_residual(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            AmbientKind::Euclidean { .. } => 0.0,
            AmbientKind::Sphere { radius, .. } => (x.norm() - radius).abs(),
            AmbientKind::Hyperbolic { curvature, .. } => {
                (space_form::minkowski(x, x) - 1.0 / curvature).abs()
            }
            AmbientKind::Chart { domain_radius, .. } => (x.norm() - domain_radius).max(0.0),
        }
    }

    /// Residual of the tangency constraint of `v` at `x`.
    pub fn tangent_residual(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match &self.kind {
            AmbientKind::Sphere { .. } => x.dot(v).abs(),
            AmbientKind::Hyperbolic { .. } => space_form::minkowski(x, v).abs(),
            _ => 0.0,
        }
    }

    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.coord_dim() {
            return Err(GeomError::Dimension {
                expected: self.coord_dim(),
                got: x.len(),
            });
        }
        if !x.iter().all(|c| c.is_finite()) {
            return Err(GeomError::eval("point coordinates"));
        }
        if let AmbientKind::Chart { domain_radius, .. } = &self.kind {
            if x.norm() > *domain_radius {
                return Err(GeomError::DomainEscape { at: x.iter().copied().collect() });
            }
        }
        Ok(())
    }

    /// Closest model point (renormalisation onto the sphere or hyperboloid).
    pub fn project_point(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            AmbientKind::Sphere { radius, .. } => x * (radius / x.norm()),
            AmbientKind::Hyperbolic { curvature, .. } => {
                let k2 = -1.0 / curvature;
                let spatial = x.rows(1, x.len() - 1).norm_squared();
                let mut y = x.clone();
                y[0] = (k2 + spatial).sqrt();
                y
            }
            _ => x.clone(),
        }
    }

    /// Orthogonal projection of a model vector onto `T_x N`.
    pub fn project_tangent(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            AmbientKind::Sphere { .. } => v - x * (x.dot(v) / x.norm_squared()),
            AmbientKind::Hyperbolic { .. } => {
                v - x * (space_form::minkowski(x, v) / space_form::minkowski(x, x))
            }
            _ => v.clone(),
        }
    }

    /// A deterministic spanning set of `T_x N` (projected coordinate axes).
    pub fn tangent_spanning_set(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.coord_dim();
        (0..n)
            .map(|i| {
                let e = DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
                self.project_tangent(x, &e)
            })
            .collect()
    }

    /// Endpoint `exp_x(v)` without storing the path.
    pub fn exp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.kind {
            AmbientKind::Chart { .. } => {
                let (end, _) = chart::integrate_geodesic(self, x, v, self.ode_steps, None)?;
                Ok(end)
            }
            _ => Ok(space_form::point_at(self, x, v, 1.0).0),
        }
    }

    /// The geodesic `t -> exp_p(t v)` on `[0, 1]` sampled at `steps + 1` points.
    pub fn geodesic(&self, p: &Point, v: &Tangent, steps: usize) -> Result<GeodesicPath> {
        if steps < 2 {
            return Err(GeomError::InvalidConfiguration("geodesic needs steps >= 2".into()));
        }
        self.geodesic_from(&p.0, &v.components, steps)
    }

    pub fn geodesic_from(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        steps: usize,
    ) -> Result<GeodesicPath> {
        self.check_point(x)?;
        let samples = match &self.kind {
            AmbientKind::Chart { .. } => {
                let mut out = Vec::with_capacity(steps + 1);
                chart::integrate_geodesic(self, x, v, steps, Some(&mut out))?;
                out
            }
            _ => (0..=steps)
                .map(|i| {
                    let t = i as f64 / steps as f64;
                    let (point, velocity) = space_form::point_at(self, x, v, t);
                    GeodesicSample { t, point, velocity }
                })
                .collect(),
        };
        let length = self.norm(x, v);
        Ok(GeodesicPath { samples, length })
    }

    /// Ambient distance `d(p, q)` and the initial velocity `v` with `exp_p(v) = q`.
    pub fn distance_and_log(&self, p: &Point, q: &Point) -> Result<(f64, Tangent)> {
        let (d, v) = self.log(&p.0, &q.0)?;
        Ok((
            d,
            Tangent {
                base: p.clone(),
                components: v,
            },
        ))
    }

    /// Log map with a full uniqueness check.
    pub fn log(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        self.check_point(p)?;
        self.check_point(q)?;
        match &self.kind {
            AmbientKind::Chart { .. } => chart::shoot(self, p, q, None),
            _ => space_form::log(self, p, q),
        }
    }

    /// Log map seeded with a nearby solution; falls back to the full search.
    ///
    /// For space forms this is the closed form. For charts only the guess is
    /// polished, so uniqueness is not rechecked on the fast path.
    pub fn log_near(
        &self,
        p: &DVector<f64>,
        q: &DVector<f64>,
        guess: Option<&DVector<f64>>,
    ) -> Result<(f64, DVector<f64>)> {
        match (&self.kind, guess) {
            (AmbientKind::Chart { .. }, Some(g)) => chart::shoot(self, p, q, Some(g))
                .or_else(|_| chart::shoot(self, p, q, None)),
            _ => self.log(p, q),
        }
    }

    /// Log map polished from `guess` only. Charts fail rather than fall back
    /// to the full search; space forms use the closed form.
    pub fn log_from(&self, p: &DVector<f64>, q: &DVector<f64>, guess: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        match &self.kind {
            AmbientKind::Chart { .. } => chart::shoot(self, p, q, Some(guess)),
            _ => self.log(p, q),
        }
    }

    pub fn distance(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
        match &self.kind {
            AmbientKind::Chart { .. } => Ok(self.log(p, q)?.0),
            _ => space_form::distance(self, p, q),
        }
    }

    /// Parallel transport of `v` (based at the path start) to the path end.
    pub fn parallel_transport(&self, path: &GeodesicPath, v: &Tangent) -> Result<Tangent> {
        let out = self.transport_along_geodesic(path, &v.components)?;
        Ok(Tangent {
            base: Point(path.end().clone()),
            components: out,
        })
    }

    pub fn transport_along_geodesic(
        &self,
        path: &GeodesicPath,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match &self.kind {
            AmbientKind::Euclidean { .. } => Ok(v.clone()),
            AmbientKind::Sphere { .. } | AmbientKind::Hyperbolic { .. } => {
                Ok(space_form::transport(self, path, v, path.samples.len() - 1))
            }
            AmbientKind::Chart { .. } => chart::transport_with_check(self, path, v),
        }
    }

    /// Transport of `v` to every sample of a geodesic path.
    pub fn transport_field(&self, path: &GeodesicPath, v: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        match &self.kind {
            AmbientKind::Euclidean { .. } => Ok(vec![v.clone(); path.samples.len()]),
            AmbientKind::Sphere { .. } | AmbientKind::Hyperbolic { .. } => Ok((0..path
                .samples
                .len())
                .map(|i| space_form::transport(self, path, v, i))
                .collect()),
            AmbientKind::Chart { .. } => chart::transport_samples(self, path, v),
        }
    }

    /// Right side of the transport equation `D v/dt = 0` in model coordinates.
    pub fn transport_rhs(
        &self,
        x: &DVector<f64>,
        xdot: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(match &self.kind {
            AmbientKind::Euclidean { .. } => DVector::zeros(v.len()),
            AmbientKind::Sphere { .. } => x * (-xdot.dot(v) / x.norm_squared()),
            AmbientKind::Hyperbolic { .. } => {
                x * (-space_form::minkowski(xdot, v) / space_form::minkowski(x, x))
            }
            AmbientKind::Chart { metric, .. } => {
                -chart::christoffel_contract(metric, x.as_slice(), xdot, v)?
            }
        })
    }

    /// Christoffel contraction `Gamma(a, b)` (zero for the embedded models,
    /// whose connection is the tangential projection of the flat one).
    pub fn connection_correction(
        &self,
        x: &DVector<f64>,
        a: &DVector<f64>,
        b: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match &self.kind {
            AmbientKind::Chart { metric, .. } => chart::christoffel_contract(metric, x.as_slice(), a, b),
            _ => Ok(DVector::zeros(x.len())),
        }
    }

    /// Transport along an arbitrary sampled curve with uniform parameter spacing.
    ///
    pub fn transport_along_samples(
        &self,
        points: &[DVector<f64>],
        velocities: &[DVector<f64>],
        dt: f64,
        v0: &DVector<f64>,
    ) -> Result<Vec<DVector<f64>>> {
        assert_eq!(points.len(), velocities.len());
        rk4_on_samples(points.len(), dt, v0, |i, v| {
            self.transport_rhs(&points[i], &velocities[i], v)
        })
    }

    /// Sectional curvature of the plane spanned by `v`, `w` at `p`.
    pub fn sectional_curvature(&self, p: &Point, v: &Tangent, w: &Tangent) -> Result<f64> {
        self.sectional_curvature_at(&p.0, &v.components, &w.components)
    }

    pub fn sectional_curvature_at(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<f64> {
        let vv = self.inner(x, v, v);
        let ww = self.inner(x, w, w);
        let vw = self.inner(x, v, w);
        let gram = vv * ww - vw * vw;
        let normalized = if vv > 0.0 && ww > 0.0 { gram / (vv * ww) } else { 0.0 };
        if !(normalized >= 1e-12) {
            return Err(GeomError::DegeneratePlane(normalized));
        }
        match &self.kind {
            AmbientKind::Chart { metric, .. } => {
                chart::sectional_curvature(metric, x.as_slice(), v, w, gram)
            }
            _ => Ok(self.curvature_constant().unwrap_or(0.0)),
        }
    }

    /// Generic RK4 driver reused by the chart integrators.
    pub(crate) fn rk4<F>(
        &self,
        mut f: F,
        y0: DVector<f64>,
        steps: usize,
        mut visit: impl FnMut(usize, &DVector<f64>) -> Result<()>,
    ) -> Result<DVector<f64>>
    where
        F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
    {
        let dt = 1.0 / steps as f64;
        let mut y = y0;
        visit(0, &y)?;
        for i in 0..steps {
            y = rk4_step(&mut f, i as f64 * dt, &y, dt)?;
            visit(i + 1, &y)?;
        }
        Ok(y)
    }
}

/// Wrap a closure metric as a chart metric.
pub fn custom_metric<F>(name: &str, f: F) -> ChartMetric
where
    F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
{
    ChartMetric::Custom {
        name: name.to_string(),
        eval: Arc::new(f),
    }
}

#[cfg(test)]
mod tests;
