//! Parametrised compact submanifolds `F: U -> N` and their extrinsic geometry.

mod curve;
pub mod families;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::ambient::AmbientSpace;
use crate::error::{GeomError, Result};
use crate::numeric::{gram_schmidt, wrap_periodic};

pub use curve::{default_steps, CurveSample, IntrinsicCurve};

type MapFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64]) -> Vec<DVector<f64>> + Send + Sync>;
type HessianFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<DVector<f64>>> + Send + Sync>;

/// How a parameter axis closes up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    /// Wraps around, e.g. an angle.
    Periodic,
    /// Bounded axis whose ends collapse to points of `M` (polar angle of a sphere).
    Closed,
    /// Bounded axis with genuine boundary; not compact.
    Open,
}

#[derive(Clone, Debug)]
pub struct ParamDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub axes: Vec<AxisKind>,
}

impl ParamDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, axes: Vec<AxisKind>) -> Self {
        assert!(lower.len() == upper.len() && upper.len() == axes.len());
        ParamDomain { lower, upper, axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn is_compact(&self) -> bool {
        self.axes.iter().all(|a| *a != AxisKind::Open)
    }

    /// Wrap periodic axes; report escape on the others.
    pub fn normalize(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = u.clone();
        for i in 0..u.len() {
            match self.axes[i] {
                AxisKind::Periodic => out[i] = wrap_periodic(u[i], self.lower[i], self.upper[i]),
                _ => {
                    if u[i] < self.lower[i] - 1e-12 || u[i] > self.upper[i] + 1e-12 {
                        return Err(GeomError::DomainEscape {
                            at: u.iter().copied().collect(),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Wrap periodic axes and clamp the bounded ones.
    pub fn clamp(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(u.len(), |i, _| match self.axes[i] {
            AxisKind::Periodic => wrap_periodic(u[i], self.lower[i], self.upper[i]),
            _ => u[i].clamp(self.lower[i], self.upper[i]),
        })
    }

    /// Shortest parameter-space separation, honouring periodicity.
    pub fn separation(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (0..a.len())
            .map(|i| {
                let mut d = (a[i] - b[i]).abs();
                if self.axes[i] == AxisKind::Periodic {
                    let span = self.upper[i] - self.lower[i];
                    d = d.rem_euclid(span);
                    d = d.min(span - d);
                }
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Tensor grid with `per_axis` points per axis. Periodic axes include the
    /// lower end; closed axes skip both ends. Doubling `per_axis` yields a superset.
    pub fn grid(&self, per_axis: usize) -> Vec<DVector<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                let span = hi - lo;
                match self.axes[i] {
                    AxisKind::Periodic => (0..per_axis)
                        .map(|j| lo + span * j as f64 / per_axis as f64)
                        .collect(),
                    _ => (1..per_axis)
                        .map(|j| lo + span * j as f64 / per_axis as f64)
                        .collect(),
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for values in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(DVector::from_vec).collect()
    }
}

#[derive(Clone)]
pub enum DerivativeMode {
    /// Central differences with Richardson extrapolation at the declared step.
    FiniteDifference { step: f64 },
    ClosedForm { jacobian: JacobianFn, hessian: HessianFn },
}

impl fmt::Debug for DerivativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivativeMode::FiniteDifference { step } => write!(f, "finite-difference(h={step})"),
            DerivativeMode::ClosedForm { .. } => write!(f, "closed-form"),
        }
    }
}

pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Value and first two parameter derivatives of `F` at `u`.
#[derive(Clone, Debug)]
pub struct Jet {
    pub point: DVector<f64>,
    pub d1: Vec<DVector<f64>>,
    pub d2: Vec<Vec<DVector<f64>>>,
}

/// A compact submanifold given by a parametrisation into an ambient space.
#[derive(Clone)]
pub struct Immersion {
    name: String,
    space: AmbientSpace,
    domain: ParamDomain,
    map: MapFn,
    derivative: DerivativeMode,
}

impl fmt::Debug for Immersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Immersion")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("domain", &self.domain)
            .field("derivative", &self.derivative)
            .finish()
    }
}

/// Tangent basis, induced metric and orthonormal normal basis at a parameter.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    pub u: DVector<f64>,
    pub point: DVector<f64>,
    pub basis: Vec<DVector<f64>>,
    pub metric: DMatrix<f64>,
    pub normals: Vec<DVector<f64>>,
    /// Ambient covariant second derivatives `nabla_i F_j`.
    pub hessian: Vec<Vec<DVector<f64>>>,
}

impl TangentFrame {
    pub fn param_dim(&self) -> usize {
        self.basis.len()
    }

    /// Ambient vector `sum_i c_i F_i`.
    pub fn to_ambient(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.point.len());
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out += b * *c;
        }
        out
    }

    /// Coordinates of the tangential part of an ambient vector.
    pub fn to_coeffs(&self, space: &AmbientSpace, v: &DVector<f64>) -> DVector<f64> {
        let rhs = DVector::from_fn(self.basis.len(), |i, _| space.inner(&self.point, v, &self.basis[i]));
        self.metric
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or(rhs)
    }

    /// Induced norm of a coefficient vector.
    pub fn norm(&self, coeffs: &DVector<f64>) -> f64 {
        (coeffs.transpose() * &self.metric * coeffs)[(0, 0)].max(0.0).sqrt()
    }

    /// `nabla_a B` for coordinate fields with constant coefficients.
    fn covariant(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut h = DVector::zeros(self.point.len());
        for i in 0..a.len() {
            for j in 0..b.len() {
                if a[i] != 0.0 && b[j] != 0.0 {
                    h += &self.hessian[i][j] * (a[i] * b[j]);
                }
            }
        }
        h
    }

    /// Second fundamental form `Pi(a, b)` for coefficient vectors.
    pub fn second_fundamental(&self, space: &AmbientSpace, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let h = self.covariant(a, b);
        let mut out = DVector::zeros(self.point.len());
        for nu in &self.normals {
            out += nu * space.inner(&self.point, &h, nu);
        }
        out
    }

    /// Induced Christoffel contraction `Gamma^k_ij a^i b^j`.
    pub fn christoffel(&self, space: &AmbientSpace, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let h = self.covariant(a, b);
        let rhs = DVector::from_fn(self.basis.len(), |l, _| space.inner(&self.point, &h, &self.basis[l]));
        self.metric.clone().cholesky().map(|c| c.solve(&rhs)).unwrap_or(rhs)
    }

    /// Matrix of `<Pi(e_i, e_j), eta>` in the coordinate basis.
    pub fn second_form_matrix(&self, space: &AmbientSpace, eta: &DVector<f64>) -> DMatrix<f64> {
        let k = self.basis.len();
        DMatrix::from_fn(k, k, |i, j| space.inner(&self.point, &self.hessian[i][j], eta))
    }
}

/// `|A_eta|` with a maximizing unit tangent.
#[derive(Clone, Debug)]
pub struct ShapeNorm {
    pub norm: f64,
    /// Rayleigh quotient of the maximizer for the requested `eta` (may be negative).
    pub rayleigh: f64,
    /// Unit maximizer as coordinate coefficients.
    pub maximizer_coeffs: DVector<f64>,
    pub maximizer: DVector<f64>,
    /// The normal for which the maximizer's quotient is `+norm` (`eta` or `-eta`).
    pub normal: DVector<f64>,
    pub flipped: bool,
    pub eigenvalues: Vec<f64>,
}

impl Immersion {
    pub fn new<F>(name: &str, space: AmbientSpace, domain: ParamDomain, map: F) -> Self
    where
        F: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    {
        Immersion {
            name: name.to_string(),
            space,
            domain,
            map: Arc::new(map),
            derivative: DerivativeMode::FiniteDifference {
                step: DEFAULT_FD_STEP,
            },
        }
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.derivative = DerivativeMode::FiniteDifference { step };
        self
    }

    /// Override the RK4 step count of a chart ambient.
    pub fn with_ode_steps(mut self, steps: usize) -> Self {
        self.space = self.space.with_ode_steps(steps);
        self
    }

    pub fn with_closed_form<J, H>(mut self, jacobian: J, hessian: H) -> Self
    where
        J: Fn(&[f64]) -> Vec<DVector<f64>> + Send + Sync + 'static,
        H: Fn(&[f64]) -> Vec<Vec<DVector<f64>>> + Send + Sync + 'static,
    {
        self.derivative = DerivativeMode::ClosedForm {
            jacobian: Arc::new(jacobian),
            hessian: Arc::new(hessian),
        };
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &AmbientSpace {
        &self.space
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn param_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn codim(&self) -> usize {
        self.space.dim() - self.param_dim()
    }

    pub fn eval(&self, u: &DVector<f64>) -> DVector<f64> {
        (self.map)(u.as_slice())
    }

    pub fn ensure_compact(&self) -> Result<()> {
        if self.domain.is_compact() {
            Ok(())
        } else {
            Err(GeomError::NotCompact(format!("{} has an open parameter axis", self.name)))
        }
    }

    pub fn jet(&self, u: &DVector<f64>) -> Result<Jet> {
        let point = self.eval(u);
        if !point.iter().all(|c| c.is_finite()) {
            return Err(GeomError::eval("immersion map"));
        }
        let k = self.param_dim();
        let (d1, d2) = match &self.derivative {
            DerivativeMode::ClosedForm { jacobian, hessian } => {
                (jacobian(u.as_slice()), hessian(u.as_slice()))
            }
            DerivativeMode::FiniteDifference { step } => {
                let at = |shift: &[(usize, f64)]| {
                    let mut v = u.clone();
                    for (i, s) in shift {
                        v[*i] += s;
                    }
                    self.eval(&v)
                };
                let h = *step;
                let mut d1 = Vec::with_capacity(k);
                let mut d2 = vec![vec![DVector::zeros(point.len()); k]; k];
                #[allow(clippy::needless_range_loop)]
                for i in 0..k {
                    let first = |h: f64| (at(&[(i, h)]) - at(&[(i, -h)])) / (2.0 * h);
                    d1.push((first(0.5 * h) * 4.0 - first(h)) / 3.0);
                    let second =
                        |h: f64| (at(&[(i, h)]) - &point * 2.0 + at(&[(i, -h)])) / (h * h);
                    d2[i][i] = (second(0.5 * h) * 4.0 - second(h)) / 3.0;
                    for j in 0..i {
                        let mixed = |h: f64| {
                            (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                                + at(&[(i, -h), (j, -h)]))
                                / (4.0 * h * h)
                        };
                        let m = (mixed(0.5 * h) * 4.0 - mixed(h)) / 3.0;
                        d2[i][j] = m.clone();
                        d2[j][i] = m;
                    }
                }
                (d1, d2)
            }
        };
        Ok(Jet { point, d1, d2 })
    }

    /// Image point and first derivatives only (cheaper than [`Immersion::jet`]).
    pub fn tangents(&self, u: &DVector<f64>) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
        let point = self.eval(u);
        if !point.iter().all(|c| c.is_finite()) {
            return Err(GeomError::eval("immersion map"));
        }
        let d1 = match &self.derivative {
            DerivativeMode::ClosedForm { jacobian, .. } => jacobian(u.as_slice()),
            DerivativeMode::FiniteDifference { step } => (0..self.param_dim())
                .map(|i| {
                    let first = |h: f64| {
                        let mut a = u.clone();
                        let mut b = u.clone();
                        a[i] += h;
                        b[i] -= h;
                        (self.eval(&a) - self.eval(&b)) / (2.0 * h)
                    };
                    (first(0.5 * step) * 4.0 - first(*step)) / 3.0
                })
                .collect(),
        };
        Ok((point, d1))
    }

    /// Tangent frame, induced metric and normal basis at `u`.
    pub fn frame(&self, u: &DVector<f64>) -> Result<TangentFrame> {
        let jet = self.jet(u)?;
        let space = &self.space;
        let x = &jet.point;
        let basis: Vec<DVector<f64>> = jet.d1.iter().map(|d| space.project_tangent(x, d)).collect();
        let k = basis.len();
        let metric = DMatrix::from_fn(k, k, |i, j| space.inner(x, &basis[i], &basis[j]));
        let smallest = SymmetricEigen::new(metric.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !(smallest > 1e-8) {
            return Err(GeomError::ImmersionDegenerate {
                at: u.iter().copied().collect(),
            });
        }
        let normals = gram_schmidt(
            &space.tangent_spanning_set(x),
            &basis,
            |a, b| space.inner(x, a, b),
            self.codim(),
            1e-6,
        );
        let mut hessian = jet.d2.clone();
        if space.is_chart() {
            for i in 0..k {
                for j in 0..k {
                    hessian[i][j] += space.connection_correction(x, &basis[i], &basis[j])?;
                }
            }
        }
        Ok(TangentFrame {
            u: u.clone(),
            point: jet.point,
            basis,
            metric,
            normals,
            hessian,
        })
    }

    /// `Pi(v, w)` for ambient tangent vectors `v`, `w` of `M` at `F(u)`.
    pub fn second_fundamental(
        &self,
        u: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let frame = self.frame(u)?;
        let a = frame.to_coeffs(&self.space, v);
        let b = frame.to_coeffs(&self.space, w);
        Ok(frame.second_fundamental(&self.space, &a, &b))
    }

    pub fn shape_operator_norm(&self, u: &DVector<f64>, eta: &DVector<f64>) -> Result<ShapeNorm> {
        let frame = self.frame(u)?;
        Ok(self.shape_norm_in(&frame, eta))
    }

    /// Spectral radius of `A_eta` with the realising eigenvector.
    pub fn shape_norm_in(&self, frame: &TangentFrame, eta: &DVector<f64>) -> ShapeNorm {
        let s = frame.second_form_matrix(&self.space, eta);
        // A_eta in a g-orthonormal basis: L^-1 S L^-T with g = L L^T.
        let chol = frame.metric.clone().cholesky().expect("frame metric is SPD");
        let l = chol.l();
        let linv = l.clone().try_inverse().expect("triangular factor is invertible");
        let a = &linv * s * linv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let (idx, lam) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("nonempty spectrum");
        let y = eig.eigenvectors.column(idx).into_owned();
        let coeffs = linv.transpose() * y;
        let maximizer = frame.to_ambient(&coeffs);
        let flipped = lam < 0.0;
        ShapeNorm {
            norm: lam.abs(),
            rayleigh: lam,
            maximizer_coeffs: coeffs,
            maximizer,
            normal: if flipped { -eta } else { eta.clone() },
            flipped,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// `<A_eta v, w>` in the induced metric, for coefficient vectors.
    pub fn shape_pairing(&self, frame: &TangentFrame, eta: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let pi = frame.second_fundamental(&self.space, v, w);
        self.space.inner(&frame.point, &pi, eta)
    }

    /// `max |Pi(e, e)|` over unit coordinate directions of a probe grid.
    pub fn max_second_fundamental(&self, per_axis: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for u in self.domain.grid(per_axis) {
            let frame = self.frame(&u)?;
            for nu in &frame.normals {
                worst = worst.max(self.shape_norm_in(&frame, nu).norm);
            }
        }
        Ok(worst)
    }

    /// Totally geodesic if `max |Pi| < 1e-8` over the probe grid.
    pub fn is_totally_geodesic(&self, per_axis: usize) -> Result<bool> {
        Ok(self.max_second_fundamental(per_axis)? < 1e-8)
    }

    /// Worst model-constraint residual and smallest metric eigenvalue over a grid.
    pub fn validate(&self, per_axis: usize) -> Result<(f64, f64)> {
        let mut residual: f64 = 0.0;
        let mut smallest = f64::INFINITY;
        for u in self.domain.grid(per_axis) {
            let frame = self.frame(&u)?;
            residual = residual.max(self.space.point_residual(&frame.point));
            let ev = SymmetricEigen::new(frame.metric.clone()).eigenvalues;
            smallest = smallest.min(ev.iter().copied().fold(f64::INFINITY, f64::min));
        }
        Ok((residual, smallest))
    }
}

#[cfg(test)]
mod tests;
