use nalgebra::DVector;

use super::{Immersion, TangentFrame};
use crate::error::{GeomError, Result};
use crate::numeric::{rk4_on_samples, rk4_step};

/// Ambient points and velocities along a curve.
pub type PointsAndVelocities = (Vec<DVector<f64>>, Vec<DVector<f64>>);

#[derive(Clone, Debug)]
pub struct CurveSample {
    pub s: f64,
    pub u: DVector<f64>,
    pub du: DVector<f64>,
}

/// A curve in the parameter domain, sampled uniformly on `[0, s_max]`.
#[derive(Clone, Debug)]
pub struct IntrinsicCurve {
    pub samples: Vec<CurveSample>,
    pub unit_speed: bool,
    pub s_max: f64,
}

impl IntrinsicCurve {
    pub fn ds(&self) -> f64 {
        self.s_max / (self.samples.len() - 1) as f64
    }

    pub fn start(&self) -> &CurveSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &CurveSample {
        &self.samples[self.samples.len() - 1]
    }
}

/// Step count for an intrinsic geodesic of length `s_max`.
pub fn default_steps(s_max: f64) -> usize {
    let n = (256.0 * s_max.abs()).ceil() as usize;
    (n.max(64) + 1) & !1
}

impl Immersion {
    /// Unit-speed (when `w0` is unit) geodesic of the induced metric.
    pub fn intrinsic_geodesic(
        &self,
        u0: &DVector<f64>,
        w0: &DVector<f64>,
        s_max: f64,
        steps: usize,
    ) -> Result<IntrinsicCurve> {
        if steps < 2 || !(s_max >= 0.0) {
            return Err(GeomError::InvalidConfiguration(
                "intrinsic geodesic needs steps >= 2 and s_max >= 0".into(),
            ));
        }
        let k = self.param_dim();
        let start = self.frame(u0)?;
        let unit = (start.norm(w0) - 1.0).abs() < 1e-9;
        let mut y = DVector::zeros(2 * k);
        y.rows_mut(0, k).copy_from(&self.domain.normalize(u0)?);
        y.rows_mut(k, k).copy_from(w0);
        let dt = s_max / steps as f64;
        let mut rhs = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
            let u = y.rows(0, k).into_owned();
            let du = y.rows(k, k).into_owned();
            let frame = self.frame(&self.domain.clamp(&u))?;
            let acc = -frame.christoffel(&self.space, &du, &du);
            let mut dy = DVector::zeros(2 * k);
            dy.rows_mut(0, k).copy_from(&du);
            dy.rows_mut(k, k).copy_from(&acc);
            Ok(dy)
        };
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(CurveSample {
            s: 0.0,
            u: y.rows(0, k).into_owned(),
            du: w0.clone(),
        });
        for i in 0..steps {
            y = rk4_step(&mut rhs, i as f64 * dt, &y, dt)?;
            let u = self.domain.normalize(&y.rows(0, k).into_owned())?;
            y.rows_mut(0, k).copy_from(&u);
            samples.push(CurveSample {
                s: (i + 1) as f64 * dt,
                u,
                du: y.rows(k, k).into_owned(),
            });
        }
        Ok(IntrinsicCurve {
            samples,
            unit_speed: unit,
            s_max,
        })
    }

    pub fn curve_frames(&self, curve: &IntrinsicCurve) -> Result<Vec<TangentFrame>> {
        curve.samples.iter().map(|s| self.frame(&s.u)).collect()
    }

    /// Ambient points and velocities `F(u(s))`, `dF u'(s)`.
    pub fn curve_ambient(&self, curve: &IntrinsicCurve) -> Result<PointsAndVelocities> {
        let frames = self.curve_frames(curve)?;
        let pts = frames.iter().map(|f| f.point.clone()).collect();
        let vel = frames
            .iter()
            .zip(&curve.samples)
            .map(|(f, s)| f.to_ambient(&s.du))
            .collect();
        Ok((pts, vel))
    }

    /// Intrinsic transport of coefficient vector `v0` to every sample.
    pub fn intrinsic_transport_field(
        &self,
        curve: &IntrinsicCurve,
        v0: &DVector<f64>,
    ) -> Result<Vec<DVector<f64>>> {
        let frames = self.curve_frames(curve)?;
        rk4_on_samples(curve.samples.len(), curve.ds(), v0, |i, c| {
            Ok(-frames[i].christoffel(&self.space, &curve.samples[i].du, c))
        })
    }

    /// Intrinsic parallel transport of `v0` to the curve end (coefficients).
    pub fn intrinsic_parallel_transport(
        &self,
        curve: &IntrinsicCurve,
        v0: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let mut field = self.intrinsic_transport_field(curve, v0)?;
        Ok(field.pop().expect("curve has samples"))
    }

    /// Ambient acceleration at sample `index` by Richardson-extrapolated
    /// second differences of the sampled image; independent of `Pi`.
    pub fn ambient_acceleration_fd(&self, curve: &IntrinsicCurve, index: usize) -> Result<DVector<f64>> {
        let n = curve.samples.len();
        if index < 2 || index + 2 >= n {
            return Err(GeomError::InvalidConfiguration(
                "finite-difference acceleration needs two samples on each side".into(),
            ));
        }
        let x = |i: usize| self.eval(&curve.samples[i].u);
        let h = curve.ds();
        let x0 = x(index);
        let d1 = (x(index + 1) - &x0 * 2.0 + x(index - 1)) / (h * h);
        let d2 = (x(index + 2) - &x0 * 2.0 + x(index - 2)) / (4.0 * h * h);
        let mut acc = (d1 * 4.0 - d2) / 3.0;
        if self.space.is_chart() {
            let frame = self.frame(&curve.samples[index].u)?;
            let vel = frame.to_ambient(&curve.samples[index].du);
            acc += self.space.connection_correction(&x0, &vel, &vel)?;
        }
        Ok(self.space.project_tangent(&x0, &acc))
    }
}
