//! Chart-defined metrics: Christoffel symbols and curvature by central
//! differences of the metric, geodesics and transport by fixed-step RK4, and
//! the two-point problem by multi-start damped Newton shooting.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{AmbientKind, AmbientSpace, GeodesicPath, GeodesicSample};
use crate::error::{GeomError, Result};

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Metric evaluator for chart ambients.
#[derive(Clone)]
pub enum ChartMetric {
    /// Identity metric.
    Flat,
    /// Round sphere of the given radius in stereographic coordinates,
    /// `g = (2R^2 / (R^2 + |x|^2))^2 * I`.
    StereographicSphere { radius: f64 },
    /// Conformally perturbed flat metric `g = exp(2 a exp(-|x|^2)) * I`.
    ConformalBump { amplitude: f64 },
    Custom {
        name: String,
        eval: MetricFn,
    },
}

impl fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartMetric::Flat => write!(f, "flat"),
            ChartMetric::StereographicSphere { radius } => write!(f, "stereographic-sphere(R={radius})"),
            ChartMetric::ConformalBump { amplitude } => write!(f, "conformal-bump(a={amplitude})"),
            ChartMetric::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

impl ChartMetric {
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let r2: f64 = x.iter().map(|c| c * c).sum();
        match self {
            ChartMetric::Flat => DMatrix::identity(n, n),
            ChartMetric::StereographicSphere { radius } => {
                let lam = 2.0 * radius * radius / (radius * radius + r2);
                DMatrix::identity(n, n) * (lam * lam)
            }
            ChartMetric::ConformalBump { amplitude } => {
                DMatrix::identity(n, n) * (2.0 * amplitude * (-r2).exp()).exp()
            }
            ChartMetric::Custom { eval, .. } => eval(x),
        }
    }

    pub fn constant_curvature(&self) -> Option<f64> {
        match self {
            ChartMetric::Flat => Some(0.0),
            ChartMetric::StereographicSphere { radius } => Some(1.0 / (radius * radius)),
            _ => None,
        }
    }

    fn checked_eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.eval(x);
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(GeomError::eval("chart metric"))
        }
    }
}

fn fd_step(x: f64, rel: f64) -> f64 {
    rel * (1.0 + x.abs())
}

/// `d g / d x_m` for every coordinate `m`, central differences.
fn metric_gradient(metric: &ChartMetric, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|m| {
            let h = fd_step(x[m], 1e-5);
            xp[m] = x[m] + h;
            let gp = metric.checked_eval(&xp)?;
            xp[m] = x[m] - h;
            let gm = metric.checked_eval(&xp)?;
            xp[m] = x[m];
            Ok((gp - gm) / (2.0 * h))
        })
        .collect()
}

/// `Gamma^k_ij a^i b^j`.
pub(super) fn christoffel_contract(
    metric: &ChartMetric,
    x: &[f64],
    a: &DVector<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = x.len();
    let g = metric.checked_eval(x)?;
    let dg = metric_gradient(metric, x)?;
    let mut da = DMatrix::zeros(n, n);
    let mut db = DMatrix::zeros(n, n);
    for m in 0..n {
        da += &dg[m] * a[m];
        db += &dg[m] * b[m];
    }
    let mut lowered = (&da * b + &db * a) * 0.5;
    for l in 0..n {
        lowered[l] -= 0.5 * (a.transpose() * &dg[l] * b)[(0, 0)];
    }
    g.cholesky()
        .map(|c| c.solve(&lowered))
        .ok_or_else(|| GeomError::eval("chart metric is not positive definite"))
}

/// Full Christoffel table, `table[k][(i, j)] = Gamma^k_ij`.
fn christoffel_table(metric: &ChartMetric, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = x.len();
    let g = metric.checked_eval(x)?;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| GeomError::eval("chart metric is singular"))?;
    let dg = metric_gradient(metric, x)?;
    let mut lowered = vec![DMatrix::zeros(n, n); n];
    for (l, low) in lowered.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                low[(i, j)] = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
            }
        }
    }
    Ok((0..n)
        .map(|k| {
            let mut m = DMatrix::zeros(n, n);
            for l in 0..n {
                m += &lowered[l] * ginv[(k, l)];
            }
            m
        })
        .collect())
}

/// Sectional curvature from second differences of the metric.
pub(super) fn sectional_curvature(
    metric: &ChartMetric,
    x: &[f64],
    v: &DVector<f64>,
    w: &DVector<f64>,
    gram: f64,
) -> Result<f64> {
    let n = x.len();
    let g = metric.checked_eval(x)?;
    let gamma = christoffel_table(metric, x)?;
    let h: Vec<f64> = x.iter().map(|c| fd_step(*c, 1e-4)).collect();
    let mut d2 = vec![vec![DMatrix::zeros(n, n); n]; n];
    let mut xs = x.to_vec();
    for c in 0..n {
        for d in c..n {
            let m = if c == d {
                xs[c] = x[c] + h[c];
                let gp = metric.checked_eval(&xs)?;
                xs[c] = x[c] - h[c];
                let gm = metric.checked_eval(&xs)?;
                xs[c] = x[c];
                (gp - &g * 2.0 + gm) / (h[c] * h[c])
            } else {
                let mut corner = |sc: f64, sd: f64| {
                    xs[c] = x[c] + sc * h[c];
                    xs[d] = x[d] + sd * h[d];
                    let r = metric.checked_eval(&xs);
                    xs[c] = x[c];
                    xs[d] = x[d];
                    r
                };
                let pp = corner(1.0, 1.0)?;
                let pm = corner(1.0, -1.0)?;
                let mp = corner(-1.0, 1.0)?;
                let mm = corner(-1.0, -1.0)?;
                (pp - pm - mp + mm) / (4.0 * h[c] * h[d])
            };
            d2[c][d] = m.clone();
            d2[d][c] = m;
        }
    }
    // R_abcd = 1/2 (g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac)
    //        + g_ef (Gamma^e_bc Gamma^f_ad - Gamma^e_bd Gamma^f_ac)
    let riemann = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        let mut r = 0.5
            * (d2[b][c][(a, d)] + d2[a][d][(b, c)] - d2[b][d][(a, c)] - d2[a][c][(b, d)]);
        for e in 0..n {
            for f in 0..n {
                r += g[(e, f)]
                    * (gamma[e][(b, c)] * gamma[f][(a, d)] - gamma[e][(b, d)] * gamma[f][(a, c)]);
            }
        }
        r
    };
    let mut num = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let coeff = v[a] * w[b] * v[c] * w[d];
                    if coeff != 0.0 {
                        num += coeff * riemann(a, b, c, d);
                    }
                }
            }
        }
    }
    Ok(num / gram)
}

fn domain_radius(space: &AmbientSpace) -> (f64, &ChartMetric) {
    match space.kind() {
        AmbientKind::Chart {
            domain_radius,
            metric,
            ..
        } => (*domain_radius, metric),
        _ => unreachable!("chart routine on a non-chart space"),
    }
}

/// Integrate the geodesic equation on `[0, 1]`; returns the end point and velocity.
pub(super) fn integrate_geodesic(
    space: &AmbientSpace,
    x: &DVector<f64>,
    v: &DVector<f64>,
    steps: usize,
    mut out: Option<&mut Vec<GeodesicSample>>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (radius, metric) = domain_radius(space);
    let n = x.len();
    let mut y0 = DVector::zeros(2 * n);
    y0.rows_mut(0, n).copy_from(x);
    y0.rows_mut(n, n).copy_from(v);
    let rhs = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let pos = y.rows(0, n).into_owned();
        let vel = y.rows(n, n).into_owned();
        let acc = -christoffel_contract(metric, pos.as_slice(), &vel, &vel)?;
        let mut dy = DVector::zeros(2 * n);
        dy.rows_mut(0, n).copy_from(&vel);
        dy.rows_mut(n, n).copy_from(&acc);
        Ok(dy)
    };
    let dt = 1.0 / steps as f64;
    let y = space.rk4(rhs, y0, steps, |i, y| {
        let pos = y.rows(0, n).into_owned();
        if pos.norm() > radius || !pos.iter().all(|c| c.is_finite()) {
            return Err(GeomError::DomainEscape {
                at: pos.iter().copied().collect(),
            });
        }
        if let Some(out) = out.as_deref_mut() {
            out.push(GeodesicSample {
                t: i as f64 * dt,
                point: pos,
                velocity: y.rows(n, n).into_owned(),
            });
        }
        Ok(())
    })?;
    Ok((y.rows(0, n).into_owned(), y.rows(n, n).into_owned()))
}

/// Coupled geodesic + transport integration from the path start with `steps` steps.
fn integrate_transport(
    space: &AmbientSpace,
    path: &GeodesicPath,
    w: &DVector<f64>,
    steps: usize,
    mut record: Option<&mut Vec<DVector<f64>>>,
) -> Result<DVector<f64>> {
    let (_, metric) = domain_radius(space);
    let n = w.len();
    let mut y0 = DVector::zeros(3 * n);
    y0.rows_mut(0, n).copy_from(path.start());
    y0.rows_mut(n, n).copy_from(path.initial_velocity());
    y0.rows_mut(2 * n, n).copy_from(w);
    let rhs = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let pos = y.rows(0, n).into_owned();
        let vel = y.rows(n, n).into_owned();
        let field = y.rows(2 * n, n).into_owned();
        let acc = -christoffel_contract(metric, pos.as_slice(), &vel, &vel)?;
        let dw = -christoffel_contract(metric, pos.as_slice(), &vel, &field)?;
        let mut dy = DVector::zeros(3 * n);
        dy.rows_mut(0, n).copy_from(&vel);
        dy.rows_mut(n, n).copy_from(&acc);
        dy.rows_mut(2 * n, n).copy_from(&dw);
        Ok(dy)
    };
    let y = space.rk4(rhs, y0, steps, |_, y| {
        if let Some(rec) = record.as_deref_mut() {
            rec.push(y.rows(2 * n, n).into_owned());
        }
        Ok(())
    })?;
    Ok(y.rows(2 * n, n).into_owned())
}

pub(super) fn transport_samples(
    space: &AmbientSpace,
    path: &GeodesicPath,
    w: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(path.samples.len());
    integrate_transport(space, path, w, path.steps(), Some(&mut out))?;
    Ok(out)
}

/// Transport with a step-halving error estimate.
pub(super) fn transport_with_check(
    space: &AmbientSpace,
    path: &GeodesicPath,
    w: &DVector<f64>,
) -> Result<DVector<f64>> {
    let steps = path.steps();
    let fine = integrate_transport(space, path, w, steps, None)?;
    let coarse = integrate_transport(space, path, w, (steps / 2).max(1), None)?;
    let end = path.end();
    let scale = space.norm(end, &fine).max(1.0);
    // RK4: error of the fine solution is about 1/15 of the difference.
    let estimate = space.norm(end, &(&fine - &coarse)) / 15.0 / scale;
    let tolerance = 1e-6;
    if estimate > tolerance {
        return Err(GeomError::Resolution {
            estimate,
            tolerance,
        });
    }
    Ok(fine)
}

const SHOOT_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 30;

fn newton_shoot(
    space: &AmbientSpace,
    p: &DVector<f64>,
    q: &DVector<f64>,
    v0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = p.len();
    let residual = |v: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(integrate_geodesic(space, p, v, space.ode_steps(), None)?.0 - q)
    };
    let mut v = v0.clone();
    let mut r = residual(&v)?;
    let mut rn = r.norm();
    for _ in 0..MAX_NEWTON {
        if rn < 1e-11 * (1.0 + q.norm()) {
            break;
        }
        // forward differences: Newton only needs an approximate Jacobian
        let mut jac = DMatrix::zeros(n, n);
        let h = 1e-7 * (1.0 + v.norm());
        for j in 0..n {
            let mut vp = v.clone();
            vp[j] += h;
            let col = (residual(&vp)? - &r) / h;
            jac.set_column(j, &col);
        }
        let step = jac
            .lu()
            .solve(&(-&r))
            .ok_or(GeomError::Convergence { residual: rn })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = &v + &step * lambda;
            if let Ok(rc) = residual(&cand) {
                let rcn = rc.norm();
                if rcn < rn {
                    v = cand;
                    r = rc;
                    rn = rcn;
                    accepted = true;
                    break;
                }
            }
            if rn <= 1e-2 * SHOOT_TOL {
                // already at the integration noise floor
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rn <= SHOOT_TOL {
        Ok(v)
    } else {
        Err(GeomError::Convergence { residual: rn })
    }
}

fn initial_guesses(space: &AmbientSpace, p: &DVector<f64>, q: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = p.len();
    let direct = q - p;
    let mut out = vec![direct.clone()];
    let len = space.norm(p, &direct);
    if len == 0.0 {
        return out;
    }
    // Eight unit directions in the plane of the chord and one further axis.
    let e1 = &direct / direct.norm();
    let axis = (0..n)
        .map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
        .map(|e| &e - &e1 * e1.dot(&e))
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_else(|| DVector::zeros(n));
    let e2 = if axis.norm() > 1e-12 { &axis / axis.norm() } else { axis };
    for k in 0..8 {
        let a = std::f64::consts::TAU * k as f64 / 8.0;
        let dir = &e1 * a.cos() + &e2 * a.sin();
        let unit = space.norm(p, &dir);
        if unit > 0.0 {
            out.push(dir * (len / unit));
        }
    }
    out
}

/// Two-point boundary problem: minimal `v` with `exp_p(v) = q`.
pub(super) fn shoot(
    space: &AmbientSpace,
    p: &DVector<f64>,
    q: &DVector<f64>,
    guess: Option<&DVector<f64>>,
) -> Result<(f64, DVector<f64>)> {
    if (p - q).norm() == 0.0 {
        return Ok((0.0, DVector::zeros(p.len())));
    }
    if let Some(g) = guess {
        let v = newton_shoot(space, p, q, g)?;
        return Ok((space.norm(p, &v), v));
    }
    let mut solutions: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut last_err = GeomError::Convergence {
        residual: f64::INFINITY,
    };
    for start in initial_guesses(space, p, q) {
        match newton_shoot(space, p, q, &start) {
            Ok(v) => {
                let len = space.norm(p, &v);
                if !solutions
                    .iter()
                    .any(|(_, s)| (s - &v).norm() <= 1e-5 * (1.0 + v.norm()))
                {
                    solutions.push((len, v));
                }
            }
            Err(e) => last_err = e,
        }
    }
    if solutions.is_empty() {
        return Err(last_err);
    }
    solutions.sort_by(|a, b| a.0.total_cmp(&b.0));
    if solutions.len() > 1 && (solutions[1].0 - solutions[0].0).abs() <= 1e-7 * (1.0 + solutions[0].0)
    {
        return Err(GeomError::NonUniqueGeodesic(format!(
            "two shooting solutions of length {:.9}",
            solutions[0].0
        )));
    }
    Ok(solutions.swap_remove(0))
}
