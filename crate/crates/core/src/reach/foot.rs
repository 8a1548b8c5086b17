//! Nearest-point projection onto an immersed submanifold.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::ambient::Point;
use crate::error::{GeomError, Result};
use crate::immersion::{AxisKind, Immersion};
use crate::numeric::halton;

const MAX_ITER: usize = 80;
const HESSIAN_STEP: f64 = 1e-4;

/// A nearest point of `M` to the query.
#[derive(Clone, Debug, Serialize)]
pub struct FootPoint {
    pub param: Vec<f64>,
    pub point: Vec<f64>,
    pub distance: f64,
}

impl FootPoint {
    pub fn param_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.param)
    }

    pub fn point_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.point)
    }
}

/// Global minimizers of `u -> d(q, F(u))`, clustered.
#[derive(Clone, Debug, Serialize)]
pub struct FootPointSet {
    pub query: Point,
    pub minimizers: Vec<FootPoint>,
    pub dist_tol: f64,
    pub cluster_tol: f64,
}

impl FootPointSet {
    pub fn multiplicity(&self) -> usize {
        self.minimizers.len()
    }

    /// `d(q, M)`.
    pub fn distance(&self) -> f64 {
        self.minimizers[0].distance
    }
}

/// Projection settings shared by all reach computations.
#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct FootConfig {
    /// Number of low-discrepancy starts for the local minimizations.
    pub starts: usize,
    pub dist_tol: f64,
    pub cluster_tol: f64,
}

impl FootConfig {
    pub fn for_dim(k: usize) -> Self {
        FootConfig {
            starts: 8 * k,
            dist_tol: 1e-9,
            cluster_tol: 1e-3,
        }
    }
}

/// A converged local minimizer of the distance to the query.
#[derive(Clone, Debug)]
pub struct LocalMinimum {
    pub param: DVector<f64>,
    pub point: DVector<f64>,
    pub distance: f64,
}

impl LocalMinimum {
    fn to_foot(&self) -> FootPoint {
        FootPoint {
            param: self.param.iter().copied().collect(),
            point: self.point.iter().copied().collect(),
            distance: self.distance,
        }
    }
}

/// Deterministic low-discrepancy starts covering the parameter domain.
pub fn start_params(imm: &Immersion, count: usize) -> Vec<DVector<f64>> {
    let dom = imm.domain();
    let k = dom.dim();
    (0..count)
        .map(|i| {
            let h = halton(i + 1, k);
            DVector::from_fn(k, |j, _| dom.lower[j] + (dom.upper[j] - dom.lower[j]) * h[j])
        })
        .collect()
}

/// A nearby log solution: its base point and vector.
type Seed<'s> = Option<(&'s DVector<f64>, &'s DVector<f64>)>;

struct Probe {
    point: DVector<f64>,
    distance: f64,
    grad: DVector<f64>,
    log: DVector<f64>,
}

/// Multi-start projector for one immersion.
pub struct Projector<'a> {
    imm: &'a Immersion,
    starts: Vec<DVector<f64>>,
    pub config: FootConfig,
}

impl<'a> Projector<'a> {
    pub fn new(imm: &'a Immersion, config: FootConfig) -> Result<Self> {
        imm.ensure_compact()?;
        if config.starts == 0 || !(config.dist_tol > 0.0) || !(config.cluster_tol > 0.0) {
            return Err(GeomError::InvalidConfiguration(
                "foot-point search needs starts >= 1 and positive tolerances".into(),
            ));
        }
        Ok(Projector {
            imm,
            starts: start_params(imm, config.starts),
            config,
        })
    }

    pub fn immersion(&self) -> &Immersion {
        self.imm
    }

    /// Log map from `x` to `q`. Charts start shooting from the coordinate chord
    /// when no nearby solution is known.
    fn log_to(&self, x: &DVector<f64>, q: &DVector<f64>, seed: Seed) -> Result<(f64, DVector<f64>)> {
        let space = self.imm.space();
        if !space.is_chart() {
            return space.log(x, q);
        }
        // shift a nearby solution by the change of base point; chord otherwise
        let guess = match seed {
            Some((base, log)) => log + (base - x),
            None => q - x,
        };
        space.log_near(x, q, Some(&guess))
    }

    fn distance(&self, q: &DVector<f64>, u: &DVector<f64>, guess: Seed) -> Result<(f64, DVector<f64>)> {
        self.log_to(&self.imm.eval(u), q, guess)
    }

    fn probe(&self, q: &DVector<f64>, u: &DVector<f64>, guess: Seed) -> Result<Probe> {
        let (point, tangents) = self.imm.tangents(u)?;
        let (distance, log) = self.log_to(&point, q, guess)?;
        let space = self.imm.space();
        let grad = DVector::from_fn(tangents.len(), |i, _| -space.inner(&point, &log, &tangents[i]));
        Ok(Probe {
            point,
            distance,
            grad,
            log,
        })
    }

    fn hessian(&self, q: &DVector<f64>, u: &DVector<f64>, at: &Probe) -> Result<DMatrix<f64>> {
        self.hessian_step(q, u, at, HESSIAN_STEP)
    }

    fn hessian_step(&self, q: &DVector<f64>, u: &DVector<f64>, at: &Probe, base: f64) -> Result<DMatrix<f64>> {
        let k = u.len();
        let dom = self.imm.domain();
        let mut h = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut a = u.clone();
            let mut b = u.clone();
            let mut step = base;
            if dom.axes[j] != AxisKind::Periodic {
                // keep the stencil inside closed axes
                let room = (u[j] - dom.lower[j]).min(dom.upper[j] - u[j]);
                if room < step {
                    step = room.max(1e-7);
                }
            }
            a[j] += step;
            b[j] -= step;
            let ga = self.probe(q, &a, Some((&at.point, &at.log)))?.grad;
            let gb = self.probe(q, &b, Some((&at.point, &at.log)))?.grad;
            h.set_column(j, &((ga - gb) / (2.0 * step)));
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    /// Whether `u` is a strict local minimizer of the distance to `q`
    /// (positive definite Hessian of the squared distance).
    pub fn is_strict_local_min(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<bool> {
        let pr = self.probe(q, u, None)?;
        let coarse = self.hessian_step(q, u, &pr, HESSIAN_STEP)?;
        let fine = self.hessian_step(q, u, &pr, 0.5 * HESSIAN_STEP)?;
        let h = (fine * 4.0 - coarse) / 3.0;
        let eig = SymmetricEigen::new(h).eigenvalues;
        Ok(eig.iter().all(|l| *l > 1e-9 * (1.0 + pr.distance)))
    }

    /// Cheap test whether some point of `M` is closer to `q` than `bound`.
    pub fn beats(&self, q: &DVector<f64>, bound: f64) -> Result<bool> {
        for u in &self.starts {
            if let Ok((d, _)) = self.distance(q, u, None) {
                if d < bound {
                    return Ok(true);
                }
            }
        }
        for u in &self.starts {
            if let Ok(m) = self.local_min(q, u) {
                if m.distance < bound {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Saddle-free damped Newton descent of `d(q, F(u))^2 / 2` from `u0`.
    pub fn local_min(&self, q: &DVector<f64>, u0: &DVector<f64>) -> Result<LocalMinimum> {
        let dom = self.imm.domain();
        let mut u = dom.clamp(u0);
        let mut cur = self.probe(q, &u, None)?;
        let span = (0..dom.dim())
            .map(|i| dom.upper[i] - dom.lower[i])
            .fold(f64::INFINITY, f64::min);
        let max_step = 0.25 * span;
        for _ in 0..MAX_ITER {
            if cur.grad.norm() == 0.0 {
                break;
            }
            let h = self.hessian(q, &u, &cur)?;
            let eig = SymmetricEigen::new(h);
            let scale = eig.eigenvalues.amax().max(1e-300);
            let mut step = DVector::zeros(u.len());
            for (i, lam) in eig.eigenvalues.iter().enumerate() {
                let v = eig.eigenvectors.column(i);
                let lam = lam.abs().max(1e-10 * scale).max(1e-300);
                step -= v * (v.dot(&cur.grad) / lam);
            }
            let len = step.norm();
            if len > max_step {
                step *= max_step / len;
            }
            let phi = 0.5 * cur.distance * cur.distance;
            let slope = cur.grad.dot(&step);
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-12 {
                let cand = dom.clamp(&(&u + &step * alpha));
                let x = self.imm.eval(&cand);
                let guess = &cur.log + (&cur.point - &x);
                // trial points are simply rejected when the warm shot fails
                if let Ok((d, log)) = self.imm.space().log_from(&x, q, &guess) {
                    let cphi = 0.5 * d * d;
                    if cphi <= phi + 1e-4 * alpha * slope {
                        accepted = Some((cand, d, log));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((next, d, log)) = accepted else { break };
            let moved = dom.separation(&next, &u);
            // predicted decrease far below the distance tolerance: converged
            if alpha == 1.0 && -slope < 1e-3 * self.config.dist_tol * cur.distance {
                cur.point = self.imm.eval(&next);
                cur.distance = d;
                cur.log = log;
                u = next;
                break;
            }
            u = next;
            cur = self.probe(q, &u, Some((&cur.point, &cur.log)))?;
            if moved < 1e-13 * (1.0 + u.norm()) {
                break;
            }
        }
        Ok(LocalMinimum {
            param: u,
            point: cur.point,
            distance: cur.distance,
        })
    }

    fn separated(&self, a: &LocalMinimum, b: &LocalMinimum) -> bool {
        let space = self.imm.space();
        let ambient = if space.is_chart() {
            let mid = (&a.point + &b.point) * 0.5;
            space.norm(&mid, &(&a.point - &b.point))
        } else {
            space.distance(&a.point, &b.point).unwrap_or(f64::INFINITY)
        };
        self.imm.domain().separation(&a.param, &b.param) > self.config.cluster_tol
            && ambient > 10.0 * self.config.dist_tol
    }

    /// Ambient separation of two points of `N` (metric-weighted chord for charts).
    pub fn chord(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let space = self.imm.space();
        if space.is_chart() {
            let mid = (a + b) * 0.5;
            space.norm(&mid, &(a - b))
        } else {
            space.distance(a, b).unwrap_or(f64::INFINITY)
        }
    }

    fn point_at(&self, q: &DVector<f64>, u: DVector<f64>) -> Result<LocalMinimum> {
        let u = self.imm.domain().clamp(&u);
        let point = self.imm.eval(&u);
        let distance = self.imm.space().distance(&point, q)?;
        Ok(LocalMinimum {
            param: u,
            point,
            distance,
        })
    }

    /// Closest point of `M` on the boundary of the `chord` neighbourhood of `first`,
    /// using the induced metric at `first` to size the parameter ellipse.
    fn boundary_min(&self, q: &DVector<f64>, first: &LocalMinimum, chord: f64) -> Result<Option<LocalMinimum>> {
        let (x, tangents) = self.imm.tangents(&first.param)?;
        let k = tangents.len();
        let space = self.imm.space();
        let g = DMatrix::from_fn(k, k, |i, j| space.inner(&x, &tangents[i], &tangents[j]));
        let dom = self.imm.domain();
        let cap = (0..k).map(|i| 0.5 * (dom.upper[i] - dom.lower[i])).fold(f64::INFINITY, f64::min);
        let along = |dir: &DVector<f64>| -> Result<LocalMinimum> {
            let len = (dir.transpose() * &g * dir)[(0, 0)].sqrt();
            let r = if len > 0.0 { (chord / len).min(cap) } else { cap };
            let mut m = self.point_at(q, &first.param + dir * r)?;
            // the linearised ellipse is useless where the chart degenerates (poles)
            if self.chord(&m.point, &first.point) < 0.5 * chord {
                m.distance = f64::INFINITY;
            }
            Ok(m)
        };
        let best = match k {
            1 => {
                let a = along(&DVector::from_element(1, 1.0))?;
                let b = along(&DVector::from_element(1, -1.0))?;
                if a.distance <= b.distance { a } else { b }
            }
            2 => {
                let dir = |psi: f64| DVector::from_vec(vec![psi.cos(), psi.sin()]);
                let m = 24;
                let step = std::f64::consts::TAU / m as f64;
                let mut best_j = 0;
                let mut best = along(&dir(0.0))?;
                for j in 1..m {
                    let c = along(&dir(step * j as f64))?;
                    if c.distance < best.distance {
                        best = c;
                        best_j = j;
                    }
                }
                // golden-section refinement of the angle
                let gr = 0.5 * (5f64.sqrt() - 1.0);
                let (mut a, mut b) = (step * (best_j as f64 - 1.0), step * (best_j as f64 + 1.0));
                let mut c = b - gr * (b - a);
                let mut d = a + gr * (b - a);
                let mut fc = along(&dir(c))?;
                let mut fd = along(&dir(d))?;
                for _ in 0..40 {
                    if fc.distance < fd.distance {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - gr * (b - a);
                        fc = along(&dir(c))?;
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + gr * (b - a);
                        fd = along(&dir(d))?;
                    }
                }
                for cand in [fc, fd] {
                    if cand.distance < best.distance {
                        best = cand;
                    }
                }
                best
            }
            _ => {
                let mut best: Option<LocalMinimum> = None;
                for i in 0..k {
                    for s in [1.0, -1.0] {
                        let dir = DVector::from_fn(k, |j, _| if j == i { s } else { 0.0 });
                        let c = along(&dir)?;
                        if best.as_ref().is_none_or(|b| c.distance < b.distance) {
                            best = Some(c);
                        }
                    }
                }
                best.expect("k >= 1")
            }
        };
        Ok(best.distance.is_finite().then_some(best))
    }

    /// Nearest point of `M` among those at chord distance at least `chord` from
    /// the nearest point `minima[0]`: either another local minimum or a point on
    /// the boundary of the excluded neighbourhood.
    pub fn partner(&self, q: &DVector<f64>, minima: &[LocalMinimum], chord: f64) -> Result<Option<LocalMinimum>> {
        let first = &minima[0];
        let interior = minima
            .iter()
            .skip(1)
            .find(|m| self.chord(&m.point, &first.point) >= chord)
            .cloned();
        let boundary = self.boundary_min(q, first, chord)?;
        Ok(match (interior, boundary) {
            (Some(a), Some(b)) => Some(if a.distance <= b.distance { a } else { b }),
            (a, b) => a.or(b),
        })
    }

    /// All distinct local minima reached from the starts plus `extra` starts,
    /// sorted by distance.
    pub fn minima(&self, q: &DVector<f64>, extra: &[DVector<f64>]) -> Result<Vec<LocalMinimum>> {
        self.minima_from(q, extra.iter().chain(self.starts.iter()))
    }

    /// Local minima reached from `warm` only: for tracking foot points of a
    /// slowly moving query. Not a global search.
    pub fn minima_warm(&self, q: &DVector<f64>, warm: &[DVector<f64>]) -> Result<Vec<LocalMinimum>> {
        self.minima_from(q, warm.iter())
    }

    fn minima_from<'b>(&self, q: &DVector<f64>, starts: impl Iterator<Item = &'b DVector<f64>>) -> Result<Vec<LocalMinimum>> {
        let mut found: Vec<LocalMinimum> = starts.filter_map(|u0| self.local_min(q, u0).ok()).collect();
        if found.is_empty() {
            return Err(GeomError::ProjectionFailure);
        }
        found.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        let mut out: Vec<LocalMinimum> = Vec::new();
        for m in found {
            if out.iter().all(|o| self.separated(o, &m)) {
                out.push(m);
            }
        }
        Ok(out)
    }

    /// The foot-point set built from already computed minima.
    pub fn foot_set_from(&self, q: &DVector<f64>, minima: &[LocalMinimum]) -> FootPointSet {
        self.foot_set_within(q, minima, self.config.dist_tol)
    }

    /// Like [`Projector::foot_set_from`] with an explicit distance tolerance.
    pub fn foot_set_within(&self, q: &DVector<f64>, minima: &[LocalMinimum], tol: f64) -> FootPointSet {
        let dmin = minima[0].distance;
        FootPointSet {
            query: Point(q.clone()),
            minimizers: minima
                .iter()
                .filter(|m| m.distance <= dmin + tol)
                .map(LocalMinimum::to_foot)
                .collect(),
            dist_tol: tol,
            cluster_tol: self.config.cluster_tol,
        }
    }

    pub fn foot_set(&self, q: &DVector<f64>, extra: &[DVector<f64>]) -> Result<FootPointSet> {
        let minima = self.minima(q, extra)?;
        Ok(self.foot_set_from(q, &minima))
    }
}

/// Foot points of `q` on `imm`, found from `starts` low-discrepancy starts.
pub fn foot_points(
    imm: &Immersion,
    q: &Point,
    starts: usize,
    dist_tol: f64,
    cluster_tol: f64,
) -> Result<FootPointSet> {
    imm.space().check_point(&q.0)?;
    let proj = Projector::new(
        imm,
        FootConfig {
            starts,
            dist_tol,
            cluster_tol,
        },
    )?;
    proj.foot_set(&q.0, &[])
}
