//! Reach as the infimum of the distance from the medial set to `M`.
//!
//! A point `x` is marked when, besides its nearest point `p1`, some point of `M`
//! at chord distance at least `S` from `p1` is (nearly) as close as `p1`. The gap
//! `G(x) = d2(x) - d1(x)` vanishes on the medial set, so marked points are
//! located by minimising `d1 + 4 (D/S)^2 G` with a compass search, `D` being the
//! sampled diameter of `M`. The weight makes the penalty dominate the slope of
//! `d1` even for continuous families of foot points, where `G` only grows like
//! `dist(x, med) * S^2 / (2 d1^2)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::collision::sampled_diameter;
use super::foot::{FootConfig, LocalMinimum, Projector};
use super::assign::Classification;
use super::{EstimateStatus, ReachEstimate, ReachMethod, Resolution, Witness};
use crate::ambient::{AmbientKind, AmbientSpace};
use crate::error::{GeomError, Result};
use crate::immersion::Immersion;
use crate::numeric::{gram_schmidt, halton};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct MedialConfig {
    pub ambient_samples: usize,
    /// Minimum chord between two foot points, as a fraction of the sampled diameter.
    pub separation: f64,
    /// Number of probe points refined by the compass search.
    pub candidates: usize,
    /// Final compass step.
    pub min_step: f64,
    /// Largest gap `d2 - d1` accepted at a refined medial point.
    pub gap_tol: f64,
    pub foot: FootConfig,
}

impl MedialConfig {
    pub fn new(imm: &Immersion, ambient_samples: usize) -> Self {
        MedialConfig {
            ambient_samples,
            separation: 0.01,
            candidates: 4,
            min_step: 1e-7,
            gap_tol: 1e-6,
            foot: FootConfig::for_dim(imm.param_dim()),
        }
    }
}

#[derive(Clone, Debug)]
struct Gap {
    first: LocalMinimum,
    second: LocalMinimum,
    minima: Vec<LocalMinimum>,
}

impl Gap {
    fn gap(&self) -> f64 {
        self.second.distance - self.first.distance
    }
}

struct Medial<'a> {
    proj: Projector<'a>,
    chord: f64,
    weight: f64,
}

impl Medial<'_> {
    fn imm(&self) -> &Immersion {
        self.proj.immersion()
    }

    fn space(&self) -> &AmbientSpace {
        self.imm().space()
    }

    fn gap(&self, q: &DVector<f64>, warm: &[DVector<f64>]) -> Result<Gap> {
        self.gap_with(q, self.proj.minima(q, warm)?)
    }

    fn gap_with(&self, q: &DVector<f64>, minima: Vec<crate::reach::LocalMinimum>) -> Result<Gap> {
        let first = minima[0].clone();
        let second = self
            .proj
            .partner(q, &minima, self.chord)?
            .ok_or(GeomError::ProjectionFailure)?;
        Ok(Gap {
            first,
            second,
            minima,
        })
    }

    fn objective(&self, g: &Gap) -> f64 {
        g.first.distance + self.weight * g.gap()
    }

    /// Orthonormal directions at `x` and the move `x -> x + h e`.
    fn directions(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let space = self.space();
        match space.kind() {
            AmbientKind::Euclidean { .. } | AmbientKind::Chart { .. } => (0..x.len())
                .map(|i| DVector::from_fn(x.len(), |j, _| if i == j { 1.0 } else { 0.0 }))
                .collect(),
            _ => gram_schmidt(
                &space.tangent_spanning_set(x),
                &[],
                |a, b| space.inner(x, a, b),
                space.dim(),
                1e-6,
            ),
        }
    }

    fn moved(&self, x: &DVector<f64>, e: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let space = self.space();
        match space.kind() {
            AmbientKind::Euclidean { .. } => Ok(x + e * h),
            AmbientKind::Chart { .. } => {
                let y = x + e * h;
                space.check_point(&y)?;
                Ok(y)
            }
            _ => space.exp(x, &(e * h)),
        }
    }

    /// Compass search with opportunistic polling: the last successful
    /// direction is tried first and the step grows after repeated success.
    fn descend(&self, x0: DVector<f64>, g0: Gap, h0: f64, min_step: f64) -> (DVector<f64>, Gap) {
        let (mut x, mut g) = (x0, g0);
        let mut f = self.objective(&g);
        let mut h = h0;
        let mut polls = 0;
        let mut last: Option<(usize, f64)> = None;
        let mut streak = 0;
        while h >= min_step && polls < 400 {
            let warm = [g.first.param.clone(), g.second.param.clone()];
            let dirs = self.directions(&x);
            let mut order: Vec<(usize, f64)> = (0..dirs.len()).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect();
            if let Some(l) = last {
                order.retain(|o| *o != l);
                order.insert(0, l);
            }
            let mut moved = false;
            for (i, s) in order {
                polls += 1;
                let Ok(y) = self.moved(&x, &(&dirs[i] * s), h) else { continue };
                // charts track the current foot points only; shooting is too costly for a global search per poll
                let minima = if self.proj.immersion().space().is_chart() {
                    self.proj.minima_warm(&y, &warm)
                } else {
                    self.proj.minima(&y, &warm)
                };
                let Ok(gy) = minima.and_then(|m| self.gap_with(&y, m)) else {
                    continue;
                };
                let fy = self.objective(&gy);
                // sufficient decrease keeps noise in the weighted gap from driving the walk
                if fy < f - 1e-3 * h {
                    f = fy;
                    x = y;
                    g = gy;
                    last = Some((i, s));
                    moved = true;
                    break;
                }
            }
            if moved {
                streak += 1;
                if streak >= 2 {
                    h = (2.0 * h).min(h0);
                    streak = 0;
                }
            } else {
                h *= 0.5;
                last = None;
                streak = 0;
            }
        }
        // global re-check of the final point
        let warm = [g.first.param.clone(), g.second.param.clone()];
        match self.gap(&x, &warm) {
            Ok(full) => (x, full),
            Err(_) => (x, g),
        }
    }
}

/// Probe points covering a region that contains the medial set, with their spacing.
fn probes(imm: &Immersion, count: usize) -> Result<(Vec<DVector<f64>>, f64)> {
    let space = imm.space();
    let samples: Vec<DVector<f64>> = imm
        .domain()
        .grid(if imm.param_dim() == 1 { 256 } else { 32 })
        .iter()
        .map(|u| imm.eval(u))
        .collect();
    match space.kind() {
        AmbientKind::Euclidean { .. } | AmbientKind::Chart { .. } => {
            let n = space.coord_dim();
            let mut lo = DVector::from_element(n, f64::INFINITY);
            let mut hi = DVector::from_element(n, f64::NEG_INFINITY);
            for p in &samples {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
            let pad = (&hi - &lo) * 0.25 + DVector::from_element(n, 1e-3);
            let lo = lo - &pad;
            let hi = hi + pad;
            let mut out = Vec::with_capacity(count);
            let mut i = 0;
            while out.len() < count && i < 8 * count {
                i += 1;
                let h = halton(i, n);
                let x = DVector::from_fn(n, |j, _| lo[j] + (hi[j] - lo[j]) * h[j]);
                if space.check_point(&x).is_ok() {
                    out.push(x);
                }
            }
            let volume: f64 = (&hi - &lo).iter().product();
            Ok((out, (volume / count as f64).powf(1.0 / n as f64)))
        }
        AmbientKind::Sphere { radius, .. } => {
            let n = space.dim();
            let radius = *radius;
            let out: Vec<DVector<f64>> = (1..=count)
                .map(|i| {
                    if n == 2 {
                        let h = halton(i, 2);
                        let z = 1.0 - 2.0 * h[0];
                        let s = (1.0 - z * z).max(0.0).sqrt();
                        let phi = std::f64::consts::TAU * h[1];
                        DVector::from_vec(vec![radius * s * phi.cos(), radius * s * phi.sin(), radius * z])
                    } else {
                        let h = halton(i, n + 1);
                        let v = DVector::from_fn(n + 1, |j, _| 2.0 * h[j] - 1.0 + 1e-3 * (j as f64 + 1.0));
                        v.normalize() * radius
                    }
                })
                .collect();
            let area = 4.0 * std::f64::consts::PI * radius * radius;
            Ok((out, (area / count as f64).powf(1.0 / n as f64)))
        }
        AmbientKind::Hyperbolic { .. } => {
            let n = space.dim();
            let mean = samples.iter().fold(DVector::zeros(space.coord_dim()), |a, p| a + p) / samples.len() as f64;
            let o = space.project_point(&mean);
            let mut rad: f64 = 0.0;
            for p in &samples {
                rad = rad.max(space.distance(&o, p)?);
            }
            let rad = 1.25 * rad + 1e-3;
            let basis = gram_schmidt(&space.tangent_spanning_set(&o), &[], |a, b| space.inner(&o, a, b), n, 1e-6);
            let mut out = Vec::with_capacity(count);
            let mut i = 0;
            while out.len() < count && i < 8 * count {
                i += 1;
                let h = halton(i, n);
                let c: Vec<f64> = h.iter().map(|v| 2.0 * v - 1.0).collect();
                if c.iter().map(|v| v * v).sum::<f64>() > 1.0 {
                    continue;
                }
                let v = basis.iter().zip(&c).fold(DVector::zeros(o.len()), |a, (b, s)| a + b * (*s * rad));
                out.push(space.exp(&o, &v)?);
            }
            Ok((out, 2.0 * rad / (count as f64).powf(1.0 / n as f64)))
        }
    }
}

pub fn reach_medial_infimum(imm: &Immersion, ambient_samples: usize) -> Result<ReachEstimate> {
    reach_medial_infimum_with(imm, &MedialConfig::new(imm, ambient_samples))
}

pub fn reach_medial_infimum_with(imm: &Immersion, cfg: &MedialConfig) -> Result<ReachEstimate> {
    if cfg.ambient_samples == 0 || cfg.candidates == 0 || !(cfg.separation > 0.0) || !(cfg.min_step > 0.0) {
        return Err(GeomError::InvalidConfiguration(
            "medial search needs ambient_samples >= 1, candidates >= 1 and positive steps".into(),
        ));
    }
    let proj = Projector::new(imm, cfg.foot)?;
    let diameter = sampled_diameter(imm, 16)?;
    let chord = cfg.separation * diameter;
    let medial = Medial {
        proj,
        chord,
        weight: 4.0 / (cfg.separation * cfg.separation),
    };
    let (points, spacing) = probes(imm, cfg.ambient_samples)?;

    let mut scored: Vec<(f64, DVector<f64>, Gap)> = points
        .into_iter()
        .filter_map(|x| {
            let g = medial.gap(&x, &[]).ok()?;
            Some((medial.objective(&g), x, g))
        })
        .collect();
    if scored.is_empty() {
        return Err(GeomError::ProjectionFailure);
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut chosen: Vec<(DVector<f64>, Gap)> = Vec::new();
    for (_, x, g) in scored {
        if chosen.len() >= cfg.candidates {
            break;
        }
        if chosen.iter().all(|(y, _)| medial.proj.chord(&x, y) > 2.0 * spacing) {
            chosen.push((x, g));
        }
    }

    let refined: Vec<(DVector<f64>, Gap)> = chosen
        .into_iter()
        .map(|(x, g)| medial.descend(x, g, spacing, cfg.min_step))
        .collect();
    let resolution = Resolution {
        ambient_samples: cfg.ambient_samples,
        ..Resolution::default()
    };
    let witness_of = |x: &DVector<f64>, g: &Gap| {
        let mut minima = g.minima.clone();
        if g.gap() <= cfg.gap_tol {
            minima.push(g.second.clone());
        }
        let foot_points = medial.proj.foot_set_within(x, &minima, cfg.gap_tol.max(cfg.foot.dist_tol));
        Witness {
            point: x.iter().copied().collect(),
            distance: g.first.distance,
            classification: Some(Classification::from_multiplicity(foot_points.multiplicity())),
            foot_points,
            source_param: None,
        }
    };
    let mut marked: Vec<Witness> = refined
        .iter()
        .filter(|(_, g)| g.gap() <= cfg.gap_tol)
        .map(|(x, g)| witness_of(x, g))
        .collect();
    marked.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    if marked.is_empty() {
        let (x, g) = refined
            .iter()
            .min_by(|a, b| a.1.gap().total_cmp(&b.1.gap()))
            .expect("at least one candidate");
        let w = witness_of(x, g);
        return Ok(ReachEstimate {
            tau_hat: w.distance,
            method: ReachMethod::MedialInfimum,
            witness: w,
            near_witnesses: Vec::new(),
            resolution,
            status: EstimateStatus::InsufficientResolution,
        });
    }
    let tau_hat = marked[0].distance;
    if !(tau_hat > 0.0) {
        return Err(GeomError::InvalidReach(tau_hat));
    }
    let witness = marked[0].clone();
    Ok(ReachEstimate {
        tau_hat,
        method: ReachMethod::MedialInfimum,
        witness,
        near_witnesses: marked,
        resolution,
        status: EstimateStatus::Converged,
    })
}
