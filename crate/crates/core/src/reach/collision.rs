//! Reach as the first normal-ray collision (the normal-tube characterisation).

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assign::Classification;
use super::foot::{FootConfig, LocalMinimum, Projector};
use super::{EstimateStatus, ReachEstimate, ReachMethod, Resolution, Witness};
use crate::error::{GeomError, Result};
use crate::immersion::Immersion;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct CollisionConfig {
    /// Points per parameter axis of the (nested) surface grid.
    pub surface_samples: usize,
    /// Directions per normal circle in codimension 2; codimension 1 always uses `±ν`.
    pub normal_samples: usize,
    pub march_step: f64,
    /// March horizon; defaults to 4 x the diameter of the sampled image.
    pub horizon: Option<f64>,
    /// Width of the final bisection bracket.
    pub crossing_tol: f64,
    /// Chord (fraction of the sampled diameter) beyond which an equally near
    /// point counts as a second foot point of a witness.
    pub separation: f64,
    pub foot: FootConfig,
}

impl CollisionConfig {
    pub fn new(imm: &Immersion, surface_samples: usize, normal_samples: usize, march_step: f64) -> Self {
        CollisionConfig {
            surface_samples,
            normal_samples,
            march_step,
            horizon: None,
            crossing_tol: 1e-6,
            separation: 0.01,
            foot: FootConfig::for_dim(imm.param_dim()),
        }
    }
}

struct Ray {
    u: DVector<f64>,
    p: DVector<f64>,
    eta: DVector<f64>,
}

enum RayEnd {
    Crossing { value: f64, witness: Witness },
    Open { witness: Witness },
    Pruned,
}

struct Marcher<'a> {
    proj: Projector<'a>,
    cfg: CollisionConfig,
    chord: f64,
}

impl Marcher<'_> {
    fn space(&self) -> &crate::ambient::AmbientSpace {
        self.proj.immersion().space()
    }

    fn at(&self, ray: &Ray, t: f64) -> Result<DVector<f64>> {
        self.space().exp(&ray.p, &(&ray.eta * t))
    }

    /// Distance from `x(t)` back to `p`. Charts use the ray length: shooting
    /// back would add integration error of the order of `dist_tol`.
    fn back_distance(&self, ray: &Ray, t: f64, x: &DVector<f64>) -> Result<f64> {
        if self.space().is_chart() {
            Ok(t * self.space().norm(&ray.p, &ray.eta))
        } else {
            self.space().distance(x, &ray.p)
        }
    }

    /// Whether `p` is still a foot point of `x(t)` (no point beats it by `dist_tol`).
    fn still_foot(&self, ray: &Ray, t: f64) -> Result<bool> {
        let x = self.at(ray, t)?;
        let dp = self.back_distance(ray, t, &x)?;
        Ok(!self.proj.beats(&x, dp - self.cfg.foot.dist_tol)?)
    }

    fn separated(&self, ray: &Ray, m: &LocalMinimum) -> bool {
        let tol = self.cfg.foot;
        let dom = self.proj.immersion().domain();
        let ambient = self.space().distance(&ray.p, &m.point).unwrap_or(f64::INFINITY);
        dom.separation(&ray.u, &m.param) > tol.cluster_tol && ambient > 10.0 * tol.dist_tol
    }

    fn witness_at(&self, ray: &Ray, t: f64, extra: &[DVector<f64>]) -> Result<Witness> {
        let x = self.at(ray, t)?;
        let mut starts = vec![ray.u.clone()];
        starts.extend_from_slice(extra);
        let mut minima = self.proj.minima(&x, &starts)?;
        if let Some(partner) = self.proj.partner(&x, &minima, self.chord)? {
            // a continuous family of foot points: every start converges to the
            // same point, but a macroscopically separated one is as near
            if partner.distance <= minima[0].distance + self.cfg.foot.dist_tol
                && minima.iter().all(|m| self.proj.chord(&m.point, &partner.point) >= 0.5 * self.chord)
            {
                minima.push(partner);
                minima.sort_by(|a, b| a.distance.total_cmp(&b.distance));
            }
        }
        let foot_points = self.proj.foot_set_from(&x, &minima);
        Ok(Witness {
            point: x.iter().copied().collect(),
            distance: foot_points.distance(),
            classification: Some(Classification::from_multiplicity(foot_points.multiplicity())),
            foot_points,
            source_param: Some(ray.u.iter().copied().collect()),
        })
    }

    /// Follow the competing minimizer `p'` found past the crossing and
    /// extrapolate `d(x(t), p) - d(x(t), p')` to zero from the right. The branch
    /// of `p'` may not exist below the crossing (continuous foot-point families),
    /// so it is only evaluated at `t >= hi`.
    fn equidistant(&self, ray: &Ray, lo: f64, hi: f64, comp: &LocalMinimum) -> Result<Option<(f64, LocalMinimum)>> {
        let branch = |t: f64, guess: &DVector<f64>| -> Result<Option<(f64, LocalMinimum)>> {
            let x = self.at(ray, t)?;
            let m = self.proj.local_min(&x, guess)?;
            if !self.separated(ray, &m) {
                return Ok(None);
            }
            Ok(Some((self.back_distance(ray, t, &x)? - m.distance, m)))
        };
        let Some((f1, m1)) = branch(hi, &comp.param)? else { return Ok(None) };
        let dt = 4.0 * (hi - lo).max(1e-9);
        let Some((f2, _)) = branch(hi + dt, &m1.param)? else { return Ok(None) };
        if !(f1 > 0.0 && f2 > f1) {
            return Ok(None);
        }
        let mut t = (hi - f1 * dt / (f2 - f1)).max(0.0);
        let (mut ta, mut fa) = (hi, f1);
        let mut best = m1.clone();
        for _ in 0..4 {
            match branch(t, &best.param)? {
                Some((ft, mt)) => {
                    best = mt;
                    if ft.abs() < 1e-14 || ft == fa {
                        break;
                    }
                    let next = t - ft * (t - ta) / (ft - fa);
                    ta = t;
                    fa = ft;
                    t = next.max(0.0);
                }
                None => break,
            }
        }
        Ok(Some((t, best)))
    }

    /// Largest `t` below `hi` at which `p` is a strict local minimizer.
    fn focal(&self, ray: &Ray, hi: f64) -> Result<Option<f64>> {
        let strict = |t: f64| -> Result<bool> {
            let x = self.at(ray, t)?;
            self.proj.is_strict_local_min(&x, &ray.u)
        };
        if strict(hi)? {
            return Ok(None);
        }
        let mut lo = hi;
        for _ in 0..40 {
            lo *= 0.5;
            if strict(lo)? {
                break;
            }
        }
        let mut hi = hi;
        while hi - lo > 1e-12 * (1.0 + hi) {
            let mid = 0.5 * (lo + hi);
            if strict(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(lo))
    }

    fn march(&self, ray: &Ray, horizon: f64, bound: &AtomicU64) -> Result<RayEnd> {
        let step = self.cfg.march_step;
        let margin = step.max(1e-3 * f64::from_bits(bound.load(Ordering::Relaxed)).min(horizon));
        let mut lo = 0.0;
        let mut t = step;
        let mut hi = loop {
            if lo > f64::from_bits(bound.load(Ordering::Relaxed)) + margin {
                return Ok(RayEnd::Pruned);
            }
            if t > horizon {
                let witness = self.witness_at(ray, lo, &[])?;
                return Ok(RayEnd::Open { witness });
            }
            let foot = match self.still_foot(ray, t) {
                Ok(foot) => foot,
                Err(GeomError::DomainEscape { .. }) => {
                    t = f64::INFINITY;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if !foot {
                break t;
            }
            lo = t;
            t += step;
        };
        while hi - lo > self.cfg.crossing_tol {
            let mid = 0.5 * (lo + hi);
            if self.still_foot(ray, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // A focal crossing (including continuous foot-point families, whose
        // crossing is focal too) is located sharply by the loss of strict
        // minimality of `p`; otherwise a second basin took over.
        if let Some(t_f) = self.focal(ray, hi)? {
            let w = self.witness_at(ray, t_f, &[])?;
            return Ok(RayEnd::Crossing {
                value: w.distance,
                witness: w,
            });
        }
        let x_hi = self.at(ray, hi)?;
        let hi_minima = self.proj.minima(&x_hi, std::slice::from_ref(&ray.u))?;
        let comp = &hi_minima[0];
        if self.separated(ray, comp) {
            if let Some((t_star, tracked)) = self.equidistant(ray, lo, hi, comp)? {
                let w = self.witness_at(ray, t_star, std::slice::from_ref(&tracked.param))?;
                if w.foot_points.multiplicity() >= 2 {
                    return Ok(RayEnd::Crossing {
                        value: w.distance,
                        witness: w,
                    });
                }
            }
        }
        let w = self.witness_at(ray, lo, &[])?;
        Ok(RayEnd::Crossing {
            value: w.distance,
            witness: w,
        })
    }
}

/// Unit normal directions sampled at `p`.
fn normal_directions(imm: &Immersion, u: &DVector<f64>, normal_samples: usize) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
    let frame = imm.frame(u)?;
    let space = imm.space();
    let x = &frame.point;
    let unit = |v: DVector<f64>| {
        let n = space.norm(x, &v);
        v / n
    };
    let dirs = match frame.normals.len() {
        1 => vec![frame.normals[0].clone(), -&frame.normals[0]],
        2 => {
            let m = normal_samples.max(2);
            (0..m)
                .map(|j| {
                    let a = std::f64::consts::TAU * j as f64 / m as f64;
                    unit(&frame.normals[0] * a.cos() + &frame.normals[1] * a.sin())
                })
                .collect()
        }
        _ => frame
            .normals
            .iter()
            .flat_map(|n| [n.clone(), -n])
            .collect(),
    };
    Ok((frame.point, dirs))
}

/// Largest ambient distance between sampled image points.
pub(crate) fn sampled_diameter(imm: &Immersion, per_axis: usize) -> Result<f64> {
    let pts: Vec<DVector<f64>> = imm.domain().grid(per_axis).iter().map(|u| imm.eval(u)).collect();
    let stride = (pts.len() / 256).max(1);
    let pts: Vec<&DVector<f64>> = pts.iter().step_by(stride).collect();
    let space = imm.space();
    let mut diam: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = if space.is_chart() {
                // length of the coordinate segment: an upper bound for the distance
                let dx = pts[j] - pts[i];
                (0..16)
                    .map(|s| {
                        let m = pts[i] + &dx * ((s as f64 + 0.5) / 16.0);
                        space.norm(&m, &dx) / 16.0
                    })
                    .sum()
            } else {
                space.distance(pts[i], pts[j])?
            };
            diam = diam.max(d);
        }
    }
    Ok(diam)
}

pub fn reach_normal_collision(
    imm: &Immersion,
    surface_samples: usize,
    normal_samples: usize,
    march_step: f64,
) -> Result<ReachEstimate> {
    reach_normal_collision_with(imm, &CollisionConfig::new(imm, surface_samples, normal_samples, march_step))
}

pub fn reach_normal_collision_with(imm: &Immersion, cfg: &CollisionConfig) -> Result<ReachEstimate> {
    if cfg.surface_samples < 2 || !(cfg.march_step > 0.0) || !(cfg.crossing_tol > 0.0) {
        return Err(GeomError::InvalidConfiguration(
            "normal collision needs surface_samples >= 2 and positive step sizes".into(),
        ));
    }
    let proj = Projector::new(imm, cfg.foot)?;
    let diameter = sampled_diameter(imm, 16)?;
    let horizon = cfg.horizon.unwrap_or(4.0 * diameter);
    let mut rays = Vec::new();
    for u in imm.domain().grid(cfg.surface_samples) {
        let (p, dirs) = normal_directions(imm, &u, cfg.normal_samples)?;
        for eta in dirs {
            rays.push(Ray {
                u: u.clone(),
                p: p.clone(),
                eta,
            });
        }
    }
    let marcher = Marcher {
        proj,
        cfg: *cfg,
        chord: cfg.separation * diameter,
    };
    let bound = AtomicU64::new(f64::INFINITY.to_bits());
    let ends: Vec<Result<RayEnd>> = rays
        .par_iter()
        .map(|ray| {
            let end = marcher.march(ray, horizon, &bound)?;
            if let RayEnd::Crossing { value, .. } = &end {
                bound.fetch_min(value.to_bits(), Ordering::Relaxed);
            }
            Ok(end)
        })
        .collect();

    let mut crossings: Vec<(f64, usize, Witness)> = Vec::new();
    let mut open: Option<Witness> = None;
    let mut first_err = None;
    for (i, end) in ends.into_iter().enumerate() {
        match end {
            Ok(RayEnd::Crossing { value, witness }) => crossings.push((value, i, witness)),
            Ok(RayEnd::Open { witness }) => {
                open.get_or_insert(witness);
            }
            Ok(RayEnd::Pruned) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let resolution = Resolution {
        surface_samples: cfg.surface_samples,
        normal_samples: cfg.normal_samples,
        ambient_samples: 0,
        march_step: cfg.march_step,
        rays: rays.len(),
    };
    if crossings.is_empty() {
        if let Some(w) = open {
            return Ok(ReachEstimate {
                tau_hat: horizon,
                method: ReachMethod::NormalCollision,
                witness: w,
                near_witnesses: Vec::new(),
                resolution,
                status: EstimateStatus::ExceedsHorizon { horizon },
            });
        }
        return Err(first_err.unwrap_or(GeomError::ProjectionFailure));
    }
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let tau_hat = crossings[0].0;
    if !(tau_hat > 0.0) {
        return Err(GeomError::InvalidReach(tau_hat));
    }
    let mut near: Vec<Witness> = Vec::new();
    for (value, _, w) in crossings.iter() {
        if *value > tau_hat * (1.0 + 1e-3) || near.len() >= 64 {
            break;
        }
        let fresh = near.iter().all(|o| {
            let d: f64 = o.point.iter().zip(&w.point).map(|(a, b)| (a - b).powi(2)).sum();
            d.sqrt() > 1e-6 * (1.0 + tau_hat)
        });
        if fresh {
            near.push(w.clone());
        }
    }
    let witness = crossings.swap_remove(0).2;
    Ok(ReachEstimate {
        tau_hat,
        method: ReachMethod::NormalCollision,
        witness,
        near_witnesses: near,
        resolution,
        status: EstimateStatus::Converged,
    })
}
