//! Reach-assigning points and their classification.

use serde::Serialize;

use super::foot::FootPointSet;
use super::ReachEstimate;
use crate::ambient::Point;
use crate::error::{GeomError, Result};
use crate::immersion::Immersion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Two or more separated foot points.
    Bottleneck,
    /// A single foot point: a limit of medial points whose foot points merge.
    UniqueFootPoint,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Bottleneck => "bottleneck",
            Classification::UniqueFootPoint => "unique_foot_point",
        }
    }

    pub fn from_multiplicity(m: usize) -> Self {
        if m >= 2 {
            Classification::Bottleneck
        } else {
            Classification::UniqueFootPoint
        }
    }
}

/// A medial point at distance (approximately) `tau_hat` from `M`.
#[derive(Clone, Debug, Serialize)]
pub struct ReachAssigner {
    pub q: Point,
    pub distance: f64,
    pub foot_points: FootPointSet,
    pub classification: Classification,
}

/// Witnesses of `estimate` whose distance to `M` is within `tol` of `tau_hat`.
pub fn reach_assigning_points(imm: &Immersion, estimate: &ReachEstimate, tol: f64) -> Result<Vec<ReachAssigner>> {
    if !(tol > 0.0) {
        return Err(GeomError::InvalidConfiguration("assigner tolerance must be positive".into()));
    }
    imm.ensure_compact()?;
    let mut out: Vec<ReachAssigner> = Vec::new();
    for w in std::iter::once(&estimate.witness).chain(estimate.near_witnesses.iter()) {
        if (w.distance - estimate.tau_hat).abs() > tol {
            continue;
        }
        if w.point.len() != imm.space().coord_dim() {
            return Err(GeomError::Dimension {
                expected: imm.space().coord_dim(),
                got: w.point.len(),
            });
        }
        if out.iter().any(|a| a.q.to_vec() == w.point) {
            continue;
        }
        out.push(ReachAssigner {
            q: Point::new(&w.point),
            distance: w.distance,
            foot_points: w.foot_points.clone(),
            classification: Classification::from_multiplicity(w.foot_points.multiplicity()),
        });
    }
    Ok(out)
}
