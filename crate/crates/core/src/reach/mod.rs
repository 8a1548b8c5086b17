//! Foot points, medial-axis detection and reach estimation.
//!
//! Two estimators are provided. [`reach_normal_collision`] marches along normal
//! geodesics until the starting point stops being a foot point; it converges from
//! above as the surface sampling is refined. [`reach_medial_infimum`] samples the
//! ambient region, keeps the points with two separated near-nearest points and
//! minimises their distance to `M`.

mod assign;
mod collision;
mod foot;
mod medial;


use serde::Serialize;

pub use assign::{reach_assigning_points, Classification, ReachAssigner};
pub use collision::{reach_normal_collision, reach_normal_collision_with, CollisionConfig};
pub use foot::{foot_points, start_params, FootConfig, FootPoint, FootPointSet, LocalMinimum, Projector};
pub use medial::{reach_medial_infimum, reach_medial_infimum_with, MedialConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachMethod {
    NormalCollision,
    MedialInfimum,
}

impl ReachMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReachMethod::NormalCollision => "normal_collision",
            ReachMethod::MedialInfimum => "medial_infimum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EstimateStatus {
    Converged,
    /// No collision before the march horizon; `tau_hat` is only a lower bound.
    ExceedsHorizon { horizon: f64 },
    /// No medial point was found at the requested sampling.
    InsufficientResolution,
}

/// A point realising (approximately) the reach, with its foot points.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub distance: f64,
    pub foot_points: FootPointSet,
    /// Set by the normal-collision estimator, which resolves the crossing type.
    pub classification: Option<Classification>,
    /// Parameter of the point of `M` whose normal ray produced this witness.
    pub source_param: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Resolution {
    pub surface_samples: usize,
    pub normal_samples: usize,
    pub ambient_samples: usize,
    pub march_step: f64,
    pub rays: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReachEstimate {
    pub tau_hat: f64,
    pub method: ReachMethod,
    pub witness: Witness,
    /// Further witnesses whose distance is close to `tau_hat`, best first.
    pub near_witnesses: Vec<Witness>,
    pub resolution: Resolution,
    pub status: EstimateStatus,
}

impl ReachEstimate {
    pub fn is_bounded(&self) -> bool {
        self.status == EstimateStatus::Converged
    }
}
