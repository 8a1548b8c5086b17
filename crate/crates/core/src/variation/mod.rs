//! Second variation of arclength towards a point at distance `tau` along a
//! normal, and the extrinsic bounds and equalities that follow from a positive
//! reach.
//!
//! - [`curvature_integral`]: `I = int_0^1 kappa(V, sigma') (1 - t)^2 dt` along a
//!   normal geodesic with `V = (1 - t) U` and `U` parallel.
//! - [`second_variation_closed`] / [`second_variation_fd`]: `L''(0)` in closed
//!   form and by finite differences of an explicit variation.
//! - [`check_extrinsic_bounds`]: `<alpha'', eta>`, `|alpha''|` and `|A_eta|`
//!   against `B(tau, c) = (3 - tau^2 c) / (3 tau)`.
//! - [`check_bottleneck_equality`]: the equality case at reach-assigning points.
//! - [`transport_defect`]: intrinsic versus ambient parallel transport.

mod bottleneck;
mod bounds;
mod defect;
mod integral;
mod second;

pub use bottleneck::{check_bottleneck_equality, intrinsic_log, BottleneckReport, EqualityCase, EqualityStatus};
pub use bounds::{bound_b, check_extrinsic_bounds, check_extrinsic_bounds_with, BoundConfig, BoundReport};
pub use defect::{transport_defect, DefectReport};
pub use integral::{curvature_integral, variation_field, CurvatureIntegral, VariationField};
pub use second::{
    normal_geodesic, second_variation_check, second_variation_closed, second_variation_fd, VariationReport,
};
