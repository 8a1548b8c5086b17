//! Numerical geometry of compact submanifolds inside model Riemannian spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`ambient`]: the ambient manifold (Euclidean space, round sphere, hyperboloid,
//!   or a chart with a metric evaluator) with geodesics, log map, parallel transport
//!   and sectional curvature.
//! - [`immersion`]: a parametrised compact submanifold with frames, second fundamental
//!   form, shape operator, intrinsic geodesics and intrinsic transport.
//! - [`reach`]: foot-point projection, two reach estimators and reach-assigning points.
//! - [`variation`]: the second-variation machinery and the extrinsic bounds that follow
//!   from a positive reach.
//! - [`scenario`]: built-in scenario registry, config loading, orchestration and reports.

// negated comparisons are used on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod error;
pub mod immersion;
pub mod numeric;
pub mod reach;
pub mod scenario;
pub mod variation;

pub use ambient::{AmbientKind, AmbientSpace, ChartMetric, GeodesicPath, Point, Tangent};
pub use error::{GeomError, Result};
pub use immersion::{Immersion, IntrinsicCurve, ParamDomain, TangentFrame};
pub use reach::{FootPointSet, ReachAssigner, ReachEstimate, ReachMethod};
pub use variation::{BottleneckReport, BoundReport, CurvatureIntegral, DefectReport, VariationReport};
