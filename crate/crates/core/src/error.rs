use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeomError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("path left the chart domain at {at:?}")]
    DomainEscape { at: Vec<f64> },
    #[error("non-finite value while evaluating {0}")]
    Evaluation(String),
    #[error("minimizing geodesic is not unique: {0}")]
    NonUniqueGeodesic(String),
    #[error("shooting did not converge (endpoint residual {residual:.3e})")]
    Convergence { residual: f64 },
    #[error("sample spacing too coarse: estimated error {estimate:.3e} exceeds {tolerance:.3e}")]
    Resolution { estimate: f64, tolerance: f64 },
    #[error("degenerate plane (normalized Gram determinant {0:.3e})")]
    DegeneratePlane(f64),
    #[error("immersion differential is rank deficient at {at:?}")]
    ImmersionDegenerate { at: Vec<f64> },
    #[error("foot-point projection failed on every start")]
    ProjectionFailure,
    #[error("reach must be positive, got {0}")]
    InvalidReach(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("immersion domain is not compact: {0}")]
    NotCompact(String),
    #[error("convention violated: {0}")]
    Convention(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

impl GeomError {
    pub(crate) fn eval(what: impl Into<String>) -> Self {
        GeomError::Evaluation(what.into())
    }
}
