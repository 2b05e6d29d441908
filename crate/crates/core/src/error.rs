use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point {0:?} lies outside the chart domain of `{1}`")]
    Domain([f64; 4], String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("bivector is not anti-self-dual (|*a + a| = {0:e})")]
    NotAsd(f64),
    #[error("curvature convention check failed: {0}")]
    Convention(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("metric is not self-dual at this point (|W-| = {0:e})")]
    NotSelfDual(f64),
    #[error("section is not unit length (|J| = {0})")]
    NotUnitSection(f64),
    #[error("finite-difference stencil leaves the chart: {0}")]
    Stencil(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("unknown curvature kind `{0}`")]
    BadKind(String),
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
