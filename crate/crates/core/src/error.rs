use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by how a caller should react: malformed input,
/// parameters outside a family's domain, and numerical failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("half-planes define an unbounded region")]
    UnboundedRegion,
    #[error("half-planes define a region with empty interior")]
    EmptyInterior,
    #[error("label {index} vanishes on no edge of the region")]
    RedundantLabel { index: usize },
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("expected a quadrilateral, got {vertices} vertices")]
    NotAQuadrilateral { vertices: usize },
    #[error("weight is not positive on the polytope (value {value:e} at vertex {vertex})")]
    NonPositiveWeight { vertex: usize, value: f64 },
    #[error("quadrature tolerance not reached (estimated error {est_error:e} after {evaluations} evaluations)")]
    ToleranceNotReached { est_error: f64, evaluations: usize },
    #[error("Gram matrix is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("point ({x}, {y}) is not interior to the polytope")]
    NotInterior { x: f64, y: f64 },
    #[error("Hessian is numerically singular (determinant {det:e})")]
    SingularHessian { det: f64 },
    #[error("finite-difference step {step:e} exceeds a quarter of the boundary margin {margin:e}")]
    StepTooLarge { step: f64, margin: f64 },
    #[error("affine map has zero constant term; the twist is undefined")]
    ZeroConstantTerm,
    #[error("origin is not interior to the polytope")]
    OriginNotInterior,
    #[error("parameter out of the family domain: {0}")]
    ParameterOutOfDomain(String),
    #[error("negative discriminant {value:e}")]
    NegativeDiscriminant { value: f64 },
    #[error("function vanishes at vertex {index}")]
    VertexZero { index: usize },
    #[error("no multistart converged")]
    NoConvergence,
    #[error("degenerate polytope: {0}")]
    DegeneratePolytope(String),
    #[error("condition (a) not met (residual {residual:e}, threshold {threshold:e})")]
    ConditionANotMet { residual: f64, threshold: f64 },
    #[error("invalid extremal pair: {0}")]
    InvalidExtremalPair(String),
    #[error("malformed JSON: {0}")]
    Json(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ToleranceNotReached { .. }
            | Error::IllConditioned { .. }
            | Error::SingularHessian { .. }
            | Error::NoConvergence
            | Error::StepTooLarge { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Input,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnboundedRegion => "UnboundedRegion",
            Error::EmptyInterior => "EmptyInterior",
            Error::RedundantLabel { .. } => "RedundantLabel",
            Error::InvalidPolytope(_) => "InvalidPolytope",
            Error::ParameterOutOfRange(_) => "ParameterOutOfRange",
            Error::NotAQuadrilateral { .. } => "NotAQuadrilateral",
            Error::NonPositiveWeight { .. } => "NonPositiveWeight",
            Error::ToleranceNotReached { .. } => "ToleranceNotReached",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::NotInterior { .. } => "NotInterior",
            Error::SingularHessian { .. } => "SingularHessian",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::ZeroConstantTerm => "ZeroConstantTerm",
            Error::OriginNotInterior => "OriginNotInterior",
            Error::ParameterOutOfDomain(_) => "ParameterOutOfDomain",
            Error::NegativeDiscriminant { .. } => "NegativeDiscriminant",
            Error::VertexZero { .. } => "VertexZero",
            Error::NoConvergence => "NoConvergence",
            Error::DegeneratePolytope(_) => "DegeneratePolytope",
            Error::ConditionANotMet { .. } => "ConditionANotMet",
            Error::InvalidExtremalPair(_) => "InvalidExtremalPair",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
