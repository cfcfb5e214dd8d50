use thiserror::Error;

/// Errors produced by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Jacobi parameters: alpha = {alpha}, beta = {beta} (both must exceed -1)")]
    InvalidParams { alpha: f64, beta: f64 },

    #[error("quadrature node {index} of {order} failed to converge")]
    QuadratureNode { index: usize, order: usize },

    #[error("invalid Darboux data: {0}")]
    InvalidDarboux(String),

    #[error("preset rejected: {0}")]
    PresetRejected(String),

    #[error("orthonormality check failed at (i, j) = ({i}, {j}): residual {residual:e}")]
    NotOrthonormal { i: usize, j: usize, residual: f64 },

    #[error("degenerate normalizer: quadrature norm of A p_{n} is {norm:e}")]
    DegenerateNorm { n: usize, norm: f64 },

    #[error("leading coefficient of index {n}: {reason}")]
    LeadingCoefficient { n: usize, reason: String },

    #[error("degree {degree} exceeds the cap of {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("interpolation residual {residual:e} exceeds tolerance {tolerance:e}")]
    InterpolationResidual { residual: f64, tolerance: f64 },

    #[error("span property: no s found within the scanned range (last nonzero index {last})")]
    SpanNotFound { last: usize },

    #[error("polynomial has degree {0}; an operation needs a higher degree")]
    DegreeTooLow(usize),

    #[error("root finder did not converge after {sweeps} sweeps (worst residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("root residual {residual:e} exceeds {bound:e}")]
    RootResidual { residual: f64, bound: f64 },

    #[error("zero classification: {0}")]
    Classification(String),

    #[error("measure is not supported on the real line (|Im| = {0:e}); use moment diagnostics")]
    ComplexSupport(f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("escape radius check failed at z = {re} + {im}i")]
    EscapeRadius { re: f64, im: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("brolin orbit failed after {restarts} restarts: {cause}")]
    OrbitFailed { restarts: usize, cause: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
