use thiserror::Error;

/// Errors produced by jet arithmetic, generating-function constructions and
/// the numeric solvers built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variable count mismatch: expected {expected}, got {got}")]
    VariableMismatch { expected: usize, got: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("variable index {index} out of range for {num_vars} variables")]
    VariableIndexOutOfRange { index: usize, num_vars: usize },

    #[error("arity mismatch in composition: function takes {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("order underflow in {context}: requested order {requested}, stored order {stored}")]
    OrderUnderflow {
        context: &'static str,
        requested: usize,
        stored: usize,
    },

    #[error("domain violation in {function}: {detail}")]
    DomainViolation {
        function: &'static str,
        detail: String,
    },

    #[error("malformed generating function: {0}")]
    MalformedGeneratingFunction(String),

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },

    #[error("singular newton jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("degenerate generating function: |det d2S/dpdQ| = {det:.3e} below threshold {threshold:.3e}")]
    Degenerate { det: f64, threshold: f64 },

    #[error("sample is not a critical point: |grad f| = {grad_norm:.3e} exceeds tolerance {tol:.3e}")]
    NotCritical { grad_norm: f64, tol: f64 },

    #[error("jet data required for {context} but only a callable is stored")]
    MissingJet { context: &'static str },

    #[error("invalid input in {context}: {detail}")]
    InvalidInput { context: &'static str, detail: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error at byte {offset}: {detail}")]
    Parse { offset: usize, detail: String },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
}

pub type Result<T> = std::result::Result<T, Error>;
