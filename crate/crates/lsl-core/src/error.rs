use thiserror::Error;

/// Errors surfaced by the estimation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("response {y} is not admissible for the {family} loss")]
    InvalidResponse { family: &'static str, y: f64 },

    #[error("derivative order {0} is not supported (orders 0..=3 are available)")]
    UnsupportedOrder(usize),

    #[error("expansion order {0} is not supported here (orders 0..=2 are available)")]
    UnsupportedExpansionOrder(usize),

    #[error("the {0} loss has no likelihood interpretation")]
    NoLikelihood(&'static str),

    #[error("curvature constant {0} fell below the 1e-12 floor; family is numerically degenerate")]
    DegenerateCurvature(f64),

    #[error("invalid interval [{lo}, {hi}]: endpoints must be finite with lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("sigma0 = {0} must be a positive finite real")]
    InvalidSigma0(f64),

    #[error("design matrix is invalid: {0}")]
    InvalidDesign(String),

    #[error("column {0} is identically zero; its scale is undefined")]
    ZeroColumn(usize),

    #[error("parameter domain is invalid: {0}")]
    InvalidDomain(String),

    #[error("probability {name} = {value} must lie in (0, 1)")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("joint failure probability q + q' = {0} must be < 1")]
    JointProbabilityTooLarge(f64),

    #[error("cone constant K = {0} must exceed 1")]
    ConeConstantTooSmall(f64),

    #[error("row variance {value} at index {index} exceeds sigma0^2 = {cap}")]
    VarianceExceedsCap { index: usize, value: f64, cap: f64 },

    #[error("infeasible problem: row {row} maps the domain onto [{lo}, {hi}], outside the working interval")]
    Infeasible { row: usize, lo: f64, hi: f64 },

    #[error("non-finite objective encountered during optimization")]
    NonFiniteObjective,

    #[error("penalty weights must be positive; found {0}")]
    InvalidPenalty(f64),

    #[error("sparsity s = {s} is out of range for p = {p} columns")]
    SparsityOutOfRange { s: usize, p: usize },

    #[error("exact enumeration requires p <= 16 and s <= 3; got p = {p}, s = {s}")]
    EnumerationTooLarge { p: usize, s: usize },

    #[error("simulation spec is invalid: {0}")]
    InvalidSimSpec(String),

    #[error("restricted eigenvalue is not positive (kappa = {0}); the l2 bound does not apply")]
    RestrictedEigenvalueZero(f64),

    #[error("centering is unavailable: {0}")]
    CenteringUnavailable(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
