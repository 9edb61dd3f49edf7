//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by solvers, field evaluation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Total masses of two measures differ beyond tolerance.
    #[error("mass balance violated: source mass {source_mass} vs target mass {target_mass} (relative gap {rel_gap:.3e})")]
    Balance {
        source_mass: f64,
        target_mass: f64,
        rel_gap: f64,
    },

    /// Mismatched spatial dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Invalid construction arguments (lengths, signs, ranges).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A map could not be evaluated at a support point.
    #[error("map evaluation failed at support point {index}: {reason}")]
    MapEvaluation { index: usize, reason: String },

    /// Field evaluation produced a non-finite value.
    #[error("non-finite value evaluating {what} at {point:?}")]
    NonFinite { what: String, point: Vec<f64> },

    /// Kernel or field singular at an evaluation point.
    #[error("singular evaluation: {what} (pair {i}, {j}, distance {dist:.3e})")]
    Singularity {
        what: String,
        i: usize,
        j: usize,
        dist: f64,
    },

    /// Convexity precondition failed; carries the witness point.
    #[error("convexity violated: min Hessian eigenvalue {eigenvalue:.6e} at witness {witness:?}")]
    Convexity { eigenvalue: f64, witness: Vec<f64> },

    /// Hessian too ill-conditioned for inversion.
    #[error("ill-conditioned Hessian at {point:?}: eigenvalues {eigenvalues:?}")]
    Conditioning {
        point: Vec<f64>,
        eigenvalues: Vec<f64>,
    },

    /// A points-outside-grid condition during binning.
    #[error("{count} support points fall outside the binning grid")]
    OutsideGrid { count: usize },

    /// Problem size exceeds the exact-solver cap.
    #[error("problem size {n}x{m} exceeds the exact-solver cap of {cap} entries; use the entropic solver")]
    SizeCap { n: usize, m: usize, cap: usize },

    /// Map extraction hit a split row in dominant mode.
    #[error("plan row {row} splits mass (largest fraction {fraction:.6}); dominant map extraction needs a single target, use barycentric mode")]
    MultivaluedMap { row: usize, fraction: f64 },

    /// Stationarity of the inner minimizer failed beyond tolerance.
    #[error("inner-minimizer stationarity residual {residual:.3e} exceeds {tolerance:.3e} (inconsistent dual field)")]
    Stationarity { residual: f64, tolerance: f64 },

    /// Entropic solver failed to converge.
    #[error("entropic solver did not converge after {iterations} iterations (marginal residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Defining function inconsistent with its boundary samples.
    #[error("domain defining function is {value:.3e} at declared boundary point {point:?}")]
    DomainInconsistent { value: f64, point: Vec<f64> },

    /// Solve-level failure propagated with its fixed-point iteration index.
    #[error("inner solve failed at fixed-point iteration {iteration}: {source}")]
    FixedPointInner {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown potential or kernel name: {0}")]
    UnknownPotential(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
