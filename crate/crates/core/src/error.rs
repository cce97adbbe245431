use thiserror::Error;

/// Errors raised by the numerics and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid discretization or argument combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested object does not exist for these parameters.
    #[error("infeasible input: {0}")]
    Infeasible(String),

    /// Degenerate input (coincident points, zero temporal mode, singular Jacobian).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("field leaves the symmetric subspace (defect {defect:.3e}, relative {relative:.3e})")]
    SymmetryViolation { defect: f64, relative: f64 },

    /// Pointwise amplitude too close to the singularity of the nonlinearity.
    #[error("field modulus {max_modulus:.6} exceeds the analyticity limit {limit}")]
    Domain { max_modulus: f64, limit: f64 },

    #[error("iteration did not converge after {} steps (last residual {:.3e})", history.len(), history.last().copied().unwrap_or(f64::NAN))]
    Divergence { history: Vec<f64> },

    #[error("continuation stopped at b = {at_b:e}: {reason}")]
    Continuation { at_b: f64, reason: String },

    #[error("|w| = {modulus:.3e} fell below the singularity floor at s = {s:.6}")]
    Singularity { modulus: f64, s: f64 },

    #[error("filaments {i} and {j} within {distance:.3e} at s = {s:.6}")]
    Collision {
        i: usize,
        j: usize,
        s: f64,
        distance: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
