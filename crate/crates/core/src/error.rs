use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Device layout is not valid (overlap, coincident centers).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A coefficient file does not match the expected layout or the scenario grid.
    #[error("schema error: {0}")]
    Schema(String),

    /// Coefficient data violates a physical invariant.
    #[error("data error: {0}")]
    Data(String),

    /// An impedance (or adjoint) system could not be factorized.
    #[error("singular impedance matrix at frequency index {q}")]
    Singular { q: usize },

    /// Tabulated excitation queried outside its angular range.
    #[error("direction {theta} rad outside tabulated range [{min}, {max}]")]
    Extrapolation { theta: f64, min: f64, max: f64 },

    /// Scenario validation failure naming the offending field.
    #[error("invalid scenario field `{field}`: {reason}")]
    Scenario { field: String, reason: String },

    /// Control vector has the wrong length.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("scenario parse error: {0}")]
    Toml(String),
}

impl Error {
    pub(crate) fn scenario(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
