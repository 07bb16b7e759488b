use thiserror::Error;

/// Everything that can go wrong while building, sampling or evaluating a
/// mixture test.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("observation {index} has zero density under every component")]
    DegenerateSupport { index: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("quadrature did not converge: achieved relative error {achieved:.3e}, requested {requested:.3e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("design matrix error: {0}")]
    Design(String),

    #[error("improper posterior: {0}")]
    Propriety(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid experiment: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ParameterDomain(_) => "parameter_domain",
            Error::Unsupported(_) => "unsupported",
            Error::Contract(_) => "contract",
            Error::DegenerateSupport { .. } => "degenerate_support",
            Error::Configuration(_) => "configuration",
            Error::Numeric(_) => "numeric",
            Error::Accuracy { .. } => "accuracy",
            Error::Design(_) => "design",
            Error::Propriety(_) => "propriety",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
