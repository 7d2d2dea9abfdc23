use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of tables, parameter vectors or design matrices do not conform.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter or input lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A rank condition needed by an estimator fails.
    #[error("not identifiable: {what} (rank {rank}, required {required})")]
    Identifiability {
        what: String,
        rank: usize,
        required: usize,
    },

    /// Inputs are degenerate for a closed-form approximation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An exact oracle was asked to enumerate beyond its hard cap.
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    /// A density evaluation produced NaN.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// The sampler could not find a finite starting point.
    #[error("initialization failed after {0} attempts")]
    Initialization(usize),

    /// The sampler produced no usable transitions.
    #[error("sampler failure: {0}")]
    Sampler(String),

    /// Scenario or run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Missing cases cannot be imputed for a cell.
    #[error("imputation error: {0}")]
    Imputation(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension(format!(
            "{what}: got length {got}, expected {expected}"
        )));
    }
    Ok(())
}
