use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Validation-style failures (bad input, chart violations, malformed files)
/// are distinguished from numerical failures through [`Error::is_validation`],
/// which the command-line front end maps onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point leaves the chart: {0}")]
    OutOfChart(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("spectral diagnostic: {0}")]
    Diagnostic(String),
    #[error("picard iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Diagnostic(_) | Error::NonConvergence(_))
    }

    /// Short machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::OutOfChart(_) => "out_of_chart",
            Error::Invalid(_) => "invalid_input",
            Error::Assembly(_) => "assembly",
            Error::Config(_) => "configuration",
            Error::Diagnostic(_) => "spectral_diagnostic",
            Error::NonConvergence(_) => "non_convergence",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
