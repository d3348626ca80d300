use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular linear system at detuning {detuning:e} rad/s (condition estimate {condition:e})")]
    Singular { detuning: f64, condition: f64 },

    #[error("time grid invalid: {0}")]
    Grid(String),

    #[error("steady state did not converge: relative drift {drift:e} over the last 10% of the run")]
    NotConverged { drift: f64 },

    #[error("integration quality check failed at t = {t:e} s: {reason}")]
    IntegrationQuality { t: f64, reason: String },

    #[error("complete-positivity check failed: dissipator rate matrix has eigenvalue {0:e}")]
    NotCompletelyPositive(f64),

    #[error("fock space too large: dimension {dim} exceeds cap {cap}")]
    FockTooLarge { dim: usize, cap: usize },

    #[error("no Kerr-free point for alpha = {0}")]
    NoKerrFreePoint(f64),

    #[error("no bracket found for the potential minimum")]
    NoBracket,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short stable identifier, used for sweep failure codes and CLI categories.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Singular { .. } => "singular",
            Error::Grid(_) => "grid",
            Error::NotConverged { .. } => "not_converged",
            Error::IntegrationQuality { .. } => "integration_quality",
            Error::NotCompletelyPositive(_) => "not_completely_positive",
            Error::FockTooLarge { .. } => "fock_too_large",
            Error::NoKerrFreePoint(_) => "no_kerr_free_point",
            Error::NoBracket => "no_bracket",
            Error::Fit(_) => "fit",
            Error::Config(_) => "config",
            Error::Plot(_) => "plot",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
