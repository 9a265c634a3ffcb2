use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A model was defined with parameters it cannot be simulated under.
    #[error("model definition error: {0}")]
    Model(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// A finite chain failed a structural check (stochasticity, irreducibility, aperiodicity).
    #[error("invalid chain: {0}")]
    Chain(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
    /// Every violated constraint of an experiment configuration, collected in one pass.
    #[error("invalid experiment configuration:\n{}", format_violations(.0))]
    Validation(Vec<String>),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[String]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
