use thiserror::Error;

/// Errors raised by the library. The CLI maps each family to its own exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or lengths that do not fit together (bad block length, pad size, ...).
    #[error("structural error: {0}")]
    Structural(String),
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// The derived index sets cannot support the requested scheme.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    /// An exact enumeration would exceed the configured budget.
    #[error("enumeration budget exceeded: 2^{needed_log2:.1} leaves > 2^{budget_log2}; use the empirical path")]
    Budget { needed_log2: f64, budget_log2: u32 },
    /// A divergence with a zero reference mass under positive mass.
    #[error("divergence is infinite")]
    InfiniteDivergence,
    /// A root-finder found no solution on the admissible interval.
    #[error("no admissible root: {0}")]
    NoRoot(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
