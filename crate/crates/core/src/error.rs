use thiserror::Error;

/// Errors shared by every layer of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// The requested SINR targets cannot be met within the power budget.
    #[error("infeasible: minimal power {required_power} exceeds budget {budget}")]
    Infeasible { required_power: f64, budget: f64 },
    /// Channels are rank deficient.
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    /// A numerical routine produced non-finite values or broke down.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Invalid configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
