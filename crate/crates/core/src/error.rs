use thiserror::Error;

/// Errors raised by the simulation and verification engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("domain violation in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("CFL condition violated: dt = {dt} exceeds stability limit {limit}")]
    Cfl { dt: f64, limit: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (NaN, CFL, broken invariants) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::Invariant(_) | Error::Cfl { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
