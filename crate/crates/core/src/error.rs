//! Error type shared by every module of the crate.
//!
//! Two families of failures exist: domain errors (an input violates a
//! documented precondition or describes infeasible physics) and numerical
//! errors (a solver could not certify its result). The distinction matters
//! to callers: domain errors are configuration mistakes, numerical errors
//! are genuine computation failures.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failures reported by the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input value violated a documented precondition.
    #[error("invalid {quantity}: {value} ({reason})")]
    InvalidInput {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The requested operating point is physically infeasible.
    #[error("infeasible configuration: {reason}")]
    Infeasible { reason: String },

    /// A value fell outside the interval on which an inverse is defined.
    #[error("{quantity} = {value} outside the valid interval [{lo}, {hi}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A bracketing solver found no sign change over its interval.
    #[error("no sign change over bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// A solver exhausted its iteration budget without meeting tolerance.
    #[error(
        "solver failed to converge after {iterations} iterations \
         (bracket [{lo}, {hi}], residual {residual:e})"
    )]
    NoConvergence {
        iterations: u32,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    /// The compensated modulation scheme cannot hold its design invariant.
    #[error(
        "modulation scheme infeasible at frame {frame}: required weight {weight} exceeds 1 \
         (the floor symbol maps below the keying amplitude)"
    )]
    SchemeInfeasible { frame: u64, weight: f64 },

    /// A failure annotated with the operating point where it occurred.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of a numerical routine rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoBracket { .. } | Error::NoConvergence { .. } => true,
            Error::Context { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// Wraps the error with the operating point that produced it.
    pub fn in_context(self, context: impl Into<String>) -> Error {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_classification_splits_solver_failures_from_domain_errors() {
        let num = Error::NoConvergence { iterations: 200, lo: 0.0, hi: 1.0, residual: 1e-3 };
        let dom = Error::InvalidInput { quantity: "power", value: -1.0, reason: "negative" };
        assert!(num.is_numerical(), "solver failures are numerical");
        assert!(!dom.is_numerical(), "precondition violations are not numerical");
    }

    #[test]
    fn messages_carry_the_offending_values() {
        let e = Error::OutOfRange { quantity: "amplitude", value: 2.0, lo: 0.0, hi: 1.0 };
        let msg = e.to_string();
        assert!(msg.contains("amplitude") && msg.contains('2'), "message: {msg}");
    }

    #[test]
    fn context_wrapping_preserves_classification_and_message() {
        let inner = Error::NoConvergence { iterations: 200, lo: 0.0, hi: 1.0, residual: 1e-3 };
        let wrapped = inner.in_context("at alpha = 0.01");
        assert!(wrapped.is_numerical(), "context must not change the classification");
        let msg = wrapped.to_string();
        assert!(msg.contains("alpha = 0.01"), "message: {msg}");
        let dom = Error::Infeasible { reason: "below threshold".into() }.in_context("sweep point 3");
        assert!(!dom.is_numerical());
    }
}
