//! Error type shared by all modules.

use core::fmt;

/// Everything that can go wrong outside of ordinary floating-point results.
///
/// Step-size underflow during integration is *not* an error: the integrator
/// returns a truncated [`crate::Trajectory`] with
/// [`crate::Status::StepFailure`] so the partial data stays usable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Error {
    /// A parameter violates its domain (l >= 0, alpha > 0, beta > 0, c > 0, d > 0, finiteness).
    InvalidParams(&'static str),
    /// An operation was called outside the parameter regime where it is defined.
    RegimeNotApplicable(&'static str),
    /// A scalar argument is outside the operation's domain.
    DomainError(&'static str),
    /// A quantity exceeded a bound its contract requires.
    BoundViolation {
        what: &'static str,
        value: f64,
        limit: f64,
    },
    /// Fewer data points than the operation needs.
    InsufficientData { needed: usize, got: usize },
    /// A log-log fit met a value (or abscissa) that is not strictly positive.
    NonPositiveValue { t: f64, value: f64 },
    /// The trajectory does not cover enough time for the requested classification.
    SpanTooShort { span: f64, required: f64 },
    /// Fixed-point iteration did not reach the requested tolerance.
    NoConvergence {
        iterations: usize,
        last_change: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(why) => write!(f, "invalid parameters: {why}"),
            Error::RegimeNotApplicable(why) => write!(f, "parameter regime not applicable: {why}"),
            Error::DomainError(why) => write!(f, "domain error: {why}"),
            Error::BoundViolation { what, value, limit } => {
                write!(f, "bound violation: {what} = {value} exceeds {limit}")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need {needed}, got {got}")
            }
            Error::NonPositiveValue { t, value } => {
                write!(f, "non-positive value {value} at t = {t} in a log-log fit")
            }
            Error::SpanTooShort { span, required } => {
                write!(f, "trajectory span {span} too short (need >= {required})")
            }
            Error::NoConvergence {
                iterations,
                last_change,
            } => write!(
                f,
                "no convergence after {iterations} iterations (last sup-change {last_change:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}
