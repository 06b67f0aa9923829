//! Error type shared by every module.

use alloc::string::String;
use core::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong in a computation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The requested catalog system does not exist.
    UnknownSystem(String),
    /// A parameter is out of range or malformed.
    InvalidParameter {
        /// Parameter name as the caller spelled it.
        name: String,
        /// Human-readable reason.
        reason: String,
    },
    /// A point lies outside the hull of the state space.
    PointOutsideHull {
        /// Offending point.
        x: f64,
        /// Hull lower end.
        lo: f64,
        /// Hull upper end.
        hi: f64,
    },
    /// A word refers to a branch that does not exist.
    InvalidLetter(u32),
    /// A countable system was used with a potential that has no tail law.
    TailBoundUnavailable(String),
    /// The potential is not summable over the countable branch family.
    Divergent(String),
    /// An enumeration would exceed its configured budget.
    BudgetExceeded {
        /// What was being enumerated.
        what: &'static str,
        /// Requested size.
        requested: u128,
        /// Configured cap.
        cap: u128,
    },
    /// Power iteration failed to meet its tolerance.
    NoConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Last eigen residual.
        residual: f64,
        /// Residual trajectory, sampled every few iterations.
        trajectory: alloc::vec::Vec<f64>,
    },
    /// An iterate of the eigenfunction reached a nonpositive node value.
    NonpositiveEigenfunction {
        /// Node index.
        node: usize,
    },
    /// The normalized potential does not satisfy `L_ψ 1 = 1`.
    NormalizationFailed {
        /// Observed sup-node defect.
        defect: f64,
        /// Allowed defect.
        allowed: f64,
    },
    /// Bisection could not find a sign change of the pressure.
    NoSignChange {
        /// Largest parameter reached.
        t_hi: f64,
        /// Pressure at that parameter, if finite.
        pressure: Option<f64>,
        /// Estimated summability threshold.
        tau: f64,
    },
    /// The system is not uniformly expanding (expansion constant equals 1).
    ExpansionNotStrict(String),
    /// Not enough Bowen constants were supplied.
    MissingBowenData {
        /// Depth that was needed.
        needed: usize,
        /// Depth available.
        available: usize,
    },
    /// Every weight underflowed to zero.
    Underflow(&'static str),
    /// Two inputs refer to different systems or grids.
    Mismatch(String),
    /// The operation is not defined for these inputs.
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics itself (non-convergence, divergence),
    /// as opposed to malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Divergent(_)
                | Error::NoConvergence { .. }
                | Error::NonpositiveEigenfunction { .. }
                | Error::NormalizationFailed { .. }
                | Error::NoSignChange { .. }
                | Error::Underflow(_)
                | Error::BudgetExceeded { .. }
                | Error::TailBoundUnavailable(_)
                | Error::ExpansionNotStrict(_)
                | Error::MissingBowenData { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownSystem(name) => write!(f, "unknown system `{name}`"),
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::PointOutsideHull { x, lo, hi } => {
                write!(f, "point {x} lies outside the hull [{lo}, {hi}]")
            }
            Error::InvalidLetter(letter) => write!(f, "invalid branch letter {letter}"),
            Error::TailBoundUnavailable(what) => {
                write!(f, "no tail bound available for countable system: {what}")
            }
            Error::Divergent(what) => write!(f, "DIVERGENT: {what}"),
            Error::BudgetExceeded {
                what,
                requested,
                cap,
            } => write!(f, "{what}: {requested} exceeds the cap of {cap}"),
            Error::NoConvergence {
                iterations,
                residual,
                ..
            } => write!(
                f,
                "NO_CONVERGENCE after {iterations} iterations (last residual {residual:e})"
            ),
            Error::NonpositiveEigenfunction { node } => {
                write!(
                    f,
                    "NONPOSITIVE_H: eigenfunction iterate vanished at node {node}"
                )
            }
            Error::NormalizationFailed { defect, allowed } => write!(
                f,
                "normalized potential defect {defect:e} exceeds the allowed {allowed:e}"
            ),
            Error::NoSignChange {
                t_hi,
                pressure,
                tau,
            } => {
                write!(f, "NO_SIGN_CHANGE: pressure stayed ")?;
                match pressure {
                    Some(p) => write!(f, "positive ({p:e}) up to t = {t_hi}")?,
                    None => write!(f, "undefined at t = {t_hi}")?,
                }
                write!(f, "; summability threshold estimate {tau}")
            }
            Error::ExpansionNotStrict(name) => write!(
                f,
                "system `{name}` has expansion constant 1; pressure is not strictly decreasing"
            ),
            Error::MissingBowenData { needed, available } => write!(
                f,
                "Bowen constants needed up to depth {needed}, only {available} available"
            ),
            Error::Underflow(what) => write!(f, "all weights underflowed: {what}"),
            Error::Mismatch(what) => write!(f, "mismatched inputs: {what}"),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
