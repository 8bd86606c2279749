//! Error type shared by all estimator and optimizer operations.

use core::fmt;

/// Errors produced by chain construction, expectation evaluation, and
/// minimization.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Adjacent stages disagree on their inner-value dimensions.
    DimensionMismatch { outer_in: usize, inner_out: usize },
    /// A chain needs at least an outer and an innermost stage.
    EmptyChain,
    /// A stage produced NaN or an infinity on some observation.
    NonFiniteValue,
    /// Sample standard deviation is zero; the bandwidth rule is undefined.
    DegenerateSample,
    /// Requested kernel moment exceeds the kernel order.
    OrderExceeded { alpha: f64, order: f64 },
    /// Adaptive quadrature could not meet its tolerance within budget.
    QuadratureFailure,
    /// Parameters outside their documented ranges.
    BadParameters(&'static str),
    /// The minimum was attained at a bracket endpoint; the bracket likely
    /// excludes the true minimizer.
    BracketTooNarrow { endpoint: f64 },
    /// The box/budget constraints admit no feasible point.
    InfeasibleDomain,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { outer_in, inner_out } => write!(
                f,
                "stage dimension mismatch: outer expects eta of dim {outer_in}, inner produces {inner_out}"
            ),
            Self::EmptyChain => write!(f, "chain requires at least two stages (k >= 1)"),
            Self::NonFiniteValue => write!(f, "stage evaluation produced a non-finite value"),
            Self::DegenerateSample => write!(f, "degenerate sample: zero standard deviation"),
            Self::OrderExceeded { alpha, order } => {
                write!(f, "moment order {alpha} exceeds kernel order {order}")
            }
            Self::QuadratureFailure => write!(f, "quadrature tolerance not met within budget"),
            Self::BadParameters(what) => write!(f, "bad parameters: {what}"),
            Self::BracketTooNarrow { endpoint } => {
                write!(f, "minimizer pinned at bracket endpoint {endpoint}")
            }
            Self::InfeasibleDomain => write!(f, "empty feasible set"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
