use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures of the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Map parameters outside `0 < α < 1`, `0 ≤ ε ≤ 1/8`.
    Parameter { alpha: f64, epsilon: f64 },
    /// Point outside the domain of the requested operation.
    Domain { x: f64 },
    /// Value outside the image of the requested branch.
    Range { y: f64, lo: f64, hi: f64 },
    /// Derivative requested at a partition point without a side.
    Ambiguous { x: f64 },
    /// Point falls in the unresolved neighbourhood of `3/8`.
    Unresolved { x: f64 },
    /// Iterative solver stopped without meeting its tolerance.
    Convergence { what: &'static str, residual: f64 },
    /// A truncated series or sum left a remainder larger than allowed.
    Truncation { what: &'static str, bound: f64, limit: f64 },
    /// Two step densities do not share a grid.
    Grid,
    /// Free-form invalid input.
    Invalid(&'static str),
}

impl Error {
    /// Numerical failures (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::Truncation { .. } | Error::Unresolved { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter { alpha, epsilon } => write!(
                f,
                "parameter error: need 0 < alpha < 1 and 0 <= epsilon <= 1/8, got alpha={alpha}, epsilon={epsilon}"
            ),
            Error::Domain { x } => write!(f, "domain error: x={x} outside the domain"),
            Error::Range { y, lo, hi } => {
                write!(f, "range error: y={y} outside branch image [{lo}, {hi}]")
            }
            Error::Ambiguous { x } => {
                write!(f, "ambiguous derivative at partition point x={x}; supply a side")
            }
            Error::Unresolved { x } => write!(f, "x={x} lies in the unresolved region near 3/8"),
            Error::Convergence { what, residual } => {
                write!(f, "convergence error in {what}: residual {residual:e}")
            }
            Error::Truncation { what, bound, limit } => {
                write!(f, "truncation error in {what}: bound {bound:e} exceeds {limit:e}")
            }
            Error::Grid => write!(f, "grid error: densities live on incompatible grids"),
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
