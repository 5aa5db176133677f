use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("valuation {valuation} is below the reserve price {reserve}: no bid")]
    BelowReserve { valuation: f64, reserve: f64 },

    #[error("signal {signal} is below the screening level {screening}: no bid")]
    BelowScreening { signal: f64, screening: f64 },

    #[error("valuation {valuation} lies outside the support [{lo}, {hi}]")]
    OutsideSupport { valuation: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    QuadratureNonConvergence { estimate: f64, error_bound: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder exhausted {iterations} iterations (bracket width {width})")]
    RootNonConvergence { iterations: usize, width: f64 },

    #[error("ODE right-hand side returned a non-finite value at t = {at}")]
    NonFiniteRhs { at: f64 },

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("reserve {reserve} outside achievable range [{lo}, {hi}]")]
    ReserveOutOfRange { reserve: f64, lo: f64, hi: f64 },

    #[error("rank-deficient design; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("strategy bid {bid} exceeds valuation {valuation}")]
    Overbid { bid: f64, valuation: f64 },

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Validation errors come from caller input; everything else is a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::BelowReserve { .. }
                | Error::BelowScreening { .. }
                | Error::OutsideSupport { .. }
                | Error::ReserveOutOfRange { .. }
                | Error::Overbid { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
