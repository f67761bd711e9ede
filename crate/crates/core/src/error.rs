use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("truncation dim {dim} too small: discarded mass {tail:.3e}")]
    TruncationTooSmall { dim: usize, tail: f64 },

    #[error("conditioning event has vanishing probability ({0:.3e})")]
    ZeroProbability(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("no root in bracket [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("moment order l={l}, s={s} exceeds supported total order {max}")]
    IndexOutOfRange { l: usize, s: usize, max: usize },

    #[error("covariance is not physical: det = {0:.6e} < 1/4")]
    NonPhysicalCovariance(f64),

    #[error("grid too coarse: refined {fine:.6e} vs coarse {coarse:.6e}")]
    GridTooCoarse { coarse: f64, fine: f64 },

    #[error("invalid {name}: {msg}")]
    InvalidParameter { name: &'static str, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, msg: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        msg: msg.into(),
    }
}
