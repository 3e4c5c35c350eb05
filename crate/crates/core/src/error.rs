use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported algebra family `{0}` (expected `su` or `sl_real`)")]
    UnsupportedFamily(String),

    #[error("rank parameter n = {0} is too small (need n >= 2)")]
    InvalidRank(usize),

    #[error("algebra failed a structural check: {0}")]
    Construction(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("regularity is indeterminate: relative root separation {separation:.3e} lies inside the guard band")]
    Indeterminate { separation: f64 },

    #[error("element is not regular semisimple")]
    NotRegular,

    #[error("orbit parameter is not regular: {0}")]
    NonRegularLambda(String),

    #[error("input lies within {distance:.3e} (relative) of a root hyperplane")]
    Degenerate { distance: f64 },

    #[error("unsupported real form: {0}")]
    UnsupportedRealForm(String),

    #[error("unsupported target Cartan: {0}")]
    UnsupportedTarget(String),

    #[error("invalid multiplicity assignment: {0}")]
    InvalidMultiplicity(String),

    #[error("point is not on the coadjoint orbit (invariant mismatch {mismatch:.3e})")]
    OffOrbit { mismatch: f64 },

    #[error("calibration estimate {estimate:.3e} is consistent with zero (stderr {stderr:.3e})")]
    CalibrationZero { estimate: f64, stderr: f64 },

    #[error("input outside the split regular set: {0}")]
    NonSplit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
