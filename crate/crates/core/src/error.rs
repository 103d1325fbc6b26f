use crate::field::ObservableSet;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("field contains non-finite samples or has the wrong length")]
    InvalidField,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(u8),
    #[error("state has zero norm")]
    DegenerateState,
    #[error("x = {x} lies outside the tabulated range [{min}, {max}]")]
    OutOfDomain { x: f64, min: f64, max: f64 },
    #[error("potential derivative is negative ({slope}) at x = {x}")]
    NonmonotonePotential { x: f64, slope: f64 },
    #[error("bath has no oscillators")]
    EmptyBath,
    #[error("invalid bath: {0}")]
    InvalidBath(&'static str),
    #[error("friction must be non-negative, got {0}")]
    InvalidFriction(f64),
    #[error("measurement resolution must be non-negative, got {0}")]
    InvalidResolution(f64),
    #[error("invalid spline: {0}")]
    InvalidSpline(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("numerical blowup at t = {t}")]
    NumericalBlowup {
        t: f64,
        /// Observables of the last finite state, when one exists.
        last: Option<ObservableSet>,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("memory kernel needs {needed} history samples but the cap is {cap}")]
    MemoryBudgetExceeded { needed: usize, cap: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
