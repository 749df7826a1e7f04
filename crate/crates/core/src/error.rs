use thiserror::Error;

use crate::quantum::StateDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("not a valid density matrix: {0:?}")]
    InvalidState(StateDiagnostics),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integrator step size underflow at t = {t:e} s (h = {h:e} s)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {max_steps} steps before t = {t:e} s")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("steady-state solve failed: {0}")]
    SteadyState(String),

    #[error("degenerate denominator in analytic transmission")]
    DegenerateDenominator,

    #[error("no {what} peak inside the simulation window")]
    PeakNotFound { what: &'static str },

    #[error("retrieved signal still {ratio:e} of its peak at window end")]
    WindowTruncated { ratio: f64 },

    #[error("zero {0} energy")]
    ZeroEnergy(&'static str),

    #[error("efficiency band not bracketed by the detuning grid")]
    BandNotBracketed,

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("config error at line {line}: `{key}`: {reason}")]
    Config {
        key: String,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
