use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes surfaced by the library. The CLI maps them onto exit
/// codes through [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("t = {t} s is below one oscillator period ({period} s); amplitude values are undefined there")]
    Regime { t: f64, period: f64 },

    #[error("adaptive quadrature did not converge after {panels} panels (estimate {value}, error {error}, worst panel error {worst_panel})")]
    Quadrature {
        value: f64,
        error: f64,
        worst_panel: f64,
        panels: usize,
    },

    #[error("Poisson truncation tail {tail:e} exceeds {limit:e} at n_cut = {n_cut}")]
    TruncationTail { tail: f64, limit: f64, n_cut: usize },

    #[error("phi_t vanishes at t = {t}; the signal is undetectable")]
    UndetectableSignal { t: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("composite dimension {dim} exceeds the desk-scale cap {cap}")]
    SpaceTooLarge { dim: usize, cap: usize },

    #[error("{factor} truncation too small: leakage {leakage:e} > {tolerance:e} at t = {t}")]
    TruncationTooSmall {
        factor: &'static str,
        leakage: f64,
        tolerance: f64,
        t: f64,
    },

    #[error("step size too large: trace drift {drift:e} at t = {t}")]
    StepSize { drift: f64, t: f64 },

    #[error("{aborted} of {total} trajectories produced non-finite values")]
    TrajectoryAborts { aborted: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    InvalidInput,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. }
            | Error::InvalidInput(_)
            | Error::Regime { .. }
            | Error::DimensionMismatch { .. }
            | Error::SpaceTooLarge { .. }
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::InvalidInput,
            Error::Quadrature { .. }
            | Error::TruncationTail { .. }
            | Error::UndetectableSignal { .. }
            | Error::TruncationTooSmall { .. }
            | Error::StepSize { .. }
            | Error::TrajectoryAborts { .. } => ErrorClass::Numerical,
        }
    }

    /// Variant name, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InvalidInput(_) => "invalid_input",
            Error::Regime { .. } => "regime",
            Error::Quadrature { .. } => "quadrature",
            Error::TruncationTail { .. } => "truncation_tail",
            Error::UndetectableSignal { .. } => "undetectable_signal",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SpaceTooLarge { .. } => "space_too_large",
            Error::TruncationTooSmall { .. } => "truncation_too_small",
            Error::StepSize { .. } => "step_size",
            Error::TrajectoryAborts { .. } => "trajectory_aborts",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
