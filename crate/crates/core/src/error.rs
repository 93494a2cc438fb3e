use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("out of validity range: {0}")]
    OutOfRange(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("unitarity budget exceeded: norm defect {defect:e} > budget {budget:e} at t = {time:e}")]
    BudgetExceeded { defect: f64, budget: f64, time: f64 },

    #[error("wavepacket reached the realization boundary (half size {half_size}) at t = {time:e}")]
    WindowOverflow { half_size: usize, time: f64 },

    #[error("step too large: {0}")]
    StepTooLarge(String),

    #[error("negative radicand {value:e}; tighten the step")]
    NegativeRadicand { value: f64 },

    #[error("eigensolver failed to converge for realization seed {seed:#018x}")]
    Eigensolver { seed: u64 },

    #[error("curves do not cross in the search interval: {0}")]
    NoCrossing(String),

    #[error("wrong regime: {0}")]
    Regime(String),

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("track has no plateau: {0}")]
    NoPlateau(String),

    #[error("insufficient overlap: {0}")]
    InsufficientOverlap(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
