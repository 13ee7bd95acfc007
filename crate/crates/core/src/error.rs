use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("transition ({0},{1}) is forbidden: drive matrix element vanishes")]
    ForbiddenTransition(usize, usize),
    #[error("degenerate drive: {0}")]
    DegenerateDrive(String),
    #[error("carrier {carrier} rad/s is not resonant; nearest transition is ({from},{to}) at {frequency} rad/s")]
    NonResonant { carrier: f64, from: usize, to: usize, frequency: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
