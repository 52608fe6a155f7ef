use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("census sums to {census} but population is {population}")]
    CensusMismatch { census: u64, population: u64 },
    #[error("population is empty")]
    EmptyPopulation,
    #[error("capacity infeasible: {0}")]
    Capacity(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("day {0} is before the calendar epoch")]
    DayOutOfRange(i64),
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("missing checkpoint snapshot: {0}")]
    MissingCheckpoint(String),
    #[error("empty selection")]
    EmptySubset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("series too short: need at least {needed}, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("non-positive value {value} at index {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("infection log is not causally ordered: {0}")]
    CyclicLog(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
