use thiserror::Error;

/// Errors surfaced by construction, parsing, search, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid reward machine: {0}")]
    InvalidRewardMachine(String),

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("symbol index {symbol} out of range for alphabet of size {alphabet_len}")]
    UnknownSymbol { symbol: usize, alphabet_len: usize },

    #[error("machine state {state} out of range for {n_states} states")]
    BadState { state: usize, n_states: usize },

    #[error("no valid neighbor found after {attempts} proposals")]
    ResampleLimitExceeded { attempts: usize },

    #[error("non-finite value encountered: {0}")]
    NonFiniteValue(String),

    #[error("solver failed to converge within {sweeps} sweeps")]
    SolverStalled { sweeps: usize },

    #[error("no Q-value for state {state}, action {action}")]
    MissingQ { state: usize, action: usize },

    #[error("reward machine alphabet does not match the MDP label alphabet")]
    AlphabetMismatch,

    #[error("grid row {row} has a different width than the first row")]
    NonRectangular { row: usize },

    #[error("grid must contain exactly one start cell, found {count}")]
    NoStart { count: usize },

    #[error("unknown grid character {ch:?} at row {row}, column {col}")]
    UnknownChar { ch: char, row: usize, col: usize },

    #[error("unknown environment {name:?}")]
    UnknownEnvironment { name: String },

    #[error("malformed reward machine file: {0}")]
    RmFormat(String),

    #[error("malformed demonstration: {0}")]
    DemoFormat(String),

    #[error("malformed evaluation report: {0}")]
    ReportFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
