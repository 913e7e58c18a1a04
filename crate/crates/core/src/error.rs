use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("line {line}: unexpected header {found:?}, expected {expected:?}")]
    Header { line: u64, found: String, expected: String },

    #[error("line {line}: negative value {value}")]
    NegativeValue { line: u64, value: f64 },

    #[error("line {line}: GDP must be positive, got {value}")]
    NonPositiveGdp { line: u64, value: f64 },

    #[error("line {line}: self-holding record for {country}")]
    SelfLoop { line: u64, country: String },

    #[error("line {line}: duplicate key {key}")]
    DuplicateKey { line: u64, key: String },

    #[error("year {0} not present in the input panels")]
    YearAbsent(i32),

    #[error("year {year}: only {count} qualifying countries, need at least {required}")]
    TooFewCountries { year: i32, count: usize, required: usize },

    #[error("unknown country {0:?}")]
    UnknownCountry(String),

    #[error("country lists of network and slice differ")]
    CountryMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
