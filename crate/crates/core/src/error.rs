use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter fell outside the domain of the function.
    #[error("domain error: {name} = {value} ({requirement})")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("index {index} out of range for sequence of length {len}")]
    Index { index: usize, len: usize },

    /// Combinatorial enumeration requested beyond the supported size.
    #[error("size {requested} exceeds the supported maximum of {max}")]
    Size { requested: usize, max: usize },

    /// The expectation being evaluated is infinite for these parameters.
    #[error("expectation is infinite: {0}")]
    Infinite(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            requirement: "must be positive and finite",
        })
    }
}

pub(crate) fn require_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            requirement: "must lie strictly inside (0, 1)",
        })
    }
}
