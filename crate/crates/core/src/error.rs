use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration field is missing or out of range. `field` is the
    /// dotted path of the offending entry, e.g. `species.lambda_nm`.
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// An argument lies outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical parameter (step size, term budget) is unusable.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The multiple-passage series has ratio >= 1 and cannot be summed.
    #[error("divergent series: {0}")]
    Divergence(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
