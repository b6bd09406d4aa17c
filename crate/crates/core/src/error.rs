use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scalar solver or optimizer failed to converge or saw a shape it
    /// cannot handle.
    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
