use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: limit {limit} must exceed base {base}")]
    InvalidRange { base: u64, limit: u64 },

    #[error("primality table covers [{base}, {limit}] but [{required_base}, {required_limit}] is needed")]
    Coverage {
        base: u64,
        limit: u64,
        required_base: u64,
        required_limit: u64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("cannot parse tuple {input:?}: {reason}")]
    TupleParse { input: String, reason: String },

    #[error("modulus {p} is inadmissible: the tuple covers every residue class")]
    InadmissibleModulus { p: u64 },

    #[error("malformed table cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for errors caused by exceeding a memory or work budget.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
