use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the range an operation accepts.
    #[error("invalid-input: {0}")]
    InvalidInput(String),

    /// A DSL string (generator, space, sampler) could not be parsed.
    #[error("invalid-dsl: unknown or malformed token `{token}` in `{input}`")]
    Dsl { token: String, input: String },

    /// A user-supplied generator table failed the monotone-concave checks.
    #[error("invalid-generator: {0}")]
    InvalidGenerator(String),

    #[error("overlapping-supports: blocks {0} and {1} overlap on a set of positive measure")]
    OverlappingSupports(usize, usize),

    /// An iterative solver could not bracket or converge.
    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dsl(token: impl Into<String>, input: impl Into<String>) -> Self {
        Error::Dsl {
            token: token.into(),
            input: input.into(),
        }
    }
}
