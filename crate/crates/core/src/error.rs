use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid system configuration: {0}")]
    InvalidSystem(String),

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    /// A decoder/message pair that violates the SIC order `1 <= k <= r <= K`.
    #[error("decoder {decoder} cannot decode message {message} with {users} users (need 1 <= k <= r <= K)")]
    DecodingOrder {
        decoder: usize,
        message: usize,
        users: usize,
    },

    #[error("index {index} out of range for user {user} with codebook size {size}")]
    IndexOutOfRange {
        user: usize,
        index: usize,
        size: usize,
    },

    #[error("operation requires K = 2 users, got K = {0}")]
    RequiresTwoUsers(usize),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("invalid estimator parameters: {0}")]
    InvalidEstimator(String),

    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("invalid baseline: {0}")]
    InvalidBaseline(String),

    #[error("cannot combine MI results: {0}")]
    Aggregation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user-supplied configuration rather than I/O.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv(_) | Error::Json(_))
    }
}
