use thiserror::Error;

/// Errors produced by tensor construction, the transform algebra and the codecs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid mode {0}")]
    InvalidMode(usize),

    #[error("transform mismatch: {0}")]
    TransformMismatch(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("{0} out of range")]
    OutOfRange(String),

    #[error("invalid energy level {0}; expected 0 < gamma <= 1")]
    InvalidGamma(f64),

    #[error("corrupted representation: {0}")]
    Corrupted(String),

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported version {0}")]
    VersionMismatch(u32),

    #[error("truncated payload")]
    TruncatedPayload,

    #[error("checksum failure")]
    Checksum,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
