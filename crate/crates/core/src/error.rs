use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A parameter lies outside the physically meaningful domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("running key exhausted: needed {needed} bits, {available} available")]
    KeyExhausted { needed: usize, available: usize },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("likelihood undefined: observation off the noiseless constellation")]
    UndefinedLikelihood,

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("refused: {0}")]
    ResourceGuard(String),

    /// Endpoints disagree after a verified cycle. Never expected in a correct run.
    #[error("invariant breach: {0}")]
    InvariantBreach(String),

    #[error("bad frame magic")]
    BadMagic,

    #[error("unsupported frame version {0}")]
    BadVersion(u8),

    #[error("bad length: {0}")]
    BadLength(String),

    #[error("frame integrity tag mismatch")]
    BadTag,

    #[error("K0 fingerprint mismatch")]
    FingerprintMismatch,

    #[error("session configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("malformed key file: {0}")]
    KeyFile(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
