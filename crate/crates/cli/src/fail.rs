//! Exit codes.
//!
//! | code | meaning                                        |
//! |------|------------------------------------------------|
//! | 0    | success                                        |
//! | 1    | internal error                                 |
//! | 2    | bad flags or configuration                     |
//! | 3    | key exhausted or restart required              |
//! | 4    | K0 fingerprint or parameter mismatch with peer |
//! | 5    | transport failure                              |
//! | 6    | one-time-pad cursor sidecar corrupt            |

use std::fmt;

use noisekey::Error;

pub const BAD_FLAGS: u8 = 2;
pub const EXHAUSTED: u8 = 3;
pub const MISMATCH: u8 = 4;
pub const TRANSPORT: u8 = 5;
pub const SIDECAR: u8 = 6;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CmdResult<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }

    pub fn flags(msg: impl fmt::Display) -> Self {
        Failure::new(BAD_FLAGS, anyhow::anyhow!("{msg}"))
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.error = self.error.context(what.to_string());
        self
    }
}

/// Default classification of library errors.
pub fn classify(e: &Error) -> u8 {
    match e {
        Error::KeyExhausted { .. } => EXHAUSTED,
        Error::FingerprintMismatch | Error::ConfigMismatch(_) => MISMATCH,
        Error::InvariantBreach(_) | Error::UndefinedLikelihood => 1,
        _ => BAD_FLAGS,
    }
}

/// Classification for errors raised while talking to a peer.
pub fn classify_transport(e: &Error) -> u8 {
    match e {
        Error::Io(_)
        | Error::BadMagic
        | Error::BadVersion(_)
        | Error::BadLength(_)
        | Error::BadTag
        | Error::ProtocolViolation(_) => TRANSPORT,
        other => classify(other),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(classify(&e), e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(BAD_FLAGS, e)
    }
}

pub fn transport(e: Error) -> Failure {
    Failure::new(classify_transport(&e), e)
}
