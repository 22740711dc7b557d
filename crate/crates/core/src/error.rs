use thiserror::Error;

/// Why a received subframe could not be turned into a transport block.
///
/// These are kept apart from a data CRC failure, which is reported as
/// `crc_ok == false` on a successful decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeFailure {
    #[error("no reference signal found in the received grid")]
    NoReference,
    #[error("control information failed its CRC")]
    ControlCrc,
    #[error("control information carries an invalid field")]
    ControlInvalid,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decode failure: {0}")]
    Decode(#[from] DecodeFailure),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
