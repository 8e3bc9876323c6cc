use crate::abi::ErrorCode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The bytes are not a decodable WebAssembly module.
    #[error("not a WebAssembly module: {0}")]
    InvalidModule(String),

    /// The module decodes but its export set violates the ABI.
    #[error("invalid export set: {0}")]
    InvalidExports(String),

    /// A digest pin did not match the loaded binary.
    #[error("digest mismatch: expected {expected}, actual {actual}")]
    DigestMismatch { expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("network unreachable: {0}")]
    NetworkUnreachable(String),

    #[error("i/o failure: {0}")]
    FailedIo(String),

    #[error("handle cancelled")]
    Cancelled,

    /// The image lacks the capability bit for the requested role.
    #[error("image cannot {0}: capability not exported")]
    MissingCapability(&'static str),

    /// A guest export returned a negative status.
    #[error("guest returned {code}: {}", crate::abi::errno_to_message(*.code))]
    Guest { code: i32 },

    /// The guest instance trapped.
    #[error("guest trapped: {0}")]
    Trap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Constructs the error matching a negative guest return code.
    pub(crate) fn from_guest_code(code: i32) -> Error {
        match ErrorCode::from_i32(code) {
            Some(ErrorCode::NetworkUnreachable) => {
                Error::NetworkUnreachable("reported by guest".to_owned())
            }
            Some(ErrorCode::InvalidConfig) => Error::InvalidConfig("rejected by guest".to_owned()),
            Some(ErrorCode::FailedIo) => Error::FailedIo("reported by guest".to_owned()),
            _ => Error::Guest { code },
        }
    }

    /// The ABI error code this error maps to (used for exit statuses and
    /// assertions).
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::InvalidModule(_) | Error::InvalidArgument(_) => ErrorCode::InvalidArgument,
            Error::InvalidExports(_) => ErrorCode::InvalidFunction,
            Error::DigestMismatch { .. } => ErrorCode::General,
            Error::InvalidConfig(_) => ErrorCode::InvalidConfig,
            Error::NetworkUnreachable(_) => ErrorCode::NetworkUnreachable,
            Error::FailedIo(_) | Error::Io(_) | Error::Trap(_) | Error::Cancelled => {
                ErrorCode::FailedIo
            }
            Error::MissingCapability(_) => ErrorCode::InvalidFunction,
            Error::Guest { code } => ErrorCode::from_i32(*code).unwrap_or(ErrorCode::General),
        }
    }
}
