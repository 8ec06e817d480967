//! Exit-code contract: 0 pass, 1 property failure, 2 resource cap, 3 input
//! error.

use std::fmt;

use mrlab_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass = 0,
    PropertyFailure = 1,
    CapExceeded = 2,
    InputError = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Status of a failed computation.
    pub fn of(err: &Error) -> Self {
        match err {
            Error::CapExceeded { .. } => Status::CapExceeded,
            Error::InvalidInput(_)
            | Error::Validation(_)
            | Error::Parse(_)
            | Error::NotApplicable(_)
            | Error::ZeroLikelihood { .. } => Status::InputError,
            Error::Io(_) => Status::CapExceeded,
            Error::CrossCheck { .. } | Error::Lp(_) | Error::NonFinite { .. } => Status::PropertyFailure,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            status: Status::of(&e),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            status: Status::CapExceeded,
            message: format!("writing output: {e}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        let status = e
            .chain()
            .find_map(|c| c.downcast_ref::<Error>().map(Status::of))
            .unwrap_or(Status::CapExceeded);
        CliError {
            status,
            message: format!("{e:#}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn input_error(msg: impl Into<String>) -> CliError {
    CliError {
        status: Status::InputError,
        message: msg.into(),
    }
}
