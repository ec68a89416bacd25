use std::fmt;
use std::path::PathBuf;

use colehopf::expr::EvalError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// Constraint violation, failed verification or degenerate field.
    Fail,
}

impl Status {
    pub fn from_pass(pass: bool) -> Status {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Malformed or incomplete configuration.
    Config(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Core(colehopf::Error),
}

pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Malformed input maps to 3, everything the numerics ran into to 2.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_RUNTIME,
            CliError::Core(e) => match e.root() {
                colehopf::Error::Parse(_)
                | colehopf::Error::InvalidInput(_)
                | colehopf::Error::Eval(EvalError::Unbound(_)) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<colehopf::Error> for CliError {
    fn from(e: colehopf::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<colehopf::expr::ParseError> for CliError {
    fn from(e: colehopf::expr::ParseError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
