use std::fmt;
use std::io;
use std::path::Path;

use techstop::ingest::IngestError;
use techstop::lists::ListError;
use techstop::pipeline::PipelineError;
use techstop::review::ReviewError;
use techstop_review::StoreError;

pub const USAGE: i32 = 1;
pub const DATA: i32 = 2;
pub const IO: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { code: DATA, message: message.into() }
    }

    /// Prefixes the message with where it happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        let code = if err.kind() == io::ErrorKind::InvalidData { DATA } else { IO };
        CliError {
            code,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        let code = match err {
            IngestError::Io(_) => IO,
            IngestError::UnknownFormat(_) => USAGE,
            _ => DATA,
        };
        CliError { code, message: err.to_string() }
    }
}

impl From<ListError> for CliError {
    fn from(err: ListError) -> Self {
        let code = match err {
            ListError::Io { .. } => IO,
            _ => USAGE,
        };
        CliError { code, message: err.to_string() }
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Config(_) => CliError::usage(err.to_string()),
            PipelineError::List(e) => e.into(),
            _ => CliError::data(err.to_string()),
        }
    }
}

impl From<ReviewError> for CliError {
    fn from(err: ReviewError) -> Self {
        CliError::data(err.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(err: StoreError) -> Self {
        let code = match err {
            StoreError::Log { .. } => IO,
            StoreError::List(ListError::Io { .. }) => IO,
            _ => DATA,
        };
        CliError { code, message: err.to_string() }
    }
}
