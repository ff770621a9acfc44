use std::fmt;
use std::path::Path;

use fishclim::ErrorCategory;

/// A command failure: the category picks the exit code, the message is
/// printed on one line.
#[derive(Debug)]
pub struct Failure {
    pub category: ErrorCategory,
    pub message: String,
}

impl Failure {
    pub fn new(category: ErrorCategory, message: impl Into<String>) -> Self {
        Failure {
            category,
            message: message.into(),
        }
    }

    pub fn parameter(message: impl Into<String>) -> Self {
        Failure::new(ErrorCategory::Parameter, message)
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Failure::new(ErrorCategory::Parse, message)
    }

    pub fn upstream(message: impl Into<String>) -> Self {
        Failure::new(ErrorCategory::UpstreamMissing, message)
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        Failure::new(ErrorCategory::Degenerate, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::new(ErrorCategory::Io, format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        exit_code(self.category)
    }
}

pub fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Io => 2,
        ErrorCategory::Parse => 3,
        ErrorCategory::Schema => 4,
        ErrorCategory::Degenerate => 5,
        ErrorCategory::UpstreamMissing => 6,
        ErrorCategory::Parameter => 7,
        ErrorCategory::Numerical => 8,
    }
}

impl fmt::Display for Failure {
    /// `error[<category>]: <message>` with the message folded onto one line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {msg}", self.category.as_str())
    }
}

impl From<fishclim::Error> for Failure {
    fn from(e: fishclim::Error) -> Self {
        Failure::new(e.category(), e.to_string())
    }
}
