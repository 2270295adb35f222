use std::fmt;
use std::path::PathBuf;

use hewflow::ErrorCategory;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CRYPTO: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Core(hewflow::Error),
    /// Core error with the file or item it concerns.
    Context(String, hewflow::Error),
    Usage(String),
    Missing(PathBuf, String),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let category = |e: &hewflow::Error| match e.category() {
            ErrorCategory::Validation => EXIT_VALIDATION,
            ErrorCategory::Crypto => EXIT_CRYPTO,
            ErrorCategory::Resource => EXIT_RESOURCE,
        };
        match self {
            CliError::Core(e) | CliError::Context(_, e) => category(e),
            CliError::Usage(_) | CliError::Missing(..) => EXIT_VALIDATION,
            CliError::Io(..) => EXIT_RESOURCE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Context(what, e) => write!(f, "{what}: {e}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::Missing(p, hint) if hint.is_empty() => write!(f, "missing {}", p.display()),
            CliError::Missing(p, hint) => write!(f, "missing {} ({hint})", p.display()),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<hewflow::Error> for CliError {
    fn from(e: hewflow::Error) -> Self {
        CliError::Core(e)
    }
}
