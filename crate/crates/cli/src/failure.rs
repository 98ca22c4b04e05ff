use std::fmt;

/// Process exit codes.
pub mod code {
    pub const OTHER: i32 = 1;
    /// Reserved by clap for bad command lines.
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const DOMAIN: i32 = 4;
    pub const NOT_CONVERGED: i32 = 5;
}

/// An error carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(code::USAGE, message)
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self::new(code::DOMAIN, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<edmkit::Error> for Failure {
    fn from(e: edmkit::Error) -> Self {
        let code = match e {
            edmkit::Error::Parse { .. } => code::INPUT,
            edmkit::Error::Io(_) => code::OTHER,
            _ => code::DOMAIN,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(code::OTHER, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new(code::OTHER, e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;
