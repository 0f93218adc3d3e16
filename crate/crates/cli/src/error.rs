//! Error taxonomy of the CLI, mapped onto the stable exit-code contract:
//! 0 success, 2 input error, 3 numerical failure, 4 configuration error.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input files.
    Input(String),
    /// Invalid or contradictory configuration.
    Config(String),
    /// The computation itself failed (non-convergence, degenerate
    /// systems, structure violations).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Config(_) => 4,
        }
    }

    /// Wraps a library error raised while running stage `stage`; the
    /// message keeps the stage name so a failing pipeline names its step.
    pub fn from_stage(stage: &str, e: shssa::Error) -> Self {
        let msg = format!("{stage}: {e}");
        if e.is_numerical() {
            CliError::Numerical(msg)
        } else {
            CliError::Config(msg)
        }
    }

    pub fn input(stage: &str, detail: impl fmt::Display) -> Self {
        CliError::Input(format!("{stage}: {detail}"))
    }

    pub fn config(detail: impl fmt::Display) -> Self {
        CliError::Config(detail.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
