use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent input; exit code 1.
    Invalid(String),
    /// A required option was given neither as a flag nor in the config.
    Missing(&'static str),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) => f.write_str(msg),
            CliError::Missing(flag) => write!(f, "missing required option --{flag}"),
        }
    }
}

impl From<orbit_heights::Error> for CliError {
    fn from(e: orbit_heights::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}
