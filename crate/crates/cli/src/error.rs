use std::fmt;

/// Failure of a CLI run, carrying the exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 2).
    Usage(String),
    /// A pipeline stage failed (exit 3, or 4 for oracle failures).
    Stage(keyshap::Error),
    /// Replay produced different bytes or saw changed inputs (exit 3).
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Stage(e) if e.is_oracle() => 4,
            CliError::Stage(_) | CliError::Mismatch(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error[usage]: {m}"),
            CliError::Stage(e) => {
                write!(f, "error[{}]: {e}", e.name())?;
                if let keyshap::Error::OracleIo { payload: Some(p), .. } = e {
                    write!(f, "\n  payload: {p}")?;
                }
                Ok(())
            }
            CliError::Mismatch(m) => write!(f, "error[replay-mismatch]: {m}"),
        }
    }
}

impl From<keyshap::Error> for CliError {
    fn from(e: keyshap::Error) -> Self {
        CliError::Stage(e)
    }
}
