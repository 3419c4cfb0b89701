use thiserror::Error;

/// Exit codes: 2 configuration / input, 3 numerical failure, 4 enumeration
/// cap exceeded, 5 I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ambigame::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ambigame::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 5,
            CliError::Core(e) => match e {
                E::CapExceeded { .. } => 4,
                E::Numerical(_) | E::RankDeficient { .. } | E::OutOfDomain { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
