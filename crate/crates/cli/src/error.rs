use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration could not be read or is invalid. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// The run itself failed. Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<brpf::Error> for CliError {
    fn from(e: brpf::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
