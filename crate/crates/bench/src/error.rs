use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    /// Process exit status: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Runtime(_) | BenchError::Io { .. } => 3,
        }
    }
}

impl From<proxsampler_core::Error> for BenchError {
    fn from(e: proxsampler_core::Error) -> Self {
        BenchError::Runtime(e.to_string())
    }
}

pub type BenchResult<T> = Result<T, BenchError>;
