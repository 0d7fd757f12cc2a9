use stochmap_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("malformed file: {0}")]
    Format(String),
    #[error("{0}")]
    Constraint(String),
    #[error("{0}")]
    Core(#[from] Error),
}

impl CliError {
    /// 1 I/O or parse, 2 constraint or precondition, 3 algorithmic failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } | Self::Format(_) => 1,
            Self::Constraint(_) => 2,
            Self::Core(e) => match e {
                Error::ConvergenceFailure
                | Error::NullVectorEncountered { .. }
                | Error::SinhDegenerate { .. }
                | Error::NotResolution { .. }
                | Error::InsufficientOperators { .. }
                | Error::SamplingExhausted { .. } => 3,
                _ => 2,
            },
        }
    }
}
