use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: String,
        needed: u128,
        budget: u128,
    },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("system is not highly non-singular: {0}")]
    NotHighlyNonSingular(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn budget(what: impl Into<String>, needed: u128, budget: u128) -> Self {
        Error::Budget {
            what: what.into(),
            needed,
            budget,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::InvalidInput(_) | Error::Json(_) | Error::Io(_) => 2,
            Error::Budget { .. } | Error::Overflow(_) => 3,
            Error::NotHighlyNonSingular(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
