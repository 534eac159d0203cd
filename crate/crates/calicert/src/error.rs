use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps `Input`-like variants (malformed data, violated argument
/// contracts, tripped enumeration guards) to exit code 1 and everything else
/// (I/O and other internal failures) to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    /// A sample's confidence box intersects no bin, so the assignment
    /// constraints cannot be satisfied.
    #[error("sample {id}: confidence box [{lower}, {upper}] reaches no bin")]
    NoAccessibleBin { id: String, lower: f64, upper: f64 },

    /// A point handed to an operation that requires exact feasibility
    /// violates a constraint.
    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),

    /// An enumeration guard tripped (brute-force oracle, grid search).
    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(message: impl Into<String>) -> Self {
        Error::Input(message.into())
    }

    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_)
            | Error::NoAccessibleBin { .. }
            | Error::InfeasiblePoint(_)
            | Error::TooLarge(_)
            | Error::Parse { .. } => 1,
            Error::Io(_) => 2,
        }
    }
}
