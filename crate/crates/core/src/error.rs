use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: curves are not evaluated on the same grid")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("insufficient sample: need at least {needed} curves, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("dimension error: requested {requested} components but only {retained} are retained")]
    Dimension { requested: usize, retained: usize },

    #[error("degenerate component {index}: eigenvalue {eigenvalue:e} is at or below the floor {floor:e}")]
    DegenerateComponent {
        index: usize,
        eigenvalue: f64,
        floor: f64,
    },

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("curve {curve}: {message}")]
    Row { curve: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Row { .. } | Error::Csv(_) | Error::Json(_) => 3,
            Error::Configuration(_) => 4,
            Error::DegenerateComponent { .. }
            | Error::DegenerateCovariance(_)
            | Error::DegenerateInput(_)
            | Error::InsufficientSample { .. } => 5,
            Error::GridMismatch
            | Error::InvalidGrid(_)
            | Error::InvalidSample(_)
            | Error::Dimension { .. }
            | Error::Resolution(_) => 6,
            Error::Io(_) => 7,
        }
    }
}
