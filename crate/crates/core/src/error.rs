use thiserror::Error;

/// Errors produced by the analytics engine and its I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A record in an input stream could not be parsed.
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    /// A numeric field fell outside its declared range.
    #[error("line {line}: {field} = {value} outside [{min}, {max}]")]
    OutOfRange {
        line: u64,
        field: String,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Configuration failed validation at load time.
    #[error("config: {0}")]
    Config(String),

    /// Geometry input admits no solution (coincident eyes, collinear landmarks).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A metric that needs both label classes was given only one.
    #[error("labels contain a single class: {0}")]
    SingleClass(String),

    /// Input data violates a stream invariant (e.g. non-monotone timestamps).
    #[error("invalid stream: {0}")]
    InvalidStream(String),

    /// A synthetic scenario specification is internally inconsistent.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
