use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("grid mismatch between series and basis")]
    GridMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular factor design (condition number {condition:.3e})")]
    SingularDesign { condition: f64 },

    #[error("degenerate loadings: factor system is singular (condition number {condition:.3e})")]
    DegenerateLoadings { condition: f64 },

    #[error("degenerate factor: centred factor has norm {norm:.3e}")]
    DegenerateFactor { norm: f64 },

    #[error("degenerate input: score matrix has zero variance")]
    DegenerateInput,

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("threshold {threshold} unreachable with up to {p_max} components (best median explained variance {best:.6})")]
    ThresholdUnreachable { threshold: f64, p_max: usize, best: f64 },

    #[error("file not found: {path}")]
    FileNotFound { path: String },

    #[error("ragged CSV: line {line} has {found} fields, expected {expected}")]
    RaggedRow { line: usize, expected: usize, found: usize },

    #[error("non-numeric CSV cell at line {line}, column {column}: `{value}`")]
    NonNumeric { line: usize, column: usize, value: String },

    #[error("column {column} has zero variance and cannot be scaled")]
    ZeroVarianceColumn { column: usize },

    #[error("{0}")]
    Data(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
