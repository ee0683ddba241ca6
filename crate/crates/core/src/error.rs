use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("weight at row {row} is not positive ({value})")]
    NonPositiveWeight { row: usize, value: f64 },

    #[error("frequency weight at row {row} is not a positive integer ({value})")]
    NonIntegerFrequencyWeight { row: usize, value: f64 },

    #[error("missing or non-finite value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("statistic `{0}` is not available in this representation")]
    UnavailableStatistic(&'static str),

    #[error("cluster labels are required but absent")]
    MissingClusters,

    #[error("malformed within-cluster ordering: {0}")]
    RaggedCluster(String),

    #[error("column `{column}` is declared static but varies within cluster `{cluster}`")]
    NonStaticColumn { column: String, cluster: String },

    #[error("panel is not balanced")]
    NotBalanced,

    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("residual degrees of freedom are not positive (n = {n}, p = {p})")]
    NonPositiveDf { n: f64, p: usize },

    #[error("outcome at row {row} is not 0 or 1 ({value})")]
    NonBinaryOutcome { row: usize, value: f64 },

    #[error("optimizer did not converge within {iterations} iterations")]
    DidNotConverge { iterations: usize },

    #[error("input representation does not support this covariance: {0}")]
    RepresentationMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error at line {line}, column `{column}`: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical procedure itself (singular design,
    /// non-convergence) as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. } | Error::DidNotConverge { .. } | Error::NonPositiveDf { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
