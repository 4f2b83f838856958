use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("requested {requested} eigenpairs from a {dim}x{dim} matrix")]
    DimensionOutOfRange { requested: usize, dim: usize },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("{deficient} of {columns} columns are linearly dependent")]
    RankDeficient { deficient: usize, columns: usize },

    #[error("zero effective channel: receive direction undefined")]
    ZeroDirection,

    #[error("precoder of user {user} lost full column rank (condition number {condition:e})")]
    IllConditioned { user: usize, condition: f64 },

    #[error("wrong topology: {0}")]
    Topology(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Input(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}
