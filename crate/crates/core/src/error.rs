use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unstable Hawkes specification: spectral radius {0:.6} >= 1")]
    Unstable(f64),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("not positive semi-definite: {0}")]
    NotPsd(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for bad input, 3 for a numerical stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Unstable(_)
            | Error::LatticeMismatch(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Config(_) => 2,
            Error::Singular(_) | Error::NotPsd(_) | Error::InsufficientData(_) | Error::Numerical(_) => 3,
        }
    }
}
