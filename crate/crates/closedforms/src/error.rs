use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("entry off-grid at ({row}, {col}): value {value}, distance {distance:e}")]
    OffGrid { row: usize, col: usize, value: f64, distance: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("abelian Lie algebra rejected: ad_e is the zero map")]
    Abelian,
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("non-maximal-rank input: {0}")]
    NotMaximal(String),
    #[error("reduction hypotheses violated: {0}")]
    Hypotheses(String),
    #[error("size guard exceeded: {0}")]
    Guard(String),
    #[error("{0}")]
    Rejected(String),
    #[error("target rank unreachable: {0}")]
    Unreachable(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Mathematical rejections map to exit code 2, everything else to 1.
    pub fn is_rejection(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Parse(_))
    }
}
