use thiserror::Error;

/// Errors produced by dataset validation, fitting, and I/O.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precision not PD: {0}")]
    NotPositiveDefinite(String),

    #[error("singular covariance, positive lambda required")]
    SingularCovariance,

    #[error("design matrix is rank deficient; dependent columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("non-finite value at cell ({row}, {col}): {what}")]
    NonFinite {
        row: usize,
        col: usize,
        what: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code the CLI maps this error to: 1 for input problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotPositiveDefinite(_) | Error::SingularCovariance | Error::NonFinite { .. } => {
                2
            }
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(
    context: &'static str,
    expected: (usize, usize),
    found: (usize, usize),
) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension {
            context,
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", found.0, found.1),
        });
    }
    Ok(())
}
