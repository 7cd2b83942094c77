use thiserror::Error;

/// Errors raised across the filtering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbfError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix factorization failed: {0}")]
    Factorization(&'static str),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, FbfError>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(FbfError::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

pub(crate) fn check_finite<'a, I>(context: &'static str, values: I) -> Result<()>
where
    I: IntoIterator<Item = &'a f64>,
{
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FbfError::NonFinite(context))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(FbfError::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}
