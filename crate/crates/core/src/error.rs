use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the design, optimization and estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The design matrix lost rank; `column` is linearly dependent on `collinear_with`.
    #[error("singular design: column `{column}` is collinear with {collinear_with:?}")]
    SingularDesign {
        column: &'static str,
        collinear_with: Vec<&'static str>,
    },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("fit has no `{0}` coefficient")]
    MissingCoefficient(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidParameter(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
