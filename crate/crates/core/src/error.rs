use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported cone/norm combination: {0}")]
    UnsupportedCombination(String),

    #[error("lattice operations require the orthant cone")]
    NotALattice,

    #[error("lambda = {lambda} lies within the spectral bracket [{lower}, {upper}]")]
    SpectralProximity { lambda: f64, lower: f64, upper: f64 },

    #[error("singular linear system (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("residual {residual:e} exceeds the bound {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("system is not input-to-state stable: spectral upper bound {upper} >= 1")]
    NotIss { upper: f64 },

    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),

    #[error("unknown gallery entry '{0}'")]
    UnknownGallery(String),

    #[error("parse error at line {line}{}: {message}", field.map(|f| format!(", field {f}")).unwrap_or_default())]
    Parse {
        line: usize,
        field: Option<usize>,
        message: String,
    },
}

impl Error {
    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
