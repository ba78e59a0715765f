use thiserror::Error;

use crate::constraints::ConstraintError;
use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid orbital interaction parameters: {0}")]
    Parameter(ValidationReport),

    #[error(transparent)]
    Constraint(#[from] ConstraintError),

    #[error("eigensolver failed to converge for a {dim}x{dim} matrix (residual {residual:.3e})")]
    NoConvergence { dim: usize, residual: f64 },

    #[error("eigensolver failed at k = ({:.6}, {:.6}, {:.6}): {source}", k[0], k[1], k[2])]
    AtKPoint {
        k: [f64; 3],
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is not Hermitian: |H - H^H| = {deviation:.3e} at ({row}, {col})")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("band {band} is degenerate with band(s) {competing:?} along the stencil; effective mass is ambiguous")]
    DegenerateBand { band: usize, competing: Vec<usize> },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("value outside its domain: {0}")]
    Domain(String),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("unknown band feature `{0}`")]
    UnknownFeature(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::DegenerateBand { .. } => true,
            Error::AtKPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
