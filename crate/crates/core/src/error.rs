use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("path is not composable: edge {next} does not start where edge {prev} ends")]
    NonComposablePath { prev: String, next: String },

    #[error("mesh size {0} is outside (0, 1]")]
    InvalidDelta(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid system: {0}")]
    InvalidSystem(ValidationReport),

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("matrix is not irreducible")]
    NotIrreducible,

    #[error("power iteration did not converge after {0} iterations")]
    ConvergenceFailure(usize),

    #[error("cannot bracket the dimension: Phi(0) = {0} < 1")]
    BracketFailure(f64),

    #[error("condensation set is empty")]
    EmptyCondensation,

    #[error("every condensation set is empty; the system is homogeneous")]
    HomogeneousSystem,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("chain never stops: no vertex with a condensation set has positive stopping weight")]
    NoCondensation,

    #[error("invalid probability scheme: {0}")]
    InvalidScheme(String),

    #[error("insufficient samples: need at least {needed} per vertex, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("map on edge {0} is not a similarity; its image region is not polygonal")]
    NotSimilarity(String),

    #[error("unsupported ambient dimension {0}")]
    UnsupportedDimension(usize),

    #[error("no witness farther than {0} from the region boundary; refine the cloud")]
    InsufficientResolution(f64),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
