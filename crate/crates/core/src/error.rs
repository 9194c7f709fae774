use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("in {field}: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid metric spec: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("direction is not admissible at this point")]
    InadmissibleInput,
    #[error("metric tensor is degenerate")]
    DegenerateMetric,
    #[error("direction is not timelike")]
    NotTimelike,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension {0} is not supported")]
    UnsupportedDimension(usize),
    #[error("no timelike seed direction found after {attempts} samples")]
    NoTimelikeSeed { attempts: usize },
    #[error("no critical direction converged (best residual {best_residual:e})")]
    NoConvergence { best_residual: f64 },
    #[error("time orientation has not converged")]
    NotConverged,
    #[error("{count} quadrature nodes stayed singular after perturbation")]
    SingularNodes { count: usize, total: usize },
    #[error(
        "det g cannot be prolonged over the ellipsoid ({singular_nodes} singular nodes, \
         shifted-rule discrepancy {discrepancy:e})"
    )]
    DetNotProlongable { singular_nodes: usize, discrepancy: f64 },
    #[error("volume routes disagree: {0}")]
    RouteMismatch(String),
    #[error("at grid point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { source, .. } => source.code(),
            Error::Eval(EvalError::UnboundVariable(_)) => "UnboundVariable",
            Error::Eval(EvalError::NonFiniteResult) => "NonFiniteResult",
            Error::Eval(EvalError::UnsupportedDimension(_)) => "UnsupportedDimension",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::Io(_) => "IoError",
            Error::UnknownMetric(_) => "UnknownMetric",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InadmissibleInput => "InadmissibleInput",
            Error::DegenerateMetric => "DegenerateMetric",
            Error::NotTimelike => "NotTimelike",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::UnsupportedDimension(_) => "UnsupportedDimension",
            Error::NoTimelikeSeed { .. } => "NoTimelikeSeed",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NotConverged => "NotConverged",
            Error::SingularNodes { .. } => "SingularNodes",
            Error::DetNotProlongable { .. } => "DetNotProlongable",
            Error::RouteMismatch(_) => "RouteMismatch",
            Error::AtPoint { source, .. } => source.code(),
        }
    }

    /// Errors caused by the caller's input rather than by the computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidSpec(_)
                | Error::Io(_)
                | Error::UnknownMetric(_)
                | Error::InvalidArgument(_)
        )
    }
}
