use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("incompatible time grids: {0}")]
    IncompatibleGrids(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(
        "matrix is not positive definite: leading minor of order {minor} failed (pivot {pivot:e})"
    )]
    Factorization { minor: usize, pivot: f64 },

    #[error(
        "hyperparameter optimization failed: best objective {best_objective} at \
         (lengthscale={:e}, signal_std={:e}, noise_std={:e}), gradient inf-norm {gradient_norm:e}",
        best_params[0], best_params[1], best_params[2]
    )]
    Optimization {
        best_params: [f64; 3],
        best_objective: f64,
        gradient_norm: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid orientation: {0}")]
    InvalidOrientation(String),

    #[error("degenerate clustering: {0}")]
    DegenerateClustering(String),

    #[error("degenerate null distribution: {0}")]
    DegenerateNull(String),

    #[error("pair ({a}, {b}): {source}")]
    Pair {
        a: String,
        b: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Broad class of the failure, used to pick process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::InvalidOrientation(_) => ErrorKind::Usage,
            Error::InvalidInput(_)
            | Error::IncompatibleGrids(_)
            | Error::DegenerateInput(_)
            | Error::DegenerateClustering(_)
            | Error::Parse { .. }
            | Error::Io(_) => ErrorKind::Data,
            Error::Factorization { .. }
            | Error::Optimization { .. }
            | Error::Numerical(_)
            | Error::DegenerateNull(_) => ErrorKind::Numerical,
            Error::Pair { source, .. } => source.kind(),
        }
    }

    /// Strips any pair context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Pair { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
