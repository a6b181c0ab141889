use thiserror::Error;

/// Errors produced while building or querying models, trees and networks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown vertex: {0}")]
    UnknownVertex(String),

    #[error("point {0:?} is not resolvable in the tree")]
    Unresolvable(Vec<f64>),

    #[error("pre-augmented tree property violated at level {level}: ({x}, {y}) are horizontal neighbours but their parents are not")]
    NotPreAugmented { level: usize, x: usize, y: usize },

    #[error("terminal sets are disconnected")]
    Disconnected,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::Numerical(_) | Error::Disconnected | Error::NotPreAugmented { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
