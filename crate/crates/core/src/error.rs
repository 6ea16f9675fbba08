use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("fields are defined on different meshes")]
    MeshMismatch,
    #[error("missing boundary value at node {0}")]
    MissingBoundaryValue(usize),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("malformed MatrixMarket input: {0}")]
    MatrixMarket(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
