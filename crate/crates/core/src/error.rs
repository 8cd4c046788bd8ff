use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {node} out of range (n = {n})")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("rumor and positive seed sets overlap at node {0}")]
    OverlappingSeeds(usize),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("{what} exceeds guard: {actual} > {limit}")]
    GuardExceeded {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("malformed sample cache: {0}")]
    Cache(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
