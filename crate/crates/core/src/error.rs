use thiserror::Error;

use crate::graph::GraphKind;
use crate::set::VertexSet;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has {0} vertices, at most 64 are supported")]
    TooManyVertices(usize),

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("expected a {expected:?}, got a {found:?}")]
    WrongKind { expected: GraphKind, found: GraphKind },

    #[error("invalid edge between {a} and {b}: {reason}")]
    InvalidEdge { a: usize, b: usize, reason: &'static str },

    #[error("circle marks are not allowed here")]
    CircleMark,

    #[error("graph has a directed cycle")]
    Cycle,

    #[error("graph is not ancestral")]
    NotAncestral,

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("covariance of {subset:?} is not positive definite")]
    DegenerateData { subset: VertexSet },

    #[error("entropy of a {size}-variable subset needs more than {samples} samples")]
    InsufficientSamples { size: usize, samples: usize },

    #[error("not a valid Markov equivalence class: {0}")]
    InvalidMec(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("infeasible simulation configuration: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
