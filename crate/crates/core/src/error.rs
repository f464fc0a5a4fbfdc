use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// What went wrong on a given line of an input file.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-numeric token `{0}`")]
    NonNumeric(String),
    #[error("node id {id} out of range 1..={num_nodes}")]
    NodeOutOfRange { id: usize, num_nodes: usize },
    #[error("duplicate node {0} in hyperedge")]
    DuplicateNode(usize),
    #[error("hyperedge has {0} node(s), at least 2 required")]
    EdgeTooSmall(usize),
    #[error("expected {expected} records, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("bad gadget `{0}`, expected c:delta with c > 0 and delta >= 1")]
    BadGadget(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid seed set: {0}")]
    InvalidSeeds(String),
    #[error("node {0} is not an optimality violation")]
    NotViolating(usize),
    #[error("instance too large for exhaustive check: {0}")]
    TooLarge(String),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("diffusion vector has no positive entry")]
    EmptyVector,
    #[error("invalid diffusion vector: {0}")]
    InvalidVector(String),
    #[error("reference solver did not reach tolerance after {0} sweeps")]
    IterationCap(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
