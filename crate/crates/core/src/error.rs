use thiserror::Error;

/// Errors raised while reading a CVRPLIB instance document.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed header entry: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("line {line}: malformed section entry: {msg}")]
    MalformedEntry { line: usize, msg: String },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("line {line}: unsupported edge weight type {value}")]
    UnsupportedEdgeWeight { line: usize, value: String },
    #[error("line {line}: demand exceeds capacity (node {node}: {demand} > {capacity})")]
    DemandExceedsCapacity {
        line: usize,
        node: usize,
        demand: u64,
        capacity: u64,
    },
    #[error("line {line}: customer {node} has zero demand")]
    ZeroDemand { line: usize, node: usize },
    #[error("line {line}: non-finite coordinate for node {node}")]
    NonFiniteCoordinate { line: usize, node: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("node index {index} out of range (instance has {nodes} nodes)")]
pub struct BoundsError {
    pub index: usize,
    pub nodes: usize,
}

#[derive(Debug, Error)]
pub enum SolutionIoError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("customer {0} is not part of the instance")]
    UnknownCustomer(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Raised by [`crate::solution::gap`] when the reference cost is not positive.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("best-known cost must be positive, got {0}")]
pub struct GapDomainError(pub f64);

/// Errors from the selector network: weight loading and shape checks.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("bad magic bytes in weight container")]
    BadMagic,
    #[error("weight container truncated while reading {0}")]
    Truncated(String),
    #[error("tensor {name}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor {0} is missing")]
    MissingTensor(String),
    #[error("tensor {0} appears more than once")]
    DuplicateTensor(String),
    #[error("tensor {0} is not recognised")]
    UnknownTensor(String),
    #[error("tensor {0} contains a non-finite value")]
    NonFinite(String),
    #[error("tensor {0} has a non-positive running variance")]
    NonPositiveVariance(String),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DestroyError {
    #[error("seed customer {0} is not allowed for removal")]
    SeedNotAllowed(usize),
    #[error("seed customer {0} is not routed in the solution")]
    SeedNotRouted(usize),
}

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("aspiration probability {0} outside [0, 1]")]
    Aspiration(f64),
    #[error("threshold {0} outside [0, 1]")]
    Threshold(f64),
    #[error("remark period must be at least 1")]
    ZeroPeriod,
    #[error("unknown preset {0}")]
    UnknownPreset(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid argument: {0}")]
pub struct InvalidArgument(pub String);
