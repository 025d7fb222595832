use thiserror::Error;

/// Errors produced by graph construction, chain analysis and the experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge ({0}, {0}) is a self-loop")]
    LoopEdge(usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    OutOfRange { vertex: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("chain is not reversible with respect to its stationary distribution")]
    NotReversible,
    #[error("subset must be nonempty")]
    EmptySet,
    #[error("subset must be a proper subset of the state space")]
    FullSet,
    #[error("state space of size {size} exceeds the limit {limit} for {what}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("exact spectral profile requested for {size} states (limit {limit})")]
    TooLargeForExact { size: usize, limit: usize },
    #[error("spectral profile unavailable: {0}")]
    ProfileUnavailable(String),
    #[error("linear system is singular (reducible chain?)")]
    SingularSystem,
    #[error("states must differ")]
    SameState,
    #[error("subset has zero mass")]
    ZeroMass,
    #[error("invalid subset: {0}")]
    BadSubset(String),
    #[error("open probability p = {0} is degenerate for this analysis")]
    DegenerateP(f64),
    #[error("graph is not vertex-transitive")]
    NotTransitive,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
