use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("ring must have at least one node")]
    EmptyRing,
    #[error("no robot at node {0}")]
    NoRobot(usize),
    #[error("node {node} outside ring of size {n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("inter-distance undefined: fewer than two occupied nodes")]
    InterDistanceUndefined,
    #[error("decomposition on tower configuration")]
    TowerDecomposition,
    #[error("invalid occupancy character {ch:?} at position {pos}")]
    BadOccupancyChar { ch: char, pos: usize },
    #[error("count {count} at node {node} exceeds the occupancy encoding")]
    CountTooLarge { node: usize, count: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("no rule for configuration {0}")]
    NoRule(String),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Reasons a configuration is rejected as a simulation start.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("k must be even (got k={0})")]
    OddRobots(usize),
    #[error("k must be greater than 8 (got k={0})")]
    TooFewRobots(usize),
    #[error("n must be odd (got n={0})")]
    EvenRing(usize),
    #[error("n must be greater than k+3 (got n={n}, k={k})")]
    RingTooSmall { n: usize, k: usize },
    #[error("initial configuration is periodic")]
    Periodic,
    #[error("initial configuration contains a tower")]
    Tower,
    #[error("configuration has no robots")]
    NoRobots,
    #[error("configuration is outside the protocol's reachable states")]
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("scheduler contract violation: {0}")]
    ContractViolation(String),
    #[error("invalid initial configuration: {0}")]
    InvalidInitial(#[from] ConfigError),
    #[error("unknown scheduler {0:?}")]
    UnknownScheduler(String),
    #[error("the exhaustive scheduler drives state-space exploration, not single runs")]
    ExhaustiveRun,
    #[error(transparent)]
    Ring(#[from] RingError),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}
