use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("code distance must be at least 2, got {0}")]
    Distance(usize),
    #[error("physical error probability must lie in [0, 1], got {0}")]
    Probability(f64),
    #[error("swap array must be at least 1024 bytes, got {0}")]
    SwapArray(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("outcome records come from different codes")]
    MismatchedOutcomes,
    #[error("snapshot was taken from a different simulator")]
    ForeignSnapshot,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("line probabilities are undefined at p = 0")]
    ZeroProbability,
    #[error("line probability must lie in (0, 1], got {0}")]
    LineProbability(f64),
    #[error("no path between {0} and {1}")]
    Disconnected(String, String),
    #[error("single fault produced {0} detection events of one type")]
    TooManyEvents(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("vertex {0} can reach neither a partner nor a boundary")]
    Unmatchable(usize),
    #[error("matching attempt needs data beyond the active window")]
    WindowViolation,
    #[error("checkpoint token does not belong to this state or is stale")]
    StaleCheckpoint,
    #[error("brute force limited to {max} vertices, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("duplicate vertex on dot {0}")]
    DuplicateVertex(u64),
    #[error("rounds must arrive in order: expected {expected}, got {got}")]
    OutOfOrder { expected: u32, got: u32 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("nothing to emit")]
    Empty,
    #[error("malformed input near token {0}: {1}")]
    Malformed(usize, String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("{kind}-type syndrome not cleared by the correction at round {round}")]
    ResidualSyndrome { kind: char, round: u32 },
    #[error("{kind}-type correction parity disagrees with its data support at round {round}")]
    ParityMismatch { kind: char, round: u32 },
    #[error("estimate needs 0 <= changes <= checks and checks > 0, got {changes}/{checks}")]
    Counts { changes: u64, checks: u64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("line {0}: {1}")]
    Vertex(usize, String),
    #[error("matching failed its certificate: {0}")]
    Certificate(String),
}
