use thiserror::Error;

/// Errors raised by the correspondence, kernel and variational layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state {0} has no successor")]
    EmptySuccessor(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("index {index} out of range for {n_states} states")]
    IndexOutOfRange { index: usize, n_states: usize },

    #[error("correspondence has no state")]
    NoStates,

    #[error("not surjective: state {0} has no predecessor")]
    NotSurjective(usize),

    #[error("not a bijection on states")]
    NotBijective,

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("power iteration did not converge after {0} iterations")]
    ConvergenceFailure(usize),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("kernel puts mass {mass} outside the relation at ({from}, {to})")]
    UnsupportedTransition { from: usize, to: usize, mass: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("measure is not stationary for the kernel (l1 residual {0:e})")]
    NotStationary(f64),

    #[error("mode unsupported: {0}")]
    ModeUnsupported(String),

    #[error("measure is not invariant for the correspondence")]
    NotInvariant,

    #[error("block relation is not a function at state {0}")]
    NotAFunctionOnBlock(usize),

    #[error("block measure is not invariant for the block map")]
    NotInvariantOnBlock,

    #[error("dominant class is not unique: {0:?}")]
    NonUniqueDominantClass(Vec<usize>),

    #[error("matrix scaling diverged: {0}")]
    ScalingDiverged(String),

    #[error("point outside the map domain")]
    OutOfDomain,

    #[error("breakpoint {0} is not aligned with the grid")]
    MisalignedBreakpoints(String),

    #[error("degenerate cell image: {0}")]
    DegenerateCell(String),

    #[error("partition is not Markov for the map: {0}")]
    NotMarkov(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
