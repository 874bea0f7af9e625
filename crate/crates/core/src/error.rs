//! Error types shared across the crate.

use thiserror::Error;

/// Errors from tensor construction and coefficient-level queries.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("tensor order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("tensor dimension must be at least 1, got {0}")]
    DimTooSmall(usize),
    #[error("dense storage {dim}^{order} exceeds the 10^7 coefficient cap")]
    TooLarge { order: usize, dim: usize },
    #[error("entry index {tuple:?} out of range for dimension {dim} (indices are 1-based)")]
    IndexOutOfRange { tuple: Vec<usize>, dim: usize },
    #[error("entry tuple {tuple:?} has {got} indices, expected {expected}")]
    TupleLength {
        tuple: Vec<usize>,
        got: usize,
        expected: usize,
    },
    #[error("vector length {got} does not match tensor dimension {expected}")]
    DimMismatch { got: usize, expected: usize },
    #[error("component index {0} out of range [1, {1}]")]
    ComponentOutOfRange(usize, usize),
    #[error("index set must be a subset of [1, {dim}]: {reason}")]
    BadIndexSet { dim: usize, reason: String },
    #[error("empty index set not allowed here")]
    EmptyIndexSet,
    #[error("parameter out of range: {0}")]
    Parameter(String),
}

/// Errors from the TCP solver operations.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("support enumeration over {0} variables is infeasible (limit 20)")]
    TooManyVariables(usize),
    #[error("tensor is not diagonal: nonzero off-diagonal coefficient at {0:?}")]
    NotDiagonal(Vec<usize>),
    #[error("diagonal coefficient at position {index} is {value}, must be positive")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("coefficient rows 1 and 2 differ at {0:?}; the composition requires equal leading rows")]
    RowsNotEqual(Vec<usize>),
    #[error("the composition requires dimension >= 2, got {0}")]
    CompositionDim(usize),
    #[error("sub-problem unsolved under the given budget: {0}")]
    SubProblemUnsolved(String),
    #[error("composed point failed the residual check: residual {0}")]
    CompositionResidual(f64),
    #[error("invalid search budget: {0}")]
    BadBudget(String),
}

/// Errors from class checkers with preconditions.
#[derive(Debug, Error)]
pub enum CheckError {
    #[error("checker requires a nonnegative tensor; coefficient at {0:?} is negative (use the empirical Q check instead)")]
    NotNonnegative(Vec<usize>),
    #[error("test requires odd tensor order, got {0}")]
    EvenOrder(usize),
}

/// Errors from the tensor and instance text formats.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Tensor {
        line: usize,
        #[source]
        source: TensorError,
    },
    #[error("missing `tensor <order> <dim>` header")]
    MissingHeader,
    #[error("missing `q <v1> ... <vn>` line in instance file")]
    MissingQ,
}

/// Witness replay rejection, with the failed condition spelled out.
#[derive(Debug, Error)]
#[error("witness rejected: {0}")]
pub struct ReplayError(pub String);
