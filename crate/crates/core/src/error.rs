use thiserror::Error;

/// Everything that can go wrong between loading a file and scoring a split.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("degenerate split: class {class} has no training points")]
    DegenerateSplit { class: usize },
    #[error("k = {k} must be smaller than the number of points n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("weight matrix is not symmetric at ({i}, {j})")]
    AsymmetricInput { i: usize, j: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("block layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver failure: {0}")]
    SolverFailure(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate folds: class {class} has {count} members for {folds} folds")]
    DegenerateFolds { class: usize, count: usize, folds: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
