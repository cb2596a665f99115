use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model is not cyclic: {0}")]
    NonCyclic(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("self-adjoint generator bound violated: |b| = {value} must stay below 1/9")]
    NormBound { value: f64 },
    #[error("generator has a kernel vector (b = 0 at index {index})")]
    KernelVector { index: usize },
    #[error("requested degree {requested} exceeds the exactness horizon {horizon}")]
    Truncation { requested: usize, horizon: usize },
    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),
    #[error("matrix is not normal (defect {defect:e})")]
    NotNormal { defect: f64 },
    #[error("completion mismatch: {0}")]
    Completion(String),
    #[error("grid construction failed; cuts keep landing on atoms {atoms:?}")]
    GridConstruction { atoms: Vec<f64> },
    #[error("insufficient N: box {box_index:?} has reference mass but no eigenvalue")]
    InsufficientN { box_index: (usize, usize) },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
