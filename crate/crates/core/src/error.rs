use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("pooling over an empty set of values")]
    EmptyPool,
    #[error("softmax pooling denominator vanished")]
    SoftMaxDenominatorZero,
    #[error("zero signature between layers; cannot renormalize")]
    ZeroSignature,
    #[error("value {value} outside [-{p}, {p}]")]
    OutOfRange { value: f64, p: f64 },
    #[error("template weights must be nonnegative and sum to 1 (sum = {0})")]
    WeightsNotNormalized(f64),
    #[error("kernel asymmetric at ({i}, {j}): |K(i,j) - K(j,i)| = {gap}")]
    KernelAsymmetric { i: usize, j: usize, gap: f64 },
    #[error("least-squares design is rank deficient")]
    SingularDesign,
    #[error("linear system could not be solved")]
    SingularSystem,
    #[error("invalid number of centers {n} for {len} samples")]
    InvalidN { n: usize, len: usize },
    #[error("objective diverged at iteration {iteration}: {objective}")]
    DivergenceDetected { iteration: usize, objective: f64 },
    #[error("duplicate composition ({0}, {1})")]
    DuplicateComposition(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
