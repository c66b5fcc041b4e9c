use thiserror::Error;

/// Errors raised by the entanglement toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions {dims:?}: {reason}")]
    InvalidDims { dims: Vec<usize>, reason: String },

    #[error("index {index:?} out of range for dims {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },

    #[error("duplicate amplitude index {0:?}")]
    DuplicateIndex(Vec<usize>),

    #[error("all amplitudes are zero")]
    ZeroState,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("local operation annihilates the state (zero output)")]
    Annihilated,

    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    Unnormalized { norm_sqr: f64 },

    #[error("wrong format: expected {expected}, got dims {dims:?}")]
    WrongFormat {
        expected: &'static str,
        dims: Vec<usize>,
    },

    #[error("target format {target} is below the Clare local rank {rank}")]
    RankTooLarge { target: usize, rank: usize },

    #[error("matrix is not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("failed to draw a nonsingular matrix after {0} attempts")]
    SingularDraw(usize),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("local-rank signature {0:?} does not belong to any SLOCC class")]
    InconsistentRanks([usize; 3]),

    #[error("ambiguous classification: determinant test votes {det_vote}, rank(R^T R) = {rtr_rank} votes {rank_vote}")]
    Ambiguous {
        det_vote: &'static str,
        rank_vote: &'static str,
        rtr_rank: usize,
    },

    #[error("class {label} has no representative for n = {n}")]
    IncompatibleLabel { label: &'static str, n: usize },

    #[error("unknown class label {0:?}")]
    UnknownLabel(String),

    #[error("unknown distillation target {0:?}")]
    UnknownTarget(String),

    #[error("invalid tolerance policy: {0}")]
    InvalidPolicy(String),

    #[error("degenerate POVM: {0}")]
    DegeneratePovm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
