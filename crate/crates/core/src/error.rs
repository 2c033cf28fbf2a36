use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero distance between {what} (slot {slot:?})")]
    ZeroDistance {
        what: &'static str,
        slot: Option<usize>,
    },

    #[error("malformed optimization problem: {0}")]
    Malformed(String),

    #[error("starting point is not strictly feasible: {0}")]
    InfeasibleStart(String),

    #[error("problem size {dim} exceeds the polyblock guard {limit}")]
    DimensionGuard { dim: usize, limit: usize },

    #[error(
        "slot {slot}: {count} {side} transmitters above the activity threshold ({values:?}); \
         the penalty factor or threshold is too small"
    )]
    MultipleActive {
        slot: usize,
        side: &'static str,
        count: usize,
        values: Vec<f64>,
    },

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
