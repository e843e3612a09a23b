//! Crate-wide error type. Indices in messages are 1-based to match reports.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("machine {machine} has non-positive speed")]
    NonPositiveSpeed { machine: usize },

    #[error("available set is empty")]
    EmptyAvailableSet,

    #[error("machine index {machine} out of range (N = {machines})")]
    MachineOutOfRange { machine: usize, machines: usize },

    #[error("sub-matrix index {submatrix} out of range (G = {submatrices})")]
    SubmatrixOutOfRange {
        submatrix: usize,
        submatrices: usize,
    },

    #[error("invalid placement: {0}")]
    InvalidPlacement(String),

    #[error("placement parse error at line {line}: {message}")]
    PlacementParse { line: usize, message: String },

    #[error(
        "infeasible: sub-matrix {submatrix} has {available} storing available machine(s), \
         needs at least {needed}"
    )]
    Infeasible {
        submatrix: usize,
        available: usize,
        needed: usize,
    },

    #[error(
        "step {step} infeasible: sub-matrix {submatrix} has {available} storing available \
         machine(s), needs at least {needed}"
    )]
    StepInfeasible {
        step: usize,
        submatrix: usize,
        available: usize,
        needed: usize,
    },

    #[error("problem size exceeds cap: {0}")]
    SizeCap(String),

    #[error("filling precondition violated for sub-matrix {submatrix}: {message}")]
    FillPrecondition { submatrix: usize, message: String },

    #[error("filling did not terminate within {cap} iterations for sub-matrix {submatrix}")]
    FillIterationCap { submatrix: usize, cap: usize },

    #[error("candidate time {candidate} is strictly feasible with slack (optimum {optimum})")]
    StrictlyFeasible { candidate: String, optimum: String },

    #[error("no exact optimality certificate available (tolerance-terminated solve)")]
    NoCertificate,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("step {step}: {message}")]
    StepFailed { step: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
