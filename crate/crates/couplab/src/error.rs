use thiserror::Error;

/// Everything that can go wrong short of a failed statistical assertion.
/// Statistical rejections are ordinary results, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ball radius {radius} exceeds the configured cap of {cap}")]
    BallTooLarge { radius: u32, cap: u32 },

    #[error("cycle length must be at least 3, got {n}")]
    CycleTooShort { n: u32 },

    #[error("vertex {vertex} is not interior at radius {radius}")]
    NotInterior { vertex: String, radius: u32 },

    #[error("vertex {vertex} is not in the ball")]
    NotInBall { vertex: String },

    #[error("probability {p} is outside [0, 1]")]
    BadProbability { p: f64 },

    #[error("label {label} is outside the alphabet 0..{n}")]
    LabelOutOfRange { label: u32, n: u32 },

    #[error("label count must be at least 1, got {n}")]
    EmptyAlphabet { n: u32 },

    #[error("a vertex row decodes to a set of size {size}; sets must have 1 to 3 elements")]
    BadSetSize { size: usize },

    #[error("exhaustive enumeration over {edges} edges exceeds the 2^20 assignment cap")]
    EnumerationTooLarge { edges: usize },

    #[error("query vertex {vertex} repeats across the two query lists")]
    OverlappingQuery { vertex: String },

    #[error("chi-square test needs at least 2 cells, got {cells}")]
    TooFewCells { cells: usize },

    #[error("expected count {expected:.2} in cell {cell} is below 5; increase the sample size")]
    LowExpectedCount { cell: String, expected: f64 },

    #[error("window categories exceeded the cap of {cap}; coarsen the labels or shrink the window")]
    CategoryExplosion { cap: usize },

    #[error("Wilson interval needs at least one trial")]
    NoTrials,

    #[error("successes {successes} exceed trials {trials}")]
    BadCounts { successes: u64, trials: u64 },

    #[error("confidence level {level} is outside (0, 1)")]
    BadLevel { level: f64 },

    #[error("shift does not match the process domain: {what}")]
    ShiftMismatch { what: String },

    #[error("transport rule does not match the process: {what}")]
    RuleMismatch { what: String },

    #[error("replicate count must be positive")]
    NoReplicates,
}

pub type Result<T> = std::result::Result<T, Error>;
