use crate::geometry::DimensionMode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("step speed must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("direction index {index} is not valid in {mode:?} mode")]
    InvalidDirection { index: u8, mode: DimensionMode },
    #[error("a face must consist of three distinct 4D directions")]
    MalformedFace,
    #[error("point is off the lattice (max non-integrality {0:e})")]
    OffLattice(f64),
    #[error("angle {0} lies outside [-pi, pi]")]
    AngleOutOfRange(f64),
    #[error("angles sum to {0}, not 0 mod 2pi")]
    UnconstrainedAngles(f64),
    #[error("grid needs at least {min} points per angle, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("grid of {0} points exceeds the memory guard")]
    GridTooLarge(u64),
    #[error("path length {len} exceeds the enumeration cap {cap}")]
    EnumerationCap { len: usize, cap: usize },
    #[error("displacement {0:?} has a negative step count")]
    NegativeCounts([i64; 4]),
    #[error("Fourier grid of {grid} points per angle aliases {steps}-step modes")]
    Aliasing { grid: usize, steps: usize },
    #[error("wavevector is not commensurate with period {0}")]
    Incommensurate(usize),
    #[error("epsilon sequence must be positive and strictly decreasing")]
    InvalidEpsilonSequence,
    #[error("site {counts:?} does not lie on time slice {time_step}")]
    SiteNotOnSlice { counts: [i64; 4], time_step: i64 },
    #[error("operation requires {expected:?} mode")]
    WrongMode { expected: DimensionMode },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
