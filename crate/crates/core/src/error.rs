use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("atom index {index} out of range for {num_atoms} atoms")]
    AtomOutOfRange { index: usize, num_atoms: usize },
    #[error("level {level} not available with {levels} levels per atom")]
    InvalidLevel { level: usize, levels: usize },
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),
    #[error("frequency {f} Hz outside band [{f_min}, {f_max}] Hz")]
    OutOfBand { f: f64, f_min: f64, f_max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("requested trajectory of {0} samples exceeds the synthesis limit")]
    TrajectoryTooLong(u64),
    #[error("circuit duration {circuit:.6e} s exceeds trajectory duration {trajectory:.6e} s")]
    CircuitTooLong { circuit: f64, trajectory: f64 },
    #[error("norm drift {0:.3e} exceeded the per-step guard")]
    NormDrift(f64),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("optimizer did not converge (best infidelity {0:.3e})")]
    NotConverged(f64),
    #[error("singular measurement matrix (F0 + F1 <= 1)")]
    SingularSpam,
    #[error("atom {0} assigned to more than one role")]
    RoleConflict(usize),
    #[error("generator invariant violated: {0}")]
    Generator(String),
    #[error("non-monotone bracket: gain at bracket ends {0:.4} and {1:.4}")]
    NonMonotone(f64, f64),
    #[error("integration grid too coarse: {0:.4} vs {1:.4} after doubling")]
    GridTooCoarse(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;
