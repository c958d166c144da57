use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate geometry: zero distance between antenna {antenna} and user {user}")]
    DegenerateGeometry { antenna: usize, user: usize },

    #[error("{subarrays} subarrays do not evenly divide {antennas} antennas")]
    NonUniformPartition { antennas: usize, subarrays: usize },

    #[error("subarray index {index} out of range for {count} subarrays")]
    SubarrayOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("ZF infeasible: {0}")]
    ZfInfeasible(String),

    #[error("subarray {block}: ZF infeasible: {reason}")]
    BlockInfeasible { block: usize, reason: String },

    #[error("SNR {value} at subarray {index} is not positive")]
    NonPositiveSnr { index: usize, value: f64 },

    #[error("bit string length {0} is not a multiple of 3")]
    BitLength(usize),

    #[error("soft value {0} is not finite")]
    NonFinite(String),

    #[error("user {0} unreachable: channel column is all zero")]
    UserUnreachable(usize),

    #[error("subarray {block} overloaded: {users} users on {antennas} antennas")]
    SubarrayOverloaded { block: usize, users: usize, antennas: usize },

    #[error("stalled graph: user {0} has no remaining edges")]
    StalledGraph(usize),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io { path: path.display().to_string(), message: err.to_string() }
    }
}
