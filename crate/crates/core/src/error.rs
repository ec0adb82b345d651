use thiserror::Error;

use crate::protocol::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("node {node} is out of range (highest node index is {n})")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("illegal move: node {node} is not privileged in {config:?}")]
    IllegalMove { node: NodeId, config: Vec<u32> },

    #[error("configuration index {index} is out of range (state space has {size} configurations)")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("illegal schedule at step {step}: {reason}")]
    IllegalSchedule { step: usize, reason: String },

    /// `size` is `None` when k^(n+1) does not even fit in 64 bits.
    #[error("state space too large: {} configurations exceed the limit of {limit}", display_size(*.size))]
    StateSpaceTooLarge { size: Option<u64>, limit: u64 },

    #[error("instance does not converge; worst-case steps are unbounded")]
    NotConvergent,

    #[error("invalid trace at step {step}: {reason}")]
    InvalidTrace { step: usize, reason: String },
}

fn display_size(size: Option<u64>) -> String {
    match size {
        Some(s) => s.to_string(),
        None => "more than 2^64".to_string(),
    }
}
