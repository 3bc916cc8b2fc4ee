//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its documented domain (probabilities, support
    /// sizes, interval bounds, weights).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quantizer is malformed or incompatible with the support it is
    /// applied to.
    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    /// An enumeration was requested beyond its configured cap.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    /// A reachable non-terminal state has no candidate quantizer to choose
    /// from (only possible with explicit action lists).
    #[error("empty action set for support of size {support}")]
    EmptyActionSet { support: usize },

    /// A fixed policy was queried at a state it does not cover.
    #[error("policy does not cover state (n={n}, lo={lo}, hi={hi})")]
    PolicyIncomplete { n: usize, lo: usize, hi: usize },
}
