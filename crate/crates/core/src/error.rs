use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("size mismatch: allocation has {allocation} pieces but profile has {profile} agents")]
    SizeMismatch { allocation: usize, profile: usize },

    #[error("query out of range: {0}")]
    QueryOutOfRange(String),

    #[error("infeasible cut: requested value {requested} exceeds the {available} remaining after {from}")]
    InfeasibleCut {
        from: String,
        requested: String,
        available: String,
    },

    #[error("mechanism {mechanism}: {reason}")]
    Mechanism { mechanism: String, reason: String },

    #[error("unknown mechanism {0:?}")]
    UnknownMechanism(String),

    #[error("unsupported mechanism for this engine: {0}")]
    UnsupportedMechanism(String),

    #[error("agent index {agent} out of range for {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },

    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),

    #[error("chain inconclusive: {0}")]
    Inconclusive(String),

    #[error("no violation found: {0}")]
    NoViolation(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
