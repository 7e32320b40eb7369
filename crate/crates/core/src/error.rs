use thiserror::Error;

/// Errors surfaced by the simulator components.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("no samples")]
    NoSamples,

    #[error("empty pool")]
    EmptyPool,

    #[error("invalid qname: {0}")]
    InvalidQname(String),

    #[error("wire budget of {budget} bytes is below the {minimum}-byte empty message")]
    WireBudgetTooSmall { budget: u32, minimum: u32 },

    #[error(
        "payload exceeds non-fragmented response capacity: {requested} addresses > {capacity}"
    )]
    PayloadTooLarge { requested: u32, capacity: u32 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
