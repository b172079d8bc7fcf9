//! Crate-wide error type.

use crate::model::UserId;

/// Errors reported by constructors, validators, and runners.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A distribution or model parameter violates its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A configuration file or experiment spec is inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A user id is out of range for the scenario it is used with.
    #[error("user {user} out of range for {len} users")]
    UnknownUser { user: UserId, len: usize },

    /// The quadrature oracle only supports small neighborhoods.
    #[error("neighborhood of size {size} exceeds quadrature limit {limit}")]
    NeighborhoodTooLarge { size: usize, limit: usize },

    /// Exhaustive supernetwork analysis is capped by edge-slot count.
    #[error("{slots} edge slots exceed the supernetwork limit of {limit}")]
    TooManyEdgeSlots { slots: usize, limit: usize },

    /// A payoff table has the wrong size or non-finite entries.
    #[error("incomplete payoff table: {0}")]
    IncompleteTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("TOML parse error: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("TOML write error: {0}")]
    TomlWrite(#[from] toml::ser::Error),

    #[error("CSV write error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
