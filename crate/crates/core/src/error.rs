use thiserror::Error;

use crate::game::ResourceId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    /// A tabulated welfare has no entry for the requested resource set.
    #[error("welfare table has no entry for resource set {0:?}")]
    ModelIncomplete(Vec<ResourceId>),

    #[error("equal-share utility requires separable welfare (agent {agent})")]
    UnsupportedUtility { agent: usize },

    #[error("joint action space has {size} profiles, above the cap of {cap}")]
    SizeCap { size: u128, cap: u128 },

    #[error("invalid game: {0}")]
    Invalid(String),

    #[error("invalid joint action: {0}")]
    InvalidProfile(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;
