use thiserror::Error;

use crate::model::StageIndex;

/// Failures shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("action {action} is outside the alphabet of size {alphabet}")]
    ActionOutOfRange { action: u32, alphabet: usize },

    #[error("stage {0} is positive")]
    PositiveStage(StageIndex),

    #[error("cannot extend a position past stage 0")]
    StageOverflow,

    #[error("tail is not materializable at stage {0}")]
    TailNotMaterializable(StageIndex),

    #[error("malformed model: {0}")]
    Malformed(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown gallery id `{0}`")]
    UnknownGallery(String),
}

pub type Result<T> = std::result::Result<T, Error>;
