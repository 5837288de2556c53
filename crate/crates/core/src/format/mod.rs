//! File formats: JSON net files, alignment reports and DOT export.

pub mod dot;
pub mod netfile;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown place {0}")]
    UnknownPlace(String),
    #[error("{0}")]
    Invalid(String),
    #[error("unsupported schema version {found} (expected major {expected})")]
    SchemaVersion { found: String, expected: u32 },
}
