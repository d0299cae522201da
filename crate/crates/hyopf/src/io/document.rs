//! Native JSON grid documents.
//!
//! A document is a single JSON object carrying a schema version tag next to
//! the flattened [`Grid`] fields.  Reading checks the version first, then
//! deserializes with field-level error reporting; unknown fields on any
//! entity are preserved in its `extra` map, so read → write reproduces a
//! document structurally, including annotations this library does not
//! interpret.  Numbers are written with shortest round-trip decimal
//! representation, so values survive a round trip bit-exactly.

use serde::Serialize;

use crate::grid::Grid;

/// Version written by [`write_document`] and required by [`read_document`].
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("document is not valid JSON: {0}")]
    Syntax(String),
    #[error("document root must be a JSON object")]
    NotAnObject,
    #[error("missing field `schema`")]
    MissingSchema,
    #[error("unsupported schema version {found:?}, expected {SCHEMA_VERSION:?}")]
    Version { found: String },
    #[error("invalid grid document: {0}")]
    Field(String),
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'a str,
    #[serde(flatten)]
    grid: &'a Grid,
}

/// Serialize a grid as a schema-tagged JSON document.
pub fn write_document(grid: &Grid) -> String {
    let envelope = Envelope { schema: SCHEMA_VERSION, grid };
    let mut text = serde_json::to_string_pretty(&envelope).expect("grid serializes to JSON");
    text.push('\n');
    text
}

/// Parse a schema-tagged JSON document into a grid.
///
/// The version tag is checked before anything else, so documents from a
/// different schema generation fail with a version error rather than a
/// confusing field mismatch.  Structural problems report the offending
/// field by name.
pub fn read_document(text: &str) -> Result<Grid, DocumentError> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DocumentError::Syntax(e.to_string()))?;
    let object = value.as_object_mut().ok_or(DocumentError::NotAnObject)?;
    let schema = object.remove("schema").ok_or(DocumentError::MissingSchema)?;
    let found = match schema.as_str() {
        Some(s) => s.to_string(),
        None => schema.to_string(),
    };
    if found != SCHEMA_VERSION {
        return Err(DocumentError::Version { found });
    }
    serde_json::from_value(value).map_err(|e| DocumentError::Field(e.to_string()))
}
