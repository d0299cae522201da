//! Reading and writing grids: the native JSON document format and MATPOWER
//! case import.

pub mod document;
pub mod matpower;

pub use document::{read_document, write_document, DocumentError, SCHEMA_VERSION};
pub use matpower::{parse_matpower, to_grid, MatpowerCase, MatpowerError, DEFAULT_COST_SAMPLES};
