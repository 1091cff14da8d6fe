//! Extraction of pharmacokinetic parameters from XML and HTML tables.

pub mod error;
pub mod grid;
pub mod ingest;
pub mod layout;
pub mod markup;
pub mod ontology;
pub mod pipeline;
pub mod retrieval;

pub use error::ConfigError;
pub use grid::{normalize, validate_grid, DenseGrid, GridViolation, PLACEHOLDER};
pub use ingest::{find_tables, RawCell, RawTable, SourceKind, TagProfile};
pub use ontology::{load_ontology, match_parameter, mine_caption, parse_value, CaptionFacts, Ontology, ParsedValue, Qualifier};
pub use layout::{classify, detect_header_boundary, HeaderBoundary, LayoutCase, LayoutClass};
pub use pipeline::{run, ExtractionReport, RunConfig};
pub use retrieval::{PkRecord, SentenceDoc};
