//! corpustag: a corpus annotation engine for distant-supervision NER
//! training data.
//!
//! Raw news documents go in as JSONL; entity-tagged training corpora come
//! out as CoNLL and JSONL. Annotation combines two passes: exact gazetteer
//! matching against gold/silver seed lexicons (domain entities) and imported
//! spans from an external pre-trained tagger, optionally retyped via
//! knowledge-base lookup (generic entities). A harmonization step resolves
//! conflicts with priority for the domain pass. An evaluation suite scores
//! entity-level F1, computes Fleiss kappa over annotator labels, and
//! aggregates repeated-run scores.

pub mod corpus;
mod error;
pub mod eval;
pub mod generic;
pub mod harmonize;
pub mod matcher;
pub mod pipeline;
pub mod seeds;
pub mod sparql;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    EntityKind, EntitySpan, EntityType, EntityTypeRegistry, Provenance, SpanSource,
    GENERIC_TYPE_NAMES, HEALTH_TYPE_NAMES,
};
