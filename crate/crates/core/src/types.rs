//! Shared domain vocabulary: entity types, the type registry, provenance and
//! annotation sources, and token-level entity spans.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a type belongs to the domain-specific (health) or the generic
/// portion of the registry. Health-kind spans outrank generic-kind spans
/// during harmonization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityKind {
    Health,
    Generic,
}

/// A named entity type drawn from a registry. Cheap to clone; equality and
/// ordering are by canonical (uppercase) name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityType {
    name: Arc<str>,
    kind: EntityKind,
}

impl EntityType {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn is_health(&self) -> bool {
        self.kind == EntityKind::Health
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for EntityType {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name)
    }
}

/// The 18 generic OntoNotes-style entity types.
pub const GENERIC_TYPE_NAMES: [&str; 18] = [
    "PERSON",
    "NORP",
    "FAC",
    "ORG",
    "GPE",
    "LOC",
    "PRODUCT",
    "EVENT",
    "WORK_OF_ART",
    "LAW",
    "LANGUAGE",
    "DATE",
    "TIME",
    "PERCENT",
    "MONEY",
    "QUANTITY",
    "ORDINAL",
    "CARDINAL",
];

/// The 5 domain-specific health types.
pub const HEALTH_TYPE_NAMES: [&str; 5] = [
    "CORONAVIRUS",
    "DISEASE_OR_SYNDROME",
    "SIGN_OR_SYMPTOM",
    "IMMUNE_RESPONSE",
    "GROUP",
];

/// Registry of valid entity types. Names are unique case-insensitively and
/// stored in canonical uppercase form.
#[derive(Debug, Clone)]
pub struct EntityTypeRegistry {
    types: Vec<EntityType>,
    by_name: HashMap<String, usize>,
}

impl EntityTypeRegistry {
    /// Builds a registry from (name, kind) pairs. Names are folded to
    /// uppercase; duplicates (case-insensitive) are rejected.
    pub fn new<I, S>(defs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, EntityKind)>,
        S: AsRef<str>,
    {
        let mut types = Vec::new();
        let mut by_name = HashMap::new();
        for (name, kind) in defs {
            let canonical = name.as_ref().trim().to_uppercase();
            if canonical.is_empty() {
                return Err(Error::Config("empty entity type name".into()));
            }
            if by_name.contains_key(&canonical) {
                return Err(Error::Config(format!(
                    "duplicate entity type name {canonical}"
                )));
            }
            by_name.insert(canonical.clone(), types.len());
            types.push(EntityType {
                name: canonical.into(),
                kind,
            });
        }
        Ok(EntityTypeRegistry { types, by_name })
    }

    /// The default registry: 18 generic types plus 5 health types (23 total).
    pub fn with_default_types() -> Self {
        let defs = GENERIC_TYPE_NAMES
            .iter()
            .map(|n| (*n, EntityKind::Generic))
            .chain(HEALTH_TYPE_NAMES.iter().map(|n| (*n, EntityKind::Health)));
        Self::new(defs).expect("default registry is well-formed")
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Option<&EntityType> {
        self.by_name
            .get(&name.trim().to_uppercase())
            .map(|&i| &self.types[i])
    }

    /// Lookup that fails with the full list of valid names.
    pub fn require(&self, name: &str) -> Result<EntityType> {
        self.get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownEntityType {
                name: name.to_string(),
                valid: self.types.iter().map(|t| t.name().to_string()).collect(),
            })
    }

    /// Lookup restricted to generic-kind types; the error lists only the
    /// generic names.
    pub fn require_generic(&self, name: &str) -> Result<EntityType> {
        match self.get(name) {
            Some(t) if t.kind() == EntityKind::Generic => Ok(t.clone()),
            _ => Err(Error::UnknownEntityType {
                name: name.to_string(),
                valid: self
                    .types
                    .iter()
                    .filter(|t| t.kind() == EntityKind::Generic)
                    .map(|t| t.name().to_string())
                    .collect(),
            }),
        }
    }

    pub fn types(&self) -> &[EntityType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

impl Default for EntityTypeRegistry {
    fn default() -> Self {
        Self::with_default_types()
    }
}

/// Trust class of a seed lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Gold,
    Silver,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Gold => "GOLD",
            Provenance::Silver => "SILVER",
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        match s.trim().to_uppercase().as_str() {
            "GOLD" => Some(Provenance::Gold),
            "SILVER" => Some(Provenance::Silver),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which annotation process produced a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpanSource {
    #[serde(rename = "GOLD_SEED")]
    GoldSeed,
    #[serde(rename = "SILVER_SEED")]
    SilverSeed,
    #[serde(rename = "MODEL")]
    Model,
    #[serde(rename = "EXPERT")]
    Expert,
}

impl SpanSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpanSource::GoldSeed => "GOLD_SEED",
            SpanSource::SilverSeed => "SILVER_SEED",
            SpanSource::Model => "MODEL",
            SpanSource::Expert => "EXPERT",
        }
    }

    /// Trust rank used by harmonization tie-breaks; lower is stronger.
    pub fn rank(&self) -> u8 {
        match self {
            SpanSource::Expert => 0,
            SpanSource::GoldSeed => 1,
            SpanSource::SilverSeed => 2,
            SpanSource::Model => 3,
        }
    }
}

impl fmt::Display for SpanSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A half-open token interval `[start, end)` over one sentence, carrying an
/// entity type and the source that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EntitySpan {
    pub sent_id: String,
    pub start: usize,
    pub end: usize,
    pub entity_type: EntityType,
    pub source: SpanSource,
    pub score: Option<f64>,
}

impl EntitySpan {
    pub fn new(
        sent_id: impl Into<String>,
        start: usize,
        end: usize,
        entity_type: EntityType,
        source: SpanSource,
    ) -> Self {
        EntitySpan {
            sent_id: sent_id.into(),
            start,
            end,
            entity_type,
            source,
            score: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// True when the two spans share at least one token index.
    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Bounds-check against a sentence of `len` tokens.
    pub fn check_bounds(&self, len: usize) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::EmptySpan {
                sent_id: self.sent_id.clone(),
                start: self.start,
                end: self.end,
            });
        }
        if self.end > len {
            return Err(Error::SpanOutOfBounds {
                sent_id: self.sent_id.clone(),
                start: self.start,
                end: self.end,
                len,
            });
        }
        Ok(())
    }
}
