//! Gold and silver seed lexicons: normalization, TSV load/save, merging, and
//! the knowledge-base fetch for silver seeds.

mod fetch;
mod tsv;

pub use fetch::{fetch_silver_seeds, FetchOutcome, SilverFetchConfig};
pub use tsv::{load_lexicon, save_lexicon_tsv};

use std::collections::BTreeMap;
use std::time::SystemTime;

use crate::corpus::TextConfig;
use crate::error::{Error, Result};
use crate::types::{EntityType, Provenance};

/// One typed surface form. `norm_tokens` is always
/// `normalize_surface(surface)` under the lexicon's text configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedEntry {
    pub surface: String,
    pub norm_tokens: Vec<String>,
    pub entity_type: EntityType,
    pub provenance: Provenance,
    pub source: String,
}

impl SeedEntry {
    pub fn new(
        surface: impl Into<String>,
        entity_type: EntityType,
        provenance: Provenance,
        source: impl Into<String>,
        cfg: &TextConfig,
    ) -> Result<Self> {
        let surface = surface.into();
        let norm_tokens = normalize_surface(&surface, cfg)?;
        Ok(SeedEntry {
            surface,
            norm_tokens,
            entity_type,
            provenance,
            source: source.into(),
        })
    }

    fn sort_key(&self) -> (Vec<String>, String, Provenance, String, String) {
        (
            self.norm_tokens.clone(),
            self.entity_type.name().to_string(),
            self.provenance,
            self.source.clone(),
            self.surface.clone(),
        )
    }
}

/// Tokenizes with the corpus rules, then case-folds each token. No stemming,
/// no lemmatization.
pub fn normalize_surface(surface: &str, cfg: &TextConfig) -> Result<Vec<String>> {
    let tokens: Vec<String> = cfg
        .tokenize(surface)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyNormalization(surface.to_string()));
    }
    Ok(tokens)
}

/// A dropped entry recorded during lexicon construction or merging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictRecord {
    pub norm_tokens: Vec<String>,
    pub kept_type: String,
    pub kept_provenance: Provenance,
    pub dropped_type: String,
    pub dropped_provenance: Provenance,
    pub dropped_source: String,
}

/// What happened while building a lexicon: exact duplicates collapsed and
/// type conflicts resolved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub duplicates_collapsed: usize,
    pub conflicts: Vec<ConflictRecord>,
}

/// An immutable seed lexicon. Entries are kept sorted so downstream
/// compilation is independent of input order.
#[derive(Debug, Clone)]
pub struct SeedLexicon {
    entries: Vec<SeedEntry>,
    pub version: String,
    pub created_at: SystemTime,
}

impl PartialEq for SeedLexicon {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.version == other.version
    }
}

impl SeedLexicon {
    pub fn empty(version: impl Into<String>) -> Self {
        SeedLexicon {
            entries: Vec::new(),
            version: version.into(),
            created_at: SystemTime::now(),
        }
    }

    /// Builds a lexicon from raw entries, collapsing exact duplicates and
    /// enforcing the type-uniqueness invariants:
    ///
    /// * two GOLD entries with the same tokens but different types are an
    ///   error (the expert list is inconsistent);
    /// * two SILVER entries with the same tokens but different types keep the
    ///   lexicographically smallest type, recording the conflict;
    /// * a GOLD/SILVER pair with the same tokens and the same type collapses
    ///   to the GOLD entry;
    /// * a GOLD/SILVER pair with the same tokens and different types may
    ///   coexist here; the matcher resolves it in GOLD's favor at compile
    ///   time, and `merge_lexicons` drops the SILVER side.
    pub fn from_entries(
        entries: Vec<SeedEntry>,
        version: impl Into<String>,
    ) -> Result<(Self, BuildReport)> {
        Self::build(entries, version, false)
    }

    fn build(
        mut entries: Vec<SeedEntry>,
        version: impl Into<String>,
        resolve_cross_provenance: bool,
    ) -> Result<(Self, BuildReport)> {
        entries.sort_by_key(|e| e.sort_key());
        let mut report = BuildReport::default();

        // Group by norm_tokens; within each group resolve duplicates and
        // conflicts deterministically.
        let mut groups: BTreeMap<Vec<String>, Vec<SeedEntry>> = BTreeMap::new();
        for e in entries {
            groups.entry(e.norm_tokens.clone()).or_default().push(e);
        }

        let mut kept = Vec::new();
        for (_, group) in groups {
            kept.extend(resolve_group(group, resolve_cross_provenance, &mut report)?);
        }
        kept.sort_by_key(|e| e.sort_key());
        Ok((
            SeedLexicon {
                entries: kept,
                version: version.into(),
                created_at: SystemTime::now(),
            },
            report,
        ))
    }

    pub fn entries(&self) -> &[SeedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn resolve_group(
    group: Vec<SeedEntry>,
    resolve_cross_provenance: bool,
    report: &mut BuildReport,
) -> Result<Vec<SeedEntry>> {
    // Exact (tokens, type, provenance) duplicates: keep the first in sort
    // order.
    let mut deduped: Vec<SeedEntry> = Vec::new();
    for e in group {
        if deduped
            .iter()
            .any(|k| k.entity_type == e.entity_type && k.provenance == e.provenance)
        {
            report.duplicates_collapsed += 1;
            continue;
        }
        deduped.push(e);
    }

    // GOLD entries must agree on one type.
    let gold_types: Vec<&SeedEntry> = deduped
        .iter()
        .filter(|e| e.provenance == Provenance::Gold)
        .collect();
    if gold_types.len() > 1 {
        return Err(Error::GoldSeedConflict {
            surface: gold_types[0].surface.clone(),
            first_type: gold_types[0].entity_type.name().to_string(),
            second_type: gold_types[1].entity_type.name().to_string(),
        });
    }
    let gold_type: Option<EntityType> = gold_types.first().map(|e| e.entity_type.clone());

    let mut kept: Vec<SeedEntry> = Vec::new();
    let mut silver_kept_type: Option<EntityType> = None;
    for e in deduped {
        match e.provenance {
            Provenance::Gold => kept.push(e),
            Provenance::Silver => {
                if let Some(gt) = &gold_type {
                    if *gt == e.entity_type {
                        // Same tokens, same type: GOLD shadows SILVER.
                        report.duplicates_collapsed += 1;
                        continue;
                    }
                    if resolve_cross_provenance {
                        report.conflicts.push(ConflictRecord {
                            norm_tokens: e.norm_tokens.clone(),
                            kept_type: gt.name().to_string(),
                            kept_provenance: Provenance::Gold,
                            dropped_type: e.entity_type.name().to_string(),
                            dropped_provenance: Provenance::Silver,
                            dropped_source: e.source.clone(),
                        });
                        continue;
                    }
                }
                match &silver_kept_type {
                    None => {
                        silver_kept_type = Some(e.entity_type.clone());
                        kept.push(e);
                    }
                    Some(first) if *first == e.entity_type => kept.push(e),
                    Some(first) => {
                        // Sorted input means `first` has the smallest type
                        // name; later silver types are dropped.
                        report.conflicts.push(ConflictRecord {
                            norm_tokens: e.norm_tokens.clone(),
                            kept_type: first.name().to_string(),
                            kept_provenance: Provenance::Silver,
                            dropped_type: e.entity_type.name().to_string(),
                            dropped_provenance: Provenance::Silver,
                            dropped_source: e.source.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(kept)
}

/// What `merge_lexicons` produced: the merged lexicon plus the duplicate and
/// conflict log.
#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub lexicon: SeedLexicon,
    pub report: BuildReport,
}

/// Set union of two lexicons. On a cross-provenance type conflict the GOLD
/// entry wins and the SILVER entry is dropped with a conflict record. Two
/// GOLD entries disagreeing on a type are an error.
pub fn merge_lexicons(a: &SeedLexicon, b: &SeedLexicon) -> Result<MergeOutcome> {
    let version = if a.version == b.version {
        a.version.clone()
    } else if a.version.is_empty() {
        b.version.clone()
    } else if b.version.is_empty() {
        a.version.clone()
    } else {
        format!("{}+{}", a.version, b.version)
    };
    let mut entries = a.entries.clone();
    entries.extend(b.entries.iter().cloned());
    let (lexicon, report) = SeedLexicon::build(entries, version, true)?;
    Ok(MergeOutcome { lexicon, report })
}
