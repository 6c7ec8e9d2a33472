//! Silver-seed harvesting from a SPARQL knowledge-base endpoint.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::time::Duration;

use super::SeedEntry;
use crate::corpus::TextConfig;
use crate::error::Result;
use crate::sparql::CachedSparql;
use crate::types::{EntityTypeRegistry, Provenance};

/// Where and what to fetch. `queries` maps an entity type name to a SPARQL
/// SELECT returning `?item` and `?label` (plus optional `?altLabel`).
#[derive(Debug, Clone)]
pub struct SilverFetchConfig {
    pub endpoint: String,
    pub queries: BTreeMap<String, String>,
    pub cache_path: PathBuf,
    pub timeout: Duration,
    pub max_rows: usize,
}

#[derive(Debug, Default)]
pub struct FetchOutcome {
    pub entries: Vec<SeedEntry>,
    pub warnings: Vec<String>,
}

/// Turns a knowledge-base item URI into its bare identifier
/// (`http://www.wikidata.org/entity/Q82069695` becomes `Q82069695`).
fn item_id(uri: &str) -> &str {
    uri.rsplit('/').next().unwrap_or(uri)
}

/// Fetches silver seeds for every configured type, serving warm cache
/// entries without network access. Labels and alt-labels both become
/// entries; results are deduplicated per type and capped at `max_rows` rows.
pub fn fetch_silver_seeds(
    cfg: &SilverFetchConfig,
    registry: &EntityTypeRegistry,
    text_cfg: &TextConfig,
) -> Result<FetchOutcome> {
    let mut sparql = CachedSparql::open(&cfg.cache_path, cfg.timeout)?;
    let mut outcome = FetchOutcome::default();

    for (type_name, query) in &cfg.queries {
        let entity_type = registry.require(type_name)?;
        let rows = sparql.select_cached(&cfg.endpoint, entity_type.name(), query)?;
        if rows.is_empty() {
            outcome.warnings.push(format!(
                "no rows for {} from {}",
                entity_type.name(),
                cfg.endpoint
            ));
            continue;
        }

        let mut seen: HashSet<Vec<String>> = HashSet::new();
        for row in rows.iter().take(cfg.max_rows) {
            let Some(item) = row.get("item") else {
                outcome
                    .warnings
                    .push(format!("row without ?item for {}", entity_type.name()));
                continue;
            };
            let source = item_id(item).to_string();
            let mut labels: Vec<&String> = Vec::new();
            if let Some(label) = row.get("label") {
                labels.push(label);
            }
            if let Some(alt) = row.get("altLabel") {
                labels.push(alt);
            }
            if labels.is_empty() {
                outcome
                    .warnings
                    .push(format!("row without ?label for {}", entity_type.name()));
                continue;
            }
            for label in labels {
                let entry = match SeedEntry::new(
                    label.clone(),
                    entity_type.clone(),
                    Provenance::Silver,
                    source.clone(),
                    text_cfg,
                ) {
                    Ok(e) => e,
                    Err(_) => {
                        outcome.warnings.push(format!(
                            "label {label:?} for {} normalizes to zero tokens",
                            entity_type.name()
                        ));
                        continue;
                    }
                };
                if seen.insert(entry.norm_tokens.clone()) {
                    outcome.entries.push(entry);
                }
            }
        }
    }
    Ok(outcome)
}
