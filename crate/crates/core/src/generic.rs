//! Import of generic entity spans produced by an external pre-trained
//! tagger, plus optional class-based type refinement against a knowledge
//! base.
//!
//! The tagger itself stays outside the engine: spans arrive through a JSONL
//! file boundary, one record per sentence:
//! `{"sent_id": ..., "spans": [{"start":..,"end":..,"type":..,"score":..}]}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::sparql::CachedSparql;
use crate::types::{EntitySpan, EntityType, EntityTypeRegistry, SpanSource};

#[derive(Debug, Deserialize)]
struct SpanRecord {
    sent_id: String,
    spans: Vec<RawSpan>,
}

#[derive(Debug, Deserialize)]
struct RawSpan {
    start: usize,
    end: usize,
    #[serde(rename = "type")]
    type_name: String,
    #[serde(default)]
    score: Option<f64>,
}

/// Counters from a (possibly lenient) span import.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct GenericLoadStats {
    pub records: usize,
    pub spans_loaded: usize,
    pub skipped_unknown_sentence: usize,
    pub skipped_out_of_bounds: usize,
}

/// Loads model spans, validating sentence ids and bounds against the
/// corpus. In strict mode a bad record is an error; in lenient mode it is
/// skipped and counted. Unknown or non-generic type names are always an
/// error listing the valid generic names.
pub fn load_generic_spans(
    path: impl AsRef<Path>,
    sentences: &[Sentence],
    registry: &EntityTypeRegistry,
    strict: bool,
) -> Result<(HashMap<String, Vec<EntitySpan>>, GenericLoadStats)> {
    let path = path.as_ref();
    let lengths: HashMap<&str, usize> = sentences
        .iter()
        .map(|s| (s.sent_id.as_str(), s.tokens.len()))
        .collect();

    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: HashMap<String, Vec<EntitySpan>> = HashMap::new();
    let mut stats = GenericLoadStats::default();

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let record: SpanRecord = serde_json::from_str(&line).map_err(|e| Error::JsonLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        stats.records += 1;

        let Some(&len) = lengths.get(record.sent_id.as_str()) else {
            if strict {
                return Err(Error::UnknownSentId(record.sent_id));
            }
            stats.skipped_unknown_sentence += 1;
            continue;
        };

        for raw in record.spans {
            let entity_type = registry.require_generic(&raw.type_name)?;
            let mut span = EntitySpan::new(
                record.sent_id.clone(),
                raw.start,
                raw.end,
                entity_type,
                SpanSource::Model,
            );
            span.score = raw.score;
            if let Err(e) = span.check_bounds(len) {
                if strict {
                    return Err(e);
                }
                stats.skipped_out_of_bounds += 1;
                continue;
            }
            stats.spans_loaded += 1;
            out.entry(record.sent_id.clone()).or_default().push(span);
        }
    }
    for spans in out.values_mut() {
        spans.sort_by_key(|s| (s.start, s.end));
    }
    Ok((out, stats))
}

/// Maps a knowledge-base class to the entity type spans of that class
/// should carry. Smaller `priority` values win.
#[derive(Debug, Clone)]
pub struct RefinementRule {
    pub kb_class: String,
    pub target_type: EntityType,
    pub priority: u32,
}

/// A validated rule set: priorities unique, targets generic-kind.
#[derive(Debug, Clone, Default)]
pub struct RefinementRules {
    rules: Vec<RefinementRule>,
}

impl RefinementRules {
    pub fn new(mut rules: Vec<RefinementRule>) -> Result<Self> {
        rules.sort_by_key(|r| r.priority);
        for pair in rules.windows(2) {
            if pair[0].priority == pair[1].priority {
                return Err(Error::Config(format!(
                    "refinement rules {} and {} share priority {}",
                    pair[0].kb_class, pair[1].kb_class, pair[0].priority
                )));
            }
        }
        if let Some(bad) = rules.iter().find(|r| r.target_type.is_health()) {
            return Err(Error::Config(format!(
                "refinement rule {} targets non-generic type {}",
                bad.kb_class,
                bad.target_type.name()
            )));
        }
        Ok(RefinementRules { rules })
    }

    /// TSV rows: `kb_class<TAB>target_type<TAB>priority`; '#' comments and
    /// blank lines skipped.
    pub fn load_tsv(path: impl AsRef<Path>, registry: &EntityTypeRegistry) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rules = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::BadColumnCount {
                    path: path.to_path_buf(),
                    row: idx + 1,
                    expected: 3,
                    found: cols.len(),
                });
            }
            let priority: u32 = cols[2].trim().parse().map_err(|_| {
                Error::Config(format!(
                    "{}:{}: bad priority {:?}",
                    path.display(),
                    idx + 1,
                    cols[2]
                ))
            })?;
            rules.push(RefinementRule {
                kb_class: cols[0].trim().to_string(),
                target_type: registry.require_generic(cols[1])?,
                priority,
            });
        }
        Self::new(rules)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The highest-priority rule whose class appears in `classes`.
    pub fn best_match(&self, classes: &[String]) -> Option<&RefinementRule> {
        self.rules
            .iter()
            .find(|r| classes.iter().any(|c| c == &r.kb_class))
    }
}

/// A knowledge-base item for an exact label match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbItem {
    pub id: String,
    pub classes: Vec<String>,
}

/// Label lookup against a knowledge base. Implementations are expected to be
/// cache-backed so reruns are deterministic and offline.
pub trait KbClient {
    fn lookup(&mut self, surface: &str) -> Result<Option<KbItem>>;
}

/// Cache-backed SPARQL label lookup. The query template must contain the
/// placeholder `{surface}` and return `?item` and `?class` bindings.
pub struct SparqlKbClient {
    sparql: CachedSparql,
    endpoint: String,
    query_template: String,
}

/// Exact label or alt-label match, classes reported by English class label.
pub const DEFAULT_KB_QUERY_TEMPLATE: &str = "\
SELECT ?item ?class WHERE {\n\
  { ?item rdfs:label \"{surface}\"@en . } UNION { ?item skos:altLabel \"{surface}\"@en . }\n\
  ?item wdt:P31 ?cls .\n\
  ?cls rdfs:label ?class .\n\
  FILTER(LANG(?class) = \"en\")\n\
}";

impl SparqlKbClient {
    pub fn new(
        endpoint: impl Into<String>,
        cache_path: impl Into<PathBuf>,
        timeout: Duration,
        query_template: Option<String>,
    ) -> Result<Self> {
        Ok(SparqlKbClient {
            sparql: CachedSparql::open(cache_path, timeout)?,
            endpoint: endpoint.into(),
            query_template: query_template.unwrap_or_else(|| DEFAULT_KB_QUERY_TEMPLATE.to_string()),
        })
    }

    pub fn network_calls(&self) -> usize {
        self.sparql.network_calls()
    }

    fn build_query(&self, surface: &str) -> String {
        let escaped = surface.replace('\\', "\\\\").replace('"', "\\\"");
        self.query_template.replace("{surface}", &escaped)
    }
}

impl KbClient for SparqlKbClient {
    fn lookup(&mut self, surface: &str) -> Result<Option<KbItem>> {
        let query = self.build_query(surface);
        let rows = self.sparql.select_cached(&self.endpoint, surface, &query)?;
        let Some(first) = rows.first() else {
            return Ok(None);
        };
        let Some(item_uri) = first.get("item") else {
            return Ok(None);
        };
        let id = item_uri.rsplit('/').next().unwrap_or(item_uri).to_string();
        let mut classes = Vec::new();
        for row in &rows {
            if row.get("item") != Some(item_uri) {
                continue;
            }
            if let Some(class) = row.get("class") {
                if !classes.contains(class) {
                    classes.push(class.clone());
                }
            }
        }
        Ok(Some(KbItem { id, classes }))
    }
}

/// One refinement decision, for the audit log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefineDecision {
    pub sent_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    /// Matched item id, or `None` on a knowledge-base miss.
    pub item: Option<String>,
    pub old_type: String,
    pub new_type: String,
}

/// Looks the span's normalized surface up in the knowledge base and retypes
/// it per the highest-priority matching rule; spans with no match, or whose
/// classes match no rule, come back unmodified. Boundaries never change.
pub fn refine_span(
    span: &EntitySpan,
    sentence: &Sentence,
    kb: &mut dyn KbClient,
    rules: &RefinementRules,
    log: &mut Vec<RefineDecision>,
) -> Result<EntitySpan> {
    debug_assert_eq!(span.source, SpanSource::Model);
    let surface = sentence.tokens[span.start..span.end]
        .iter()
        .map(|t| t.text.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ");

    let mut refined = span.clone();
    let item = kb.lookup(&surface)?;
    if let Some(item) = &item {
        if let Some(rule) = rules.best_match(&item.classes) {
            refined.entity_type = rule.target_type.clone();
        }
    }
    log.push(RefineDecision {
        sent_id: span.sent_id.clone(),
        start: span.start,
        end: span.end,
        surface,
        item: item.map(|i| i.id),
        old_type: span.entity_type.name().to_string(),
        new_type: refined.entity_type.name().to_string(),
    });
    Ok(refined)
}

/// Result of the generic annotation pass.
#[derive(Debug, Default)]
pub struct GenericOutcome {
    pub spans: HashMap<String, Vec<EntitySpan>>,
    pub decisions: Vec<RefineDecision>,
    pub stats: GenericLoadStats,
}

/// Full generic pass: load the span file, then refine each span. With an
/// empty rule set (or no client) refinement is skipped entirely and the
/// result equals the loaded spans.
pub fn annotate_generic(
    sentences: &[Sentence],
    spans_path: impl AsRef<Path>,
    kb: Option<&mut dyn KbClient>,
    rules: &RefinementRules,
    registry: &EntityTypeRegistry,
    strict: bool,
) -> Result<GenericOutcome> {
    let (loaded, stats) = load_generic_spans(spans_path, sentences, registry, strict)?;
    let mut decisions = Vec::new();

    let Some(kb) = kb else {
        return Ok(GenericOutcome {
            spans: loaded,
            decisions,
            stats,
        });
    };
    if rules.is_empty() {
        return Ok(GenericOutcome {
            spans: loaded,
            decisions,
            stats,
        });
    }

    let by_id: HashMap<&str, &Sentence> =
        sentences.iter().map(|s| (s.sent_id.as_str(), s)).collect();
    let mut refined: HashMap<String, Vec<EntitySpan>> = HashMap::new();
    let mut ids: Vec<&String> = loaded.keys().collect();
    ids.sort();
    for sent_id in ids {
        let sentence = by_id[sent_id.as_str()];
        let mut spans = Vec::new();
        for span in &loaded[sent_id] {
            spans.push(refine_span(span, sentence, kb, rules, &mut decisions)?);
        }
        spans.sort_by_key(|s| (s.start, s.end));
        refined.insert(sent_id.clone(), spans);
    }
    Ok(GenericOutcome {
        spans: refined,
        decisions,
        stats,
    })
}
