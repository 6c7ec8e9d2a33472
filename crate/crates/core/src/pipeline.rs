//! End-to-end pipeline: configuration, the annotate/fetch/evaluate/stats
//! entry points, and the annotated-sentence JSONL format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    read_jsonl_corpus, tokenize_document, write_conll, ConllSentence, Sentence, TextConfig,
};
use crate::error::{Error, Result};
use crate::eval::{corpus_stats, entity_f1, CorpusStats, EvalReport, SpanTriple};
use crate::generic::{annotate_generic, GenericOutcome, KbClient, RefinementRules, SparqlKbClient};
use crate::harmonize::{bio_to_spans, harmonize, spans_to_bio, HarmonizationPolicy};
use crate::matcher::{annotate_health, compile, MatcherOptions};
use crate::seeds::{
    fetch_silver_seeds, load_lexicon, merge_lexicons, save_lexicon_tsv, SeedLexicon,
    SilverFetchConfig,
};
use crate::types::{EntitySpan, EntityTypeRegistry};

/// Knowledge-base access settings for generic-span refinement.
#[derive(Debug, Clone)]
pub struct KbConfig {
    pub endpoint: String,
    pub cache_path: PathBuf,
    pub timeout: Duration,
    pub query_template: Option<String>,
}

/// Fully resolved pipeline configuration. Paths are absolute or relative to
/// the process working directory; `load_pipeline_config` resolves them
/// against the config file's own directory.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub gold_seeds: PathBuf,
    pub silver_seeds: Option<PathBuf>,
    pub silver_fetch: Option<SilverFetchConfig>,
    pub generic_spans: Option<PathBuf>,
    pub refinement_rules: Option<PathBuf>,
    pub kb: Option<KbConfig>,
    pub out_conll: PathBuf,
    pub out_jsonl: PathBuf,
    pub out_report: PathBuf,
    pub strict: bool,
    pub case_sensitive: bool,
    pub pos_filter: bool,
    /// Worker threads for the parallel stages; 0 means let rayon decide.
    pub workers: usize,
    pub text: TextConfig,
    pub registry: EntityTypeRegistry,
    pub policy: HarmonizationPolicy,
}

// Raw TOML shapes, kept separate from the resolved config.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    input: RawInput,
    seeds: RawSeeds,
    #[serde(default)]
    generic: Option<RawGeneric>,
    output: RawOutput,
    #[serde(default)]
    options: RawOptions,
    #[serde(default)]
    text: Option<RawText>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    corpus: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeeds {
    gold: PathBuf,
    #[serde(default)]
    silver: Option<PathBuf>,
    #[serde(default)]
    fetch: Option<RawFetch>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFetch {
    endpoint: String,
    cache: PathBuf,
    #[serde(default = "default_max_rows")]
    max_rows: usize,
    #[serde(default = "default_timeout_secs")]
    timeout_secs: u64,
    queries: BTreeMap<String, String>,
}

fn default_max_rows() -> usize {
    500
}

fn default_timeout_secs() -> u64 {
    30
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeneric {
    #[serde(default)]
    spans: Option<PathBuf>,
    #[serde(default)]
    rules: Option<PathBuf>,
    #[serde(default)]
    kb: Option<RawKb>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKb {
    endpoint: String,
    cache: PathBuf,
    #[serde(default = "default_timeout_secs")]
    timeout_secs: u64,
    #[serde(default)]
    query_template: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    conll: PathBuf,
    jsonl: PathBuf,
    report: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    #[serde(default = "default_strict")]
    strict: bool,
    #[serde(default)]
    case_sensitive: bool,
    #[serde(default)]
    pos_filter: bool,
    #[serde(default = "default_workers")]
    workers: usize,
}

impl Default for RawOptions {
    fn default() -> Self {
        RawOptions {
            strict: default_strict(),
            case_sensitive: false,
            pos_filter: false,
            workers: default_workers(),
        }
    }
}

fn default_strict() -> bool {
    true
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawText {
    #[serde(default)]
    strip_chars: Option<Vec<char>>,
    #[serde(default)]
    abbreviations: Option<Vec<String>>,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// Parses and resolves a TOML pipeline configuration. Relative paths are
/// taken relative to the config file's directory.
pub fn load_pipeline_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let raw_text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawConfig =
        toml::from_str(&raw_text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();

    let mut text = TextConfig::default();
    if let Some(t) = raw.text {
        if let Some(chars) = t.strip_chars {
            text.strip_chars = chars.into_iter().collect();
        }
        if let Some(abbrs) = t.abbreviations {
            text.abbreviations = abbrs.into_iter().collect();
        }
    }

    let silver_fetch = raw.seeds.fetch.map(|f| SilverFetchConfig {
        endpoint: f.endpoint,
        queries: f.queries,
        cache_path: resolve(&base, f.cache),
        timeout: Duration::from_secs(f.timeout_secs),
        max_rows: f.max_rows,
    });

    let (generic_spans, refinement_rules, kb) = match raw.generic {
        None => (None, None, None),
        Some(g) => (
            g.spans.map(|p| resolve(&base, p)),
            g.rules.map(|p| resolve(&base, p)),
            g.kb.map(|k| KbConfig {
                endpoint: k.endpoint,
                cache_path: resolve(&base, k.cache),
                timeout: Duration::from_secs(k.timeout_secs),
                query_template: k.query_template,
            }),
        ),
    };

    Ok(PipelineConfig {
        corpus: resolve(&base, raw.input.corpus),
        gold_seeds: resolve(&base, raw.seeds.gold),
        silver_seeds: raw.seeds.silver.map(|p| resolve(&base, p)),
        silver_fetch,
        generic_spans,
        refinement_rules,
        kb,
        out_conll: resolve(&base, raw.output.conll),
        out_jsonl: resolve(&base, raw.output.jsonl),
        out_report: resolve(&base, raw.output.report),
        strict: raw.options.strict,
        case_sensitive: raw.options.case_sensitive,
        pos_filter: raw.options.pos_filter,
        workers: raw.options.workers,
        text,
        registry: EntityTypeRegistry::with_default_types(),
        policy: HarmonizationPolicy::default(),
    })
}

impl PipelineConfig {
    /// Overrides the knowledge-base endpoint (both silver fetch and
    /// refinement lookup), as done for the environment variable override.
    pub fn override_kb_endpoint(&mut self, endpoint: &str) {
        if let Some(f) = &mut self.silver_fetch {
            f.endpoint = endpoint.to_string();
        }
        if let Some(k) = &mut self.kb {
            k.endpoint = endpoint.to_string();
        }
    }

    /// Checks path existence and cross-field constraints before running.
    pub fn validate(&self) -> Result<()> {
        for (name, path) in [
            ("input corpus", &self.corpus),
            ("gold seed file", &self.gold_seeds),
        ] {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "{name} not found: {}",
                    path.display()
                )));
            }
        }
        if let Some(p) = &self.silver_seeds {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "silver seed file not found: {}",
                    p.display()
                )));
            }
        }
        if self.silver_seeds.is_none() && self.silver_fetch.is_none() {
            return Err(Error::Config(
                "no silver seeds: provide [seeds].silver or [seeds.fetch]".into(),
            ));
        }
        for (name, path) in [
            ("generic span file", &self.generic_spans),
            ("refinement rule file", &self.refinement_rules),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::Config(format!("{name} not found: {}", p.display())));
                }
            }
        }
        if self.refinement_rules.is_some() && self.kb.is_none() {
            return Err(Error::Config(
                "refinement rules configured without [generic.kb]".into(),
            ));
        }
        Ok(())
    }
}

/// One fully annotated sentence in the output JSONL format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sent_id: String,
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
    pub spans: Vec<AnnotatedSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSpan {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub type_name: String,
    pub source: String,
}

impl AnnotatedSpan {
    fn from_span(span: &EntitySpan) -> Self {
        AnnotatedSpan {
            start: span.start,
            end: span.end,
            type_name: span.entity_type.name().to_string(),
            source: span.source.as_str().to_string(),
        }
    }
}

pub fn write_annotated_jsonl(
    sentences: &[AnnotatedSentence],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in sentences {
        let line = serde_json::to_string(s).expect("annotated sentence serializes");
        w.write_all(line.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_annotated_jsonl(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let s: AnnotatedSentence = serde_json::from_str(&line).map_err(|e| Error::JsonLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

/// The machine-readable report written next to the annotated corpus.
#[derive(Debug, Clone, Serialize)]
pub struct AnnotateReport {
    pub documents: usize,
    pub sentences: u64,
    pub entities: u64,
    pub per_type: BTreeMap<String, u64>,
    pub seed_entries: usize,
    pub seed_conflicts: usize,
    pub generic_spans_loaded: usize,
    pub refinements_applied: usize,
}

/// Everything `run_annotate` reports back to the caller.
#[derive(Debug)]
pub struct AnnotateSummary {
    pub report: AnnotateReport,
    pub stats: CorpusStats,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

fn in_worker_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the full annotation pipeline: clean, segment, tokenize, run the
/// health and generic passes, harmonize with health priority, and write the
/// CoNLL, JSONL, and report outputs. Deterministic given fixed inputs and a
/// warm knowledge-base cache; on error, files written by this run are
/// removed.
pub fn run_annotate(config: &PipelineConfig) -> Result<AnnotateSummary> {
    config.validate()?;
    in_worker_pool(config.workers, || run_annotate_inner(config))?
}

fn run_annotate_inner(config: &PipelineConfig) -> Result<AnnotateSummary> {
    let mut warnings = Vec::new();

    let documents = read_jsonl_corpus(&config.corpus)?;
    let sentences: Vec<Sentence> = documents
        .par_iter()
        .map(|d| tokenize_document(d, &config.text))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    // Seed lexicons: gold file, plus silver from file and/or live fetch.
    let (gold, gold_report) = load_lexicon(&config.gold_seeds, &config.registry, &config.text)?;
    let mut lexicon = gold;
    let mut seed_conflicts = gold_report.conflicts.len();
    if let Some(path) = &config.silver_seeds {
        let (silver, report) = load_lexicon(path, &config.registry, &config.text)?;
        seed_conflicts += report.conflicts.len();
        let merged = merge_lexicons(&lexicon, &silver)?;
        seed_conflicts += merged.report.conflicts.len();
        lexicon = merged.lexicon;
    }
    if let Some(fetch) = &config.silver_fetch {
        let outcome = fetch_silver_seeds(fetch, &config.registry, &config.text)?;
        warnings.extend(outcome.warnings);
        let (fetched, report) = SeedLexicon::from_entries(outcome.entries, "silver-fetch")?;
        seed_conflicts += report.conflicts.len();
        let merged = merge_lexicons(&lexicon, &fetched)?;
        seed_conflicts += merged.report.conflicts.len();
        lexicon = merged.lexicon;
    }
    if lexicon.is_empty() {
        warnings.push("seed lexicon is empty; health pass will match nothing".into());
    }

    let matcher = compile(
        &lexicon,
        &config.text,
        MatcherOptions {
            case_sensitive: config.case_sensitive,
            pos_filter: config.pos_filter,
        },
    );
    let health = annotate_health(&sentences, &matcher);

    let generic_outcome = match &config.generic_spans {
        None => GenericOutcome::default(),
        Some(path) => {
            let rules = match &config.refinement_rules {
                Some(p) => RefinementRules::load_tsv(p, &config.registry)?,
                None => RefinementRules::default(),
            };
            let mut kb_client: Option<SparqlKbClient> = match (&config.kb, rules.is_empty()) {
                (Some(kb), false) => Some(SparqlKbClient::new(
                    &kb.endpoint,
                    &kb.cache_path,
                    kb.timeout,
                    kb.query_template.clone(),
                )?),
                _ => None,
            };
            annotate_generic(
                &sentences,
                path,
                kb_client.as_mut().map(|c| c as &mut dyn KbClient),
                &rules,
                &config.registry,
                config.strict,
            )?
        }
    };

    let generic = &generic_outcome.spans;
    let empty: Vec<EntitySpan> = Vec::new();
    let harmonized: Vec<Vec<EntitySpan>> = sentences
        .par_iter()
        .map(|s| {
            harmonize(
                health.get(&s.sent_id).unwrap_or(&empty),
                generic.get(&s.sent_id).unwrap_or(&empty),
                &config.policy,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut conll_sentences = Vec::with_capacity(sentences.len());
    let mut annotated = Vec::with_capacity(sentences.len());
    for (sentence, spans) in sentences.iter().zip(&harmonized) {
        let labels = spans_to_bio(sentence.tokens.len(), spans)?;
        conll_sentences.push(ConllSentence::new(sentence.token_texts(), labels.clone()));
        annotated.push(AnnotatedSentence {
            sent_id: sentence.sent_id.clone(),
            tokens: sentence.token_texts(),
            labels,
            spans: spans.iter().map(AnnotatedSpan::from_span).collect(),
        });
    }

    let triples: Vec<Vec<SpanTriple>> = harmonized
        .iter()
        .map(|spans| {
            spans
                .iter()
                .map(|s| (s.start, s.end, s.entity_type.name().to_string()))
                .collect()
        })
        .collect();
    let stats = corpus_stats(triples.iter());

    let report = AnnotateReport {
        documents: documents.len(),
        sentences: stats.total_sentences,
        entities: stats.total_entities,
        per_type: stats.per_type.clone(),
        seed_entries: lexicon.len(),
        seed_conflicts,
        generic_spans_loaded: generic_outcome.stats.spans_loaded,
        refinements_applied: generic_outcome
            .decisions
            .iter()
            .filter(|d| d.old_type != d.new_type)
            .count(),
    };

    let outputs = vec![
        config.out_conll.clone(),
        config.out_jsonl.clone(),
        config.out_report.clone(),
    ];
    let write_all = || -> Result<()> {
        for out in &outputs {
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
            }
        }
        write_conll(&conll_sentences, &config.out_conll)?;
        write_annotated_jsonl(&annotated, &config.out_jsonl)?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        std::fs::write(&config.out_report, json).map_err(|e| Error::io(&config.out_report, e))?;
        Ok(())
    };
    if let Err(e) = write_all() {
        for out in &outputs {
            let _ = std::fs::remove_file(out);
        }
        return Err(e);
    }

    Ok(AnnotateSummary {
        report,
        stats,
        warnings,
        outputs,
    })
}

/// Outcome of `run_fetch_seeds`.
#[derive(Debug)]
pub struct FetchSummary {
    pub entries: usize,
    pub warnings: Vec<String>,
    pub tsv_path: PathBuf,
    pub cache_path: PathBuf,
}

/// Fetches silver seeds per the config and writes them as a seed TSV to the
/// configured silver path, leaving the query cache warm.
pub fn run_fetch_seeds(config: &PipelineConfig) -> Result<FetchSummary> {
    let Some(fetch) = &config.silver_fetch else {
        return Err(Error::Config("fetch-seeds requires [seeds.fetch]".into()));
    };
    let Some(tsv_path) = &config.silver_seeds else {
        return Err(Error::Config(
            "fetch-seeds requires [seeds].silver as the output TSV path".into(),
        ));
    };
    let outcome = fetch_silver_seeds(fetch, &config.registry, &config.text)?;
    let (lexicon, _) = SeedLexicon::from_entries(outcome.entries, "silver-fetch")?;
    if let Some(parent) = tsv_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    save_lexicon_tsv(&lexicon, tsv_path)?;
    Ok(FetchSummary {
        entries: lexicon.len(),
        warnings: outcome.warnings,
        tsv_path: tsv_path.clone(),
        cache_path: fetch.cache_path.clone(),
    })
}

/// Scores a prediction CoNLL file against a gold CoNLL file. Sentences are
/// aligned by position; differing sentence counts are a usage error.
pub fn run_evaluate(
    gold_path: impl AsRef<Path>,
    pred_path: impl AsRef<Path>,
) -> Result<EvalReport> {
    let gold_path = gold_path.as_ref();
    let pred_path = pred_path.as_ref();
    let gold = crate::corpus::read_conll(gold_path, true)?;
    let pred = crate::corpus::read_conll(pred_path, true)?;
    if gold.len() != pred.len() {
        return Err(Error::InputMismatch(format!(
            "sentence count mismatch: {} has {}, {} has {}",
            gold_path.display(),
            gold.len(),
            pred_path.display(),
            pred.len()
        )));
    }

    let mut gold_map: BTreeMap<String, Vec<SpanTriple>> = BTreeMap::new();
    let mut pred_map: BTreeMap<String, Vec<SpanTriple>> = BTreeMap::new();
    for (i, (g, p)) in gold.iter().zip(&pred).enumerate() {
        let id = format!("s{i}");
        gold_map.insert(id.clone(), decode_sentence(g, i)?);
        pred_map.insert(id, decode_sentence(p, i)?);
    }
    entity_f1(&gold_map, &pred_map)
}

fn decode_sentence(sentence: &ConllSentence, index: usize) -> Result<Vec<SpanTriple>> {
    bio_to_spans(&sentence.labels, true).map_err(|e| match e {
        Error::BioTransitionAt {
            index: i,
            label,
            previous,
        } => Error::BioTransitionAt {
            index: i,
            label: format!("{label} (sentence {index})"),
            previous,
        },
        other => other,
    })
}

/// Counts spans per type over an annotated JSONL corpus.
pub fn run_stats(annotated_path: impl AsRef<Path>) -> Result<CorpusStats> {
    let sentences = read_annotated_jsonl(annotated_path)?;
    let triples: Vec<Vec<SpanTriple>> = sentences
        .iter()
        .map(|s| {
            s.spans
                .iter()
                .map(|sp| (sp.start, sp.end, sp.type_name.clone()))
                .collect()
        })
        .collect();
    Ok(corpus_stats(triples.iter()))
}
