//! Entity-level scoring, inter-annotator agreement, and run aggregation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// `(start, end, type_name)` with exact-match semantics.
pub type SpanTriple = (usize, usize, String);

/// Raw exact-match counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Precision/recall/F1 with the 0/0 = 0 convention.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(c: Counts) -> Metrics {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            precision,
            recall,
            f1,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TypeReport {
    #[serde(flatten)]
    pub counts: Counts,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Entity-level evaluation report: per-type and micro-averaged counts and
/// metrics, gold support per type, and the number of scored sentences.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_type: BTreeMap<String, TypeReport>,
    pub micro: TypeReport,
    pub support: BTreeMap<String, u64>,
    pub n_sentences: usize,
}

/// Exact-match entity F1: a prediction is a true positive iff its
/// (start, end, type) triple equals a gold span of the same sentence, each
/// gold span matching at most one prediction. Gold and prediction must cover
/// the same sentence-id set.
pub fn entity_f1(
    gold: &BTreeMap<String, Vec<SpanTriple>>,
    pred: &BTreeMap<String, Vec<SpanTriple>>,
) -> Result<EvalReport> {
    let gold_ids: BTreeSet<&String> = gold.keys().collect();
    let pred_ids: BTreeSet<&String> = pred.keys().collect();
    if gold_ids != pred_ids {
        let only_gold: Vec<&str> = gold_ids.difference(&pred_ids).map(|s| s.as_str()).collect();
        let only_pred: Vec<&str> = pred_ids.difference(&gold_ids).map(|s| s.as_str()).collect();
        return Err(Error::SentIdMismatch(format!(
            "only in gold: [{}], only in prediction: [{}]",
            only_gold.join(", "),
            only_pred.join(", ")
        )));
    }

    let mut per_type: BTreeMap<String, Counts> = BTreeMap::new();
    let mut support: BTreeMap<String, u64> = BTreeMap::new();

    for (sent_id, gold_spans) in gold {
        let pred_spans = &pred[sent_id];
        // Multiset match per (start, end, type) triple.
        let mut gold_counts: HashMap<&SpanTriple, u64> = HashMap::new();
        for g in gold_spans {
            *gold_counts.entry(g).or_default() += 1;
            *support.entry(g.2.clone()).or_default() += 1;
        }
        for p in pred_spans {
            let slot = per_type.entry(p.2.clone()).or_default();
            match gold_counts.get_mut(p) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    slot.tp += 1;
                }
                _ => slot.fp += 1,
            }
        }
        for (g, n) in gold_counts {
            per_type.entry(g.2.clone()).or_default().fn_ += n;
        }
    }

    let mut micro = Counts::default();
    let mut report_types = BTreeMap::new();
    for (ty, counts) in per_type {
        micro.tp += counts.tp;
        micro.fp += counts.fp;
        micro.fn_ += counts.fn_;
        report_types.insert(
            ty,
            TypeReport {
                counts,
                metrics: Metrics::from_counts(counts),
            },
        );
    }
    Ok(EvalReport {
        per_type: report_types,
        micro: TypeReport {
            counts: micro,
            metrics: Metrics::from_counts(micro),
        },
        support,
        n_sentences: gold.len(),
    })
}

/// N items by K categories, each row summing to the rater count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementTable {
    counts: Vec<Vec<u64>>,
    raters: u64,
}

impl AgreementTable {
    pub fn new(counts: Vec<Vec<u64>>, raters: u64) -> Result<Self> {
        if counts.is_empty() || raters < 2 {
            return Err(Error::BadAgreementTable);
        }
        let k = counts[0].len();
        if k == 0 {
            return Err(Error::BadAgreementTable);
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return Err(Error::BadAgreementTable);
            }
            let sum: u64 = row.iter().sum();
            if sum != raters {
                return Err(Error::BadRowSum {
                    row: i,
                    got: sum,
                    want: raters,
                });
            }
        }
        Ok(AgreementTable { counts, raters })
    }

    /// Builds the table from per-rater label sequences over the same items.
    /// Categories are the distinct labels, in sorted order.
    pub fn from_labels<S: AsRef<str>>(raters: &[Vec<S>]) -> Result<Self> {
        if raters.len() < 2 {
            return Err(Error::BadAgreementTable);
        }
        let n_items = raters[0].len();
        if n_items == 0 || raters.iter().any(|r| r.len() != n_items) {
            return Err(Error::BadAgreementTable);
        }
        let categories: BTreeSet<&str> = raters
            .iter()
            .flat_map(|r| r.iter().map(AsRef::as_ref))
            .collect();
        let index: HashMap<&str, usize> = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, i))
            .collect();
        let mut counts = vec![vec![0u64; categories.len()]; n_items];
        for rater in raters {
            for (item, label) in rater.iter().enumerate() {
                counts[item][index[label.as_ref()]] += 1;
            }
        }
        AgreementTable::new(counts, raters.len() as u64)
    }

    pub fn n_items(&self) -> usize {
        self.counts.len()
    }

    pub fn n_categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn raters(&self) -> u64 {
        self.raters
    }
}

/// Fleiss kappa: `(P_bar - P_e) / (1 - P_e)` where `P_bar` is the mean
/// per-item agreement and `P_e` the sum of squared category proportions.
/// Complete agreement returns exactly 1.0 (also when all mass sits in one
/// category); `P_e == 1` with imperfect agreement is a degenerate-table
/// error.
pub fn fleiss_kappa(table: &AgreementTable) -> Result<f64> {
    let n = table.raters as f64;
    let n_items = table.counts.len() as f64;

    let mut category_totals = vec![0u64; table.n_categories()];
    let mut p_bar_sum = 0.0;
    let mut all_agree = true;
    for row in &table.counts {
        let mut same: u64 = 0;
        for (j, &c) in row.iter().enumerate() {
            category_totals[j] += c;
            same += c * c;
        }
        if !row.contains(&table.raters) {
            all_agree = false;
        }
        p_bar_sum += (same - table.raters) as f64 / (n * (n - 1.0));
    }
    if all_agree {
        return Ok(1.0);
    }

    let total = (table.raters * table.counts.len() as u64) as f64;
    let p_e: f64 = category_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / total;
            p * p
        })
        .sum();
    if 1.0 - p_e == 0.0 {
        return Err(Error::DegenerateAgreement);
    }
    let p_bar = p_bar_sum / n_items;
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Mean and sample standard deviation over repeated-run scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunAggregate {
    pub scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Arithmetic mean and sample (n-1) standard deviation; a single score has
/// std 0 by convention.
pub fn aggregate_runs(scores: &[f64]) -> Result<RunAggregate> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = if scores.len() < 2 {
        0.0
    } else {
        let ss: f64 = scores.iter().map(|s| (s - mean) * (s - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    };
    Ok(RunAggregate {
        scores: scores.to_vec(),
        mean,
        std,
    })
}

/// Span counts over an annotated corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub per_type: BTreeMap<String, u64>,
    pub total_entities: u64,
    pub total_sentences: u64,
}

/// Counts spans per type over `(sentence, spans)` pairs given as type-name
/// span triples.
pub fn corpus_stats<'a, I>(sentences: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a Vec<SpanTriple>>,
{
    let mut stats = CorpusStats::default();
    for spans in sentences {
        stats.total_sentences += 1;
        for (_, _, ty) in spans {
            *stats.per_type.entry(ty.clone()).or_default() += 1;
            stats.total_entities += 1;
        }
    }
    stats
}

/// Plain-text rendering of an evaluation report.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let width = report
        .per_type
        .keys()
        .map(|t| t.len())
        .chain(["micro".len()])
        .max()
        .unwrap_or(5)
        .max(4);
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}  {:>5} {:>5} {:>5}",
        "type", "precision", "recall", "f1", "support", "tp", "fp", "fn"
    );
    for (ty, r) in &report.per_type {
        let support = report.support.get(ty).copied().unwrap_or(0);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}  {:>5} {:>5} {:>5}",
            ty,
            r.metrics.precision,
            r.metrics.recall,
            r.metrics.f1,
            support,
            r.counts.tp,
            r.counts.fp,
            r.counts.fn_
        );
    }
    let total_support: u64 = report.support.values().sum();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}  {:>5} {:>5} {:>5}",
        "micro",
        report.micro.metrics.precision,
        report.micro.metrics.recall,
        report.micro.metrics.f1,
        total_support,
        report.micro.counts.tp,
        report.micro.counts.fp,
        report.micro.counts.fn_
    );
    let _ = writeln!(out, "sentences: {}", report.n_sentences);
    out
}
