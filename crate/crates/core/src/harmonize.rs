//! Conflict resolution between the health and generic annotation passes, and
//! the BIO label encoding used by the training-data exchange formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EntityKind, EntitySpan};

/// Priority policy for resolving overlapping spans. Health-kind spans beat
/// generic-kind spans; within a kind, the stronger source wins, then the
/// longer span, then the earlier start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonizationPolicy {
    pub kind_priority: Vec<EntityKind>,
}

impl Default for HarmonizationPolicy {
    fn default() -> Self {
        HarmonizationPolicy {
            kind_priority: vec![EntityKind::Health, EntityKind::Generic],
        }
    }
}

impl HarmonizationPolicy {
    fn kind_rank(&self, kind: EntityKind) -> usize {
        self.kind_priority
            .iter()
            .position(|k| *k == kind)
            .unwrap_or(self.kind_priority.len())
    }

    /// Total order over spans: stronger spans sort first.
    fn compare(&self, a: &EntitySpan, b: &EntitySpan) -> std::cmp::Ordering {
        self.kind_rank(a.entity_type.kind())
            .cmp(&self.kind_rank(b.entity_type.kind()))
            .then(a.source.rank().cmp(&b.source.rank()))
            .then(b.len().cmp(&a.len()))
            .then(a.start.cmp(&b.start))
            .then(a.entity_type.name().cmp(b.entity_type.name()))
    }
}

fn check_internal_overlaps(spans: &[EntitySpan]) -> Result<()> {
    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for pair in sorted.windows(2) {
        if pair[0].overlaps(pair[1]) {
            return Err(Error::OverlappingSpans {
                sent_id: pair[0].sent_id.clone(),
                a_start: pair[0].start,
                a_end: pair[0].end,
                a_type: pair[0].entity_type.name().to_string(),
                b_start: pair[1].start,
                b_end: pair[1].end,
                b_type: pair[1].entity_type.name().to_string(),
            });
        }
    }
    Ok(())
}

/// Merges the two passes into one non-overlapping, sorted span list.
///
/// Each input list must be internally non-overlapping. With the default
/// policy every health span survives unchanged, and a generic span survives
/// iff it shares no token with any health span.
pub fn harmonize(
    health: &[EntitySpan],
    generic: &[EntitySpan],
    policy: &HarmonizationPolicy,
) -> Result<Vec<EntitySpan>> {
    check_internal_overlaps(health)?;
    check_internal_overlaps(generic)?;

    let mut candidates: Vec<&EntitySpan> = health.iter().chain(generic.iter()).collect();
    candidates.sort_by(|a, b| policy.compare(a, b));

    let mut accepted: Vec<EntitySpan> = Vec::new();
    for cand in candidates {
        if accepted.iter().all(|kept| !kept.overlaps(cand)) {
            accepted.push(cand.clone());
        }
    }
    accepted.sort_by_key(|s| (s.start, s.end));
    Ok(accepted)
}

/// Splits a BIO label into its tag char and optional type name.
/// Returns `None` for anything that is not `O`, `B-X`, or `I-X`.
pub(crate) fn split_bio_label(label: &str) -> Option<(char, Option<&str>)> {
    if label == "O" {
        return Some(('O', None));
    }
    let (tag, ty) = label.split_once('-')?;
    if ty.is_empty() {
        return None;
    }
    match tag {
        "B" => Some(('B', Some(ty))),
        "I" => Some(('I', Some(ty))),
        _ => None,
    }
}

/// Encodes non-overlapping, sorted, in-bounds spans over a sentence of
/// `token_count` tokens into a BIO label sequence of the same length.
pub fn spans_to_bio(token_count: usize, spans: &[EntitySpan]) -> Result<Vec<String>> {
    let mut labels = vec!["O".to_string(); token_count];
    let mut claimed = vec![false; token_count];
    for span in spans {
        span.check_bounds(token_count)?;
        for i in span.start..span.end {
            if claimed[i] {
                return Err(Error::OverlappingSpans {
                    sent_id: span.sent_id.clone(),
                    a_start: span.start,
                    a_end: span.end,
                    a_type: span.entity_type.name().to_string(),
                    b_start: i,
                    b_end: i + 1,
                    b_type: labels[i].clone(),
                });
            }
            claimed[i] = true;
            labels[i] = if i == span.start {
                format!("B-{}", span.entity_type.name())
            } else {
                format!("I-{}", span.entity_type.name())
            };
        }
    }
    Ok(labels)
}

/// Decodes a BIO label sequence into `(start, end, type_name)` triples.
///
/// Strict mode rejects `I-X` labels that do not continue a `B-X`/`I-X` run;
/// lenient mode repairs them to `B-X`. Labels that are not syntactically
/// BIO are always rejected.
pub fn bio_to_spans(labels: &[String], strict: bool) -> Result<Vec<(usize, usize, String)>> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;

    for (i, label) in labels.iter().enumerate() {
        match split_bio_label(label) {
            Some(('O', None)) => {
                if let Some((start, ty)) = open.take() {
                    spans.push((start, i, ty));
                }
            }
            Some(('B', Some(ty))) => {
                if let Some((start, prev)) = open.take() {
                    spans.push((start, i, prev));
                }
                open = Some((i, ty.to_string()));
            }
            Some(('I', Some(ty))) => match &open {
                Some((_, prev)) if prev == ty => {}
                _ => {
                    if strict {
                        return Err(Error::BioTransitionAt {
                            index: i,
                            label: label.clone(),
                            previous: open
                                .as_ref()
                                .map_or("O".to_string(), |(_, t)| format!("B-{t}")),
                        });
                    }
                    if let Some((start, prev)) = open.take() {
                        spans.push((start, i, prev));
                    }
                    open = Some((i, ty.to_string()));
                }
            },
            _ => {
                return Err(Error::InvalidBioLabel {
                    index: i,
                    label: label.clone(),
                })
            }
        }
    }
    if let Some((start, ty)) = open {
        spans.push((start, labels.len(), ty));
    }
    Ok(spans)
}
