//! Two-column CoNLL reader/writer: `TOKEN<TAB>LABEL`, one token per line,
//! blank line after each sentence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harmonize::split_bio_label;

/// A sentence as stored in CoNLL files: parallel token and label lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

impl ConllSentence {
    pub fn new(tokens: Vec<String>, labels: Vec<String>) -> Self {
        ConllSentence { tokens, labels }
    }
}

/// Writes sentences in the exchange format. Every sentence block, including
/// the last, is followed by one blank line.
pub fn write_conll(sentences: &[ConllSentence], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for (i, s) in sentences.iter().enumerate() {
        if s.tokens.len() != s.labels.len() {
            return Err(Error::RaggedSentence {
                index: i,
                tokens: s.tokens.len(),
                labels: s.labels.len(),
            });
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in sentences {
        for (tok, label) in s.tokens.iter().zip(&s.labels) {
            writeln!(w, "{tok}\t{label}").map_err(|e| Error::io(path, e))?;
        }
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CoNLL file. In strict mode an `I-X` label that does not continue
/// a preceding `B-X`/`I-X` is an error naming the offending line; in lenient
/// mode it is repaired to `B-X`.
pub fn read_conll(path: impl AsRef<Path>, strict: bool) -> Result<Vec<ConllSentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut sentences = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    // Type of the label on the previous line, when that label was B-/I-.
    let mut prev_type: Option<String> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        if line.is_empty() {
            if !tokens.is_empty() {
                sentences.push(ConllSentence::new(
                    std::mem::take(&mut tokens),
                    std::mem::take(&mut labels),
                ));
            }
            prev_type = None;
            continue;
        }
        let mut parts = line.split('\t');
        let (tok, label) = match (parts.next(), parts.next(), parts.next()) {
            (Some(t), Some(l), None) if !t.is_empty() && !l.is_empty() => (t, l),
            _ => {
                return Err(Error::ConllFormat {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("expected TOKEN<TAB>LABEL, found {line:?}"),
                })
            }
        };
        let label = match split_bio_label(label) {
            Some(('O', None)) => {
                prev_type = None;
                label.to_string()
            }
            Some(('B', Some(ty))) => {
                prev_type = Some(ty.to_string());
                label.to_string()
            }
            Some(('I', Some(ty))) => {
                if prev_type.as_deref() == Some(ty) {
                    label.to_string()
                } else if strict {
                    return Err(Error::InvalidBioTransition {
                        line: lineno,
                        label: label.to_string(),
                        previous: prev_type.clone().map_or("O".to_string(), |t| t),
                    });
                } else {
                    prev_type = Some(ty.to_string());
                    format!("B-{ty}")
                }
            }
            _ => {
                return Err(Error::ConllFormat {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("invalid label {label:?}"),
                })
            }
        };
        tokens.push(tok.to_string());
        labels.push(label);
    }
    if !tokens.is_empty() {
        sentences.push(ConllSentence::new(tokens, labels));
    }
    Ok(sentences)
}
