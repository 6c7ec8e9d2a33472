//! Corpus ingestion: documents, sentences, tokens, text cleaning and
//! tokenization, and the JSONL / CoNLL exchange formats.

mod conll;
mod jsonl;
mod text;

pub use conll::{read_conll, write_conll, ConllSentence};
pub use jsonl::{read_jsonl_corpus, write_jsonl_corpus};
pub use text::TextConfig;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One raw input article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<String>,
    #[serde(default = "default_language")]
    pub language: String,
}

fn default_language() -> String {
    "en".to_string()
}

impl Document {
    pub fn new(doc_id: impl Into<String>, body: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            title: String::new(),
            body: body.into(),
            published_at: None,
            language: default_language(),
        }
    }
}

/// A single token with character offsets into its sentence text.
/// Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
}

/// A tokenized sentence. `sent_id` is `{doc_id}:{sentence_index}` when the
/// sentence came out of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Tokenizes `text` with the given configuration.
    pub fn tokenize(sent_id: impl Into<String>, text: impl Into<String>, cfg: &TextConfig) -> Self {
        let text = text.into();
        let tokens = cfg.tokenize(&text);
        Sentence {
            sent_id: sent_id.into(),
            text,
            tokens,
        }
    }

    /// Validates the token-offset invariants: tokens strictly ordered,
    /// non-overlapping, and each token's slice of the text equals its text.
    pub fn check_offsets(&self) -> Result<()> {
        let chars: Vec<char> = self.text.chars().collect();
        let mut prev_end = 0usize;
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.char_start >= tok.char_end {
                return Err(Error::Config(format!(
                    "sentence {}: token {i} has empty range {}..{}",
                    self.sent_id, tok.char_start, tok.char_end
                )));
            }
            if i > 0 && tok.char_start < prev_end {
                return Err(Error::Config(format!(
                    "sentence {}: token {i} overlaps its predecessor",
                    self.sent_id
                )));
            }
            if tok.char_end > chars.len() {
                return Err(Error::Config(format!(
                    "sentence {}: token {i} range {}..{} exceeds text length {}",
                    self.sent_id,
                    tok.char_start,
                    tok.char_end,
                    chars.len()
                )));
            }
            let slice: String = chars[tok.char_start..tok.char_end].iter().collect();
            if slice != tok.text {
                return Err(Error::Config(format!(
                    "sentence {}: token {i} text {:?} does not match slice {:?}",
                    self.sent_id, tok.text, slice
                )));
            }
            prev_end = tok.char_end;
        }
        Ok(())
    }

    pub fn token_texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Builds the sentence id for sentence `index` of `doc_id` (0-based).
pub fn sentence_id(doc_id: &str, index: usize) -> String {
    format!("{doc_id}:{index}")
}

/// Cleans, segments, and tokenizes a document body into sentences with
/// stable ids.
pub fn tokenize_document(doc: &Document, cfg: &TextConfig) -> Vec<Sentence> {
    let cleaned = cfg.clean(&doc.body);
    cfg.segment(&cleaned)
        .into_iter()
        .enumerate()
        .map(|(i, text)| Sentence::tokenize(sentence_id(&doc.doc_id, i), text, cfg))
        .collect()
}
