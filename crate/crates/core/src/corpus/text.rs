//! Rule-based text cleaning, sentence segmentation, and tokenization.
//!
//! Everything here is deterministic: the same input and configuration always
//! produce the same output, which is what makes annotations reproducible.

use std::collections::BTreeSet;

use super::Token;

/// Configuration for the text-processing rules. All sets are configurable;
/// the defaults match the documented behavior of the pipeline.
#[derive(Debug, Clone)]
pub struct TextConfig {
    /// Characters removed outright by `clean`.
    pub strip_chars: BTreeSet<char>,
    /// Words (with their trailing period) that never end a sentence.
    pub abbreviations: BTreeSet<String>,
    /// Characters detached from word edges as their own tokens.
    pub punctuation: BTreeSet<char>,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            strip_chars: ['#', '*'].into_iter().collect(),
            abbreviations: [
                "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "No.", "U.S.", "U.K.", "e.g.", "i.e.", "vs.",
            ]
            .into_iter()
            .map(str::to_string)
            .collect(),
            punctuation: [
                '.', ',', ';', ':', '!', '?', '"', '\'', '(', ')', '\u{201c}', '\u{201d}',
                '\u{2018}', '\u{2019}',
            ]
            .into_iter()
            .collect(),
        }
    }
}

impl TextConfig {
    /// Removes every character in the strip set, collapses whitespace runs to
    /// a single space, and trims. Idempotent.
    pub fn clean(&self, raw: &str) -> String {
        let mut out = String::with_capacity(raw.len());
        let mut pending_space = false;
        for c in raw.chars() {
            if self.strip_chars.contains(&c) {
                continue;
            }
            if c.is_whitespace() {
                pending_space = true;
                continue;
            }
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
        out
    }

    /// Splits cleaned text into sentences.
    ///
    /// A split happens after '.', '!' or '?' when the next non-whitespace
    /// character exists and is uppercase, unless the word ending at the
    /// period is a configured abbreviation. End-of-text always closes the
    /// final sentence.
    pub fn segment(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut sentences = Vec::new();
        let mut start = 0usize;

        let mut i = 0usize;
        while i < n {
            let c = chars[i];
            if matches!(c, '.' | '!' | '?') {
                let next_is_ws = i + 1 < n && chars[i + 1].is_whitespace();
                if next_is_ws {
                    // First non-whitespace char after the candidate.
                    let mut j = i + 1;
                    while j < n && chars[j].is_whitespace() {
                        j += 1;
                    }
                    let upper_next = j < n && chars[j].is_uppercase();
                    if upper_next && !(c == '.' && self.ends_with_abbreviation(&chars, i)) {
                        let sent: String = chars[start..=i].iter().collect();
                        let sent = sent.trim().to_string();
                        if !sent.is_empty() {
                            sentences.push(sent);
                        }
                        start = j;
                        i = j;
                        continue;
                    }
                }
            }
            i += 1;
        }

        if start < n {
            let sent: String = chars[start..n].iter().collect();
            let sent = sent.trim().to_string();
            if !sent.is_empty() {
                sentences.push(sent);
            }
        }
        sentences
    }

    /// Checks whether the word ending at the period `chars[dot]` (inclusive)
    /// is one of the configured abbreviations. Comparison is
    /// case-insensitive so sentence-initial forms like "E.g." still match.
    fn ends_with_abbreviation(&self, chars: &[char], dot: usize) -> bool {
        let mut w = dot;
        while w > 0 && !chars[w - 1].is_whitespace() {
            w -= 1;
        }
        let word: String = chars[w..=dot].iter().collect();
        let folded = word.to_lowercase();
        self.abbreviations
            .iter()
            .any(|a| a.to_lowercase() == folded)
    }

    /// Splits on whitespace, then detaches leading and trailing punctuation
    /// characters as single-character tokens. Hyphenated words and internal
    /// apostrophes stay whole. Offsets are char offsets into `sentence_text`.
    pub fn tokenize(&self, sentence_text: &str) -> Vec<Token> {
        let chars: Vec<char> = sentence_text.chars().collect();
        let n = chars.len();
        let mut tokens = Vec::new();

        let mut i = 0usize;
        while i < n {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let chunk_start = i;
            let mut chunk_end = i;
            while chunk_end < n && !chars[chunk_end].is_whitespace() {
                chunk_end += 1;
            }

            let mut s = chunk_start;
            let mut e = chunk_end;
            while s < e && self.punctuation.contains(&chars[s]) {
                tokens.push(make_token(&chars, s, s + 1));
                s += 1;
            }
            let mut trailing = Vec::new();
            while e > s && self.punctuation.contains(&chars[e - 1]) {
                e -= 1;
                trailing.push(e);
            }
            if s < e {
                tokens.push(make_token(&chars, s, e));
            }
            for &p in trailing.iter().rev() {
                tokens.push(make_token(&chars, p, p + 1));
            }
            i = chunk_end;
        }
        tokens
    }
}

fn make_token(chars: &[char], start: usize, end: usize) -> Token {
    Token {
        text: chars[start..end].iter().collect(),
        char_start: start,
        char_end: end,
        pos: None,
    }
}
