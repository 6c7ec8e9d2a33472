//! Exact multi-pattern matching of seed lexicons over tokenized sentences.
//!
//! The lexicon is compiled into a trie over token sequences; matching scans
//! each sentence greedily (leftmost match start, then longest match) and
//! never emits overlapping spans. Matching operates on whole normalized
//! tokens, so a seed never fires inside a longer token.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::{Sentence, TextConfig};
use crate::seeds::SeedLexicon;
use crate::types::{EntitySpan, EntityType, Provenance, SpanSource};

/// Matching behavior switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct MatcherOptions {
    /// Match surface tokens exactly instead of case-folded tokens.
    pub case_sensitive: bool,
    /// Require at least one noun or proper-noun token inside a match.
    /// Only enforced for sentences that carry PoS tags.
    pub pos_filter: bool,
}

#[derive(Debug, Clone)]
struct Payload {
    entity_type: EntityType,
    provenance: Provenance,
}

/// A seed lexicon compiled into a token-sequence trie.
#[derive(Debug)]
pub struct CompiledMatcher {
    token_ids: HashMap<String, u32>,
    /// Child maps per trie node; node 0 is the root.
    nodes: Vec<HashMap<u32, u32>>,
    accepts: HashMap<u32, Payload>,
    max_pattern_len: usize,
    pattern_count: usize,
    options: MatcherOptions,
}

/// Compiles the lexicon. Pattern payload conflicts on identical token
/// sequences are resolved at compile time: GOLD shadows SILVER; within one
/// provenance the lexicographically smallest type name wins.
pub fn compile(
    lexicon: &SeedLexicon,
    text_cfg: &TextConfig,
    options: MatcherOptions,
) -> CompiledMatcher {
    let mut matcher = CompiledMatcher {
        token_ids: HashMap::new(),
        nodes: vec![HashMap::new()],
        accepts: HashMap::new(),
        max_pattern_len: 0,
        pattern_count: 0,
        options,
    };

    // Lexicon entries are already sorted, which makes token-id assignment
    // and payload resolution independent of input order.
    for entry in lexicon.entries() {
        let pattern: Vec<String> = if options.case_sensitive {
            text_cfg
                .tokenize(&entry.surface)
                .into_iter()
                .map(|t| t.text)
                .collect()
        } else {
            entry.norm_tokens.clone()
        };
        if pattern.is_empty() {
            continue;
        }
        let node = matcher.insert(&pattern);
        let payload = Payload {
            entity_type: entry.entity_type.clone(),
            provenance: entry.provenance,
        };
        match matcher.accepts.get(&node) {
            None => {
                matcher.accepts.insert(node, payload);
                matcher.pattern_count += 1;
                matcher.max_pattern_len = matcher.max_pattern_len.max(pattern.len());
            }
            Some(existing) => {
                let replace = payload.provenance < existing.provenance
                    || (payload.provenance == existing.provenance
                        && payload.entity_type.name() < existing.entity_type.name());
                if replace {
                    matcher.accepts.insert(node, payload);
                }
            }
        }
    }
    matcher
}

impl CompiledMatcher {
    fn insert(&mut self, pattern: &[String]) -> u32 {
        let mut node = 0u32;
        for token in pattern {
            let next_token_id = self.token_ids.len() as u32;
            let token_id = *self.token_ids.entry(token.clone()).or_insert(next_token_id);
            let next_node = self.nodes.len() as u32;
            node = match self.nodes[node as usize].get(&token_id) {
                Some(&n) => n,
                None => {
                    self.nodes[node as usize].insert(token_id, next_node);
                    self.nodes.push(HashMap::new());
                    next_node
                }
            };
        }
        node
    }

    pub fn is_empty(&self) -> bool {
        self.accepts.is_empty()
    }

    pub fn pattern_count(&self) -> usize {
        self.pattern_count
    }

    pub fn max_pattern_len(&self) -> usize {
        self.max_pattern_len
    }

    /// True when the matcher accepts exactly this token sequence.
    pub fn accepts_pattern(&self, pattern: &[String]) -> bool {
        let mut node = 0u32;
        for token in pattern {
            let Some(&id) = self.token_ids.get(token) else {
                return false;
            };
            match self.nodes[node as usize].get(&id) {
                Some(&n) => node = n,
                None => return false,
            }
        }
        self.accepts.contains_key(&node)
    }

    /// Scans one sentence and returns non-overlapping spans, leftmost match
    /// start first, longest match winning at each start. Scanning resumes
    /// after the end of every accepted span.
    pub fn match_sentence(&self, sentence: &Sentence) -> Vec<EntitySpan> {
        if self.accepts.is_empty() || sentence.tokens.is_empty() {
            return Vec::new();
        }
        let keys: Vec<Option<u32>> = sentence
            .tokens
            .iter()
            .map(|t| {
                let text = if self.options.case_sensitive {
                    t.text.clone()
                } else {
                    t.text.to_lowercase()
                };
                self.token_ids.get(&text).copied()
            })
            .collect();

        let has_pos = sentence.tokens.iter().any(|t| t.pos.is_some());
        let n = keys.len();
        let mut spans = Vec::new();
        let mut i = 0usize;
        while i < n {
            let mut node = 0u32;
            let mut best: Option<(usize, &Payload)> = None;
            let limit = n.min(i + self.max_pattern_len);
            for (j, key) in keys.iter().enumerate().take(limit).skip(i) {
                let Some(id) = key else { break };
                match self.nodes[node as usize].get(id) {
                    Some(&next) => node = next,
                    None => break,
                }
                if let Some(payload) = self.accepts.get(&node) {
                    best = Some((j + 1, payload));
                }
            }
            if let Some((end, payload)) = best {
                if !self.options.pos_filter
                    || !has_pos
                    || sentence.tokens[i..end]
                        .iter()
                        .any(|t| is_nounish(t.pos.as_deref()))
                {
                    let source = match payload.provenance {
                        Provenance::Gold => SpanSource::GoldSeed,
                        Provenance::Silver => SpanSource::SilverSeed,
                    };
                    spans.push(
                        EntitySpan::new(
                            sentence.sent_id.clone(),
                            i,
                            end,
                            payload.entity_type.clone(),
                            source,
                        )
                        .with_score(1.0),
                    );
                    i = end;
                    continue;
                }
            }
            i += 1;
        }
        spans
    }
}

fn is_nounish(pos: Option<&str>) -> bool {
    match pos {
        Some(p) => p.starts_with("NN") || p == "NOUN" || p == "PROPN",
        None => false,
    }
}

/// Runs `match_sentence` over the whole corpus. Sentence-level parallelism;
/// every sentence id appears in the result, matched or not.
pub fn annotate_health(
    sentences: &[Sentence],
    matcher: &CompiledMatcher,
) -> HashMap<String, Vec<EntitySpan>> {
    sentences
        .par_iter()
        .map(|s| (s.sent_id.clone(), matcher.match_sentence(s)))
        .collect()
}


#[cfg(test)]
mod props {
    use super::tests::brute_force_match;
    use super::*;
    use crate::corpus::Token;
    use crate::seeds::{SeedEntry, SeedLexicon};
    use crate::types::EntityTypeRegistry;
    use proptest::prelude::*;
    use std::collections::HashMap as StdHashMap;

    const WORDS: [&str; 8] = [
        "corona", "virus", "delta", "loss", "of", "taste", "fever", "ward",
    ];
    const TYPES: [&str; 5] = ["CORONAVIRUS", "SIGN_OR_SYMPTOM", "GROUP", "GPE", "ORG"];

    fn word() -> impl Strategy<Value = String> {
        (0..WORDS.len()).prop_map(|i| WORDS[i].to_string())
    }

    fn raw_seed() -> impl Strategy<Value = (Vec<String>, usize, bool)> {
        (
            proptest::collection::vec(word(), 1..4),
            0..TYPES.len(),
            proptest::bool::ANY,
        )
    }

    fn sentence_from(tokens: &[String]) -> Sentence {
        let mut text = String::new();
        let mut toks = Vec::new();
        for t in tokens {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.chars().count();
            text.push_str(t);
            toks.push(Token {
                text: t.clone(),
                char_start: start,
                char_end: start + t.chars().count(),
                pos: None,
            });
        }
        Sentence {
            sent_id: "p0".into(),
            text,
            tokens: toks,
        }
    }

    proptest! {
        // Compiled matcher output equals the brute-force reference on random
        // lexicons and sentences.
        #[test]
        fn matches_brute_force(
            raw in proptest::collection::vec(raw_seed(), 0..50),
            tokens in proptest::collection::vec(word(), 0..30),
        ) {
            let reg = EntityTypeRegistry::with_default_types();
            // Force gold entries with identical tokens onto one type so the
            // lexicon is buildable; the reference matcher sees the same
            // resolved list.
            let mut gold_types: StdHashMap<Vec<String>, usize> = StdHashMap::new();
            let seeds: Vec<(Vec<String>, EntityType, Provenance)> = raw
                .into_iter()
                .map(|(pattern, ty_idx, is_gold)| {
                    let (ty_idx, prov) = if is_gold {
                        let idx = *gold_types.entry(pattern.clone()).or_insert(ty_idx);
                        (idx, Provenance::Gold)
                    } else {
                        (ty_idx, Provenance::Silver)
                    };
                    (pattern, reg.require(TYPES[ty_idx]).unwrap(), prov)
                })
                .collect();

            let cfg = TextConfig::default();
            let entries: Vec<SeedEntry> = seeds
                .iter()
                .map(|(pattern, ty, prov)| {
                    SeedEntry::new(pattern.join(" "), ty.clone(), *prov, "prop", &cfg).unwrap()
                })
                .collect();
            let lexicon = SeedLexicon::from_entries(entries, "prop").unwrap().0;
            let matcher = compile(&lexicon, &cfg, MatcherOptions::default());

            let sentence = sentence_from(&tokens);
            let got: Vec<(usize, usize, String, Provenance)> = matcher
                .match_sentence(&sentence)
                .into_iter()
                .map(|s| {
                    let prov = match s.source {
                        SpanSource::GoldSeed => Provenance::Gold,
                        _ => Provenance::Silver,
                    };
                    (s.start, s.end, s.entity_type.name().to_string(), prov)
                })
                .collect();
            let want = brute_force_match(&seeds, &tokens);
            prop_assert_eq!(got, want);
        }

        // Output spans are sorted, non-overlapping, and within bounds.
        #[test]
        fn output_spans_are_well_formed(
            raw in proptest::collection::vec(raw_seed(), 0..30),
            tokens in proptest::collection::vec(word(), 0..30),
        ) {
            let reg = EntityTypeRegistry::with_default_types();
            let cfg = TextConfig::default();
            let entries: Vec<SeedEntry> = raw
                .into_iter()
                .map(|(pattern, ty_idx, _)| {
                    SeedEntry::new(
                        pattern.join(" "),
                        reg.require(TYPES[ty_idx]).unwrap(),
                        Provenance::Silver,
                        "prop",
                        &cfg,
                    )
                    .unwrap()
                })
                .collect();
            let lexicon = SeedLexicon::from_entries(entries, "prop").unwrap().0;
            let matcher = compile(&lexicon, &cfg, MatcherOptions::default());
            let sentence = sentence_from(&tokens);
            let spans = matcher.match_sentence(&sentence);
            let mut prev_end = 0usize;
            for s in &spans {
                prop_assert!(s.start >= prev_end);
                prop_assert!(s.start < s.end);
                prop_assert!(s.end <= tokens.len());
                prev_end = s.end;
            }
        }
    }
}
