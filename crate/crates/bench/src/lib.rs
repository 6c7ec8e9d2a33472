//! Shared input builders for the benchmarks.

use corpustag::corpus::{Sentence, TextConfig};
use corpustag::seeds::{SeedEntry, SeedLexicon};
use corpustag::{EntityTypeRegistry, Provenance};

pub const WORDS: [&str; 16] = [
    "corona",
    "virus",
    "delta",
    "variant",
    "loss",
    "of",
    "taste",
    "fever",
    "ward",
    "berlin",
    "cases",
    "officials",
    "reported",
    "vaccine",
    "dose",
    "clinic",
];

const TYPES: [&str; 5] = [
    "CORONAVIRUS",
    "DISEASE_OR_SYNDROME",
    "SIGN_OR_SYMPTOM",
    "IMMUNE_RESPONSE",
    "GROUP",
];

/// Deterministic pseudo-random lexicon of `n` multi-token seeds.
pub fn synthetic_lexicon(n: usize) -> SeedLexicon {
    let reg = EntityTypeRegistry::with_default_types();
    let cfg = TextConfig::default();
    let mut state = 0x243f_6a88_85a3_08d3u64;
    let mut next = move |m: usize| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % m
    };
    let entries: Vec<SeedEntry> = (0..n)
        .map(|i| {
            let len = 1 + next(3);
            let mut words: Vec<&str> = (0..len).map(|_| WORDS[next(WORDS.len())]).collect();
            // Suffix keeps surfaces distinct so the lexicon really holds n
            // patterns.
            let tail = format!("{}{}", WORDS[next(WORDS.len())], i);
            let surface = {
                words.push(&tail);
                words.join(" ")
            };
            SeedEntry::new(
                surface,
                reg.require(TYPES[next(TYPES.len())]).unwrap(),
                if next(2) == 0 {
                    Provenance::Gold
                } else {
                    Provenance::Silver
                },
                "bench",
                &cfg,
            )
            .unwrap()
        })
        .collect();
    SeedLexicon::from_entries(entries, "bench").unwrap().0
}

/// Deterministic sentence of `len` tokens drawn from the shared vocabulary.
pub fn synthetic_sentence(len: usize, salt: u64) -> Sentence {
    let cfg = TextConfig::default();
    let mut state = salt.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut next = move |m: usize| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % m
    };
    let text = (0..len)
        .map(|_| WORDS[next(WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ");
    Sentence::tokenize(format!("bench:{salt}"), text, &cfg)
}
