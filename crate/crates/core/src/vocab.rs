//! Joint word/citation vocabulary, subsampling and the negative-sampling
//! distribution.

use std::collections::HashMap;

use thiserror::Error;

use crate::preprocess::{Token, TokenKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("no token reaches its minimum count")]
    EmptyVocabulary,
    #[error("minimum counts must be at least 1")]
    InvalidThreshold,
    #[error("vocabulary has no word tokens to draw negatives from")]
    NoNegativePool,
    #[error("duplicate surface `{0}`")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub surface: String,
    pub kind: TokenKind,
    pub count: u64,
}

/// Dense token ids ordered by descending count, ties by surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Wraps entries in the given order (used when loading persisted models).
    pub fn from_entries(entries: Vec<VocabEntry>) -> Result<Self, VocabError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.surface.clone(), i).is_some() {
                return Err(VocabError::Duplicate(e.surface.clone()));
            }
        }
        let total_tokens = entries.iter().map(|e| e.count).sum();
        Ok(Self { entries, index, total_tokens })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn entry(&self, id: usize) -> &VocabEntry {
        &self.entries[id]
    }

    pub fn id(&self, surface: &str) -> Option<usize> {
        self.index.get(surface).copied()
    }

    pub fn count(&self, surface: &str) -> u64 {
        self.id(surface).map_or(0, |i| self.entries[i].count)
    }

    /// Retained token occurrences before subsampling.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Subsampling keep probability `min(1, sqrt(t/f) + t/f)`, `f` the
    /// relative frequency. Citations are always kept.
    pub fn keep_probability(&self, id: usize, t: f64) -> f64 {
        let e = &self.entries[id];
        if e.kind == TokenKind::Citation {
            return 1.0;
        }
        keep_probability_for_frequency(e.count as f64 / self.total_tokens as f64, t)
    }
}

pub fn keep_probability_for_frequency(f: f64, t: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    let r = t / f;
    (r.sqrt() + r).min(1.0)
}

/// Counts tokens and drops those below their kind's minimum count.
pub fn build_vocab<S: AsRef<[Token]>>(
    sentences: impl IntoIterator<Item = S>,
    min_count_word: u64,
    min_count_citation: u64,
) -> Result<Vocabulary, VocabError> {
    if min_count_word == 0 || min_count_citation == 0 {
        return Err(VocabError::InvalidThreshold);
    }
    let mut counts: HashMap<String, (TokenKind, u64)> = HashMap::new();
    for s in sentences {
        for t in s.as_ref() {
            match counts.get_mut(t.surface.as_str()) {
                Some(slot) => slot.1 += 1,
                None => {
                    counts.insert(t.surface.clone(), (t.kind, 1));
                }
            }
        }
    }
    let mut entries: Vec<VocabEntry> = counts
        .into_iter()
        .filter(|(_, (kind, n))| {
            *n >= match kind {
                TokenKind::Word => min_count_word,
                TokenKind::Citation => min_count_citation,
            }
        })
        .map(|(surface, (kind, count))| VocabEntry { surface, kind, count })
        .collect();
    if entries.is_empty() {
        return Err(VocabError::EmptyVocabulary);
    }
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.surface.cmp(&b.surface)));
    Vocabulary::from_entries(entries)
}

/// Cumulative `count^0.75` mass over vocabulary ids; citation ids carry no
/// mass and are never drawn.
#[derive(Debug, Clone)]
pub struct NegativeTable {
    cumulative: Vec<f64>,
}

pub const NEGATIVE_POWER: f64 = 0.75;

impl NegativeTable {
    pub fn new(v: &Vocabulary) -> Result<Self, VocabError> {
        let weights: Vec<f64> = v
            .entries()
            .iter()
            .map(|e| match e.kind {
                TokenKind::Word => (e.count as f64).powf(NEGATIVE_POWER),
                TokenKind::Citation => 0.0,
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(VocabError::NoNegativePool);
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        // pin the tail exactly to 1 so every u in [0, 1) lands on a word
        let last_word = weights.iter().rposition(|w| *w > 0.0).unwrap();
        for c in &mut cumulative[last_word..] {
            *c = 1.0;
        }
        Ok(Self { cumulative })
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Probability mass of one id.
    pub fn mass(&self, id: usize) -> f64 {
        self.cumulative[id] - if id == 0 { 0.0 } else { self.cumulative[id - 1] }
    }

    /// Inverse-CDF lookup for `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1)
    }
}
