//! Sentence segmentation and token normalization of citing spans.
//!
//! Normalization runs a fixed pipeline over each raw sentence:
//!
//! 1. placeholder protection (`⟦CITE:…⟧` becomes a citation token),
//! 2. URL replacement (`xurlx`),
//! 3. dash removal (`T-cell` → `Tcell`, standalone dashes dropped),
//! 4. number masking (`xnumx`),
//! 5. tokenization on whitespace and punctuation,
//! 6. capitalization normalization with optional acronym preservation,
//! 7. greedy longest-match phrase merging (`signaling_networks`).
//!
//! Steps 2, 3, 4, 6 and 7 can be switched off in [`NormConfig`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::corpus::{CitationId, CitingSpan, PLACEHOLDER_RE};

pub const URL_TOKEN: &str = "xurlx";
pub const NUM_TOKEN: &str = "xnumx";

pub const DEFAULT_ABBREVIATIONS: &[&str] =
    &["e.g.", "i.e.", "et al.", "Fig.", "vs.", "Dr.", "approx.", "ca.", "cf.", "Eq.", "No."];

const PHRASE_MIN_WORDS: usize = 2;
const PHRASE_MAX_WORDS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Word,
    Citation,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::Word => "word",
            TokenKind::Citation => "citation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub surface: String,
}

impl Token {
    pub fn word(surface: impl Into<String>) -> Self {
        Self { kind: TokenKind::Word, surface: surface.into() }
    }

    pub fn citation(id: &CitationId) -> Self {
        Self { kind: TokenKind::Citation, surface: id.token_surface() }
    }

    /// Classifies a surface from the sentence line format.
    pub fn from_surface(surface: &str) -> Self {
        if CitationId::from_token_surface(surface).is_some() {
            Self { kind: TokenKind::Citation, surface: surface.to_string() }
        } else {
            Self::word(surface)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub doc_id: CitationId,
    pub pub_year: i32,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Tokens joined by single spaces: the canonical training line.
    pub fn to_line(&self) -> String {
        tokens_to_line(&self.tokens)
    }

    fn is_valid(&self) -> bool {
        self.tokens.len() >= 2 && self.tokens.iter().any(|t| t.kind == TokenKind::Citation)
    }
}

impl AsRef<[Token]> for Sentence {
    fn as_ref(&self) -> &[Token] {
        &self.tokens
    }
}

pub fn tokens_to_line(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
}

pub fn line_to_tokens(line: &str) -> Vec<Token> {
    line.split_whitespace().map(Token::from_surface).collect()
}

/// Multi-word phrases (2–6 normalized words) merged into single tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseDict {
    entries: BTreeSet<Vec<String>>,
}

impl PhraseDict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a phrase after lowercase word normalization. Returns false when
    /// the normalized phrase is outside the 2–6 word range.
    pub fn insert(&mut self, phrase: &str) -> bool {
        let cfg = NormConfig { phrase_merge: false, ..NormConfig::default() };
        let words: Vec<String> = normalize(phrase, &PhraseDict::new(), &cfg)
            .into_iter()
            .filter(|t| t.kind == TokenKind::Word)
            .map(|t| t.surface)
            .collect();
        if !(PHRASE_MIN_WORDS..=PHRASE_MAX_WORDS).contains(&words.len()) {
            return false;
        }
        self.entries.insert(words)
    }

    /// One phrase per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let mut dict = Self::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            dict.insert(line);
        }
        dict
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn contains(&self, words: &[String]) -> bool {
        self.entries.contains(words)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: expected true/false, got `{value}`")]
    Bool { key: String, value: String },
}

/// Switches for the normalization pipeline plus segmentation settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormConfig {
    pub url_replace: bool,
    pub dash_removal: bool,
    pub number_replace: bool,
    pub lowercase: bool,
    pub phrase_merge: bool,
    pub abbreviations: Vec<String>,
    /// Acronyms kept in upper case. `None` lowercases everything.
    pub acronyms: Option<BTreeSet<String>>,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            url_replace: true,
            dash_removal: true,
            number_replace: true,
            lowercase: true,
            phrase_merge: true,
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
            acronyms: None,
        }
    }
}

impl NormConfig {
    /// Sets one boolean switch by key. Returns `Ok(false)` for keys that are
    /// not normalization switches.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        let slot = match key.replace('-', "_").as_str() {
            "url_replace" => &mut self.url_replace,
            "dash_removal" => &mut self.dash_removal,
            "number_replace" => &mut self.number_replace,
            "lowercase" => &mut self.lowercase,
            "phrase_merge" => &mut self.phrase_merge,
            _ => return Ok(false),
        };
        *slot = parse_bool(value).ok_or_else(|| ConfigError::Bool { key: key.into(), value: value.into() })?;
        Ok(true)
    }

    /// Parses a `key=value` switch file (`#` comments allowed).
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            if !cfg.set(k.trim(), v.trim())? {
                return Err(ConfigError::UnknownKey(k.trim().to_string()));
            }
        }
        Ok(cfg)
    }

    /// Replaces the abbreviation list from a one-per-line file body.
    pub fn load_abbreviations(&mut self, text: &str) {
        self.abbreviations = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
    }
}

pub fn parse_bool(v: &str) -> Option<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

// --- segmentation ----------------------------------------------------------

/// Rule-based sentence splitting.
///
/// A boundary is a run of `.`, `!` or `?` followed by whitespace and then an
/// uppercase letter or digit. A `.` that ends one of `abbreviations` is not a
/// boundary, and nothing inside a `⟦…⟧` placeholder is.
pub fn segment(text: &str, abbreviations: &[String]) -> Vec<String> {
    let abbrevs: Vec<String> = abbreviations.iter().map(|a| a.to_lowercase()).collect();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut in_placeholder = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        match c {
            '⟦' => in_placeholder = true,
            '⟧' => in_placeholder = false,
            '.' | '!' | '?' if !in_placeholder => {
                let mut j = i;
                while j + 1 < chars.len() && matches!(chars[j + 1].1, '.' | '!' | '?') {
                    j += 1;
                }
                let end = chars[j].0 + chars[j].1.len_utf8();
                let mut k = j + 1;
                let mut saw_space = false;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    saw_space = true;
                    k += 1;
                }
                let next_ok = k < chars.len() && (chars[k].1.is_uppercase() || chars[k].1.is_ascii_digit());
                let abbreviated = c == '.' && j == i && ends_with_abbreviation(&text[..end], &abbrevs);
                if saw_space && next_ok && !abbreviated {
                    push_trimmed(&mut sentences, &text[start..end]);
                    start = chars[k].0;
                    i = k;
                    continue;
                }
                i = j;
            }
            _ => {}
        }
        i += 1;
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

fn ends_with_abbreviation(prefix: &str, abbrevs: &[String]) -> bool {
    let lower = prefix.to_lowercase();
    abbrevs.iter().any(|a| {
        lower.ends_with(a.as_str()) && {
            let before = &lower[..lower.len() - a.len()];
            before.chars().next_back().is_none_or(|ch| !ch.is_alphanumeric())
        }
    })
}

// --- normalization ---------------------------------------------------------

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|\bwww\.)\S+").unwrap());

fn is_dash(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2212}')
}

fn remove_dashes(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        if !is_dash(c) {
            out.push(c);
            continue;
        }
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let next = chars.get(i + 1).copied();
        let inside_word = prev.is_some_and(char::is_alphanumeric) && next.is_some_and(char::is_alphanumeric);
        if !inside_word {
            out.push(' ');
        }
    }
    out
}

/// Replaces digit runs (`12`, `3.5`, `1,000`) that are not glued to letters
/// or digits on either side.
fn mask_numbers(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let standalone_start = c.is_ascii_digit() && (i == 0 || !chars[i - 1].is_alphanumeric());
        if standalone_start {
            // candidate ends after each digit group: 1 | 1.5 | 1.5,3 ...
            let mut ends = Vec::new();
            let mut j = i;
            loop {
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                ends.push(j);
                if j + 1 < chars.len() && matches!(chars[j], '.' | ',') && chars[j + 1].is_ascii_digit() {
                    j += 1;
                } else {
                    break;
                }
            }
            let standalone_end = ends
                .iter()
                .rev()
                .find(|&&e| e == chars.len() || !chars[e].is_alphanumeric())
                .copied();
            if let Some(e) = standalone_end {
                out.push_str(NUM_TOKEN);
                i = e;
                continue;
            }
            let last = *ends.last().unwrap();
            out.extend(&chars[i..last]);
            i = last;
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

fn is_all_caps(w: &str) -> bool {
    w.chars().count() >= 2 && w.chars().any(char::is_alphabetic) && !w.chars().any(char::is_lowercase)
}

/// Steps 2–5 on citation-free text.
fn word_pieces(text: &str, cfg: &NormConfig) -> Vec<String> {
    let mut s = text.to_string();
    if cfg.url_replace {
        s = URL_RE.replace_all(&s, format!(" {URL_TOKEN} ")).into_owned();
    }
    if cfg.dash_removal {
        s = remove_dashes(&s);
    }
    if cfg.number_replace {
        s = mask_numbers(&s);
    }
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

fn apply_case(w: String, cfg: &NormConfig) -> String {
    if !cfg.lowercase {
        return w;
    }
    match &cfg.acronyms {
        Some(keep) if keep.contains(&w) => w,
        _ => w.to_lowercase(),
    }
}

enum Piece<'a> {
    Text(&'a str),
    Cite(CitationId),
}

fn split_placeholders(raw: &str) -> Vec<Piece<'_>> {
    let mut pieces = Vec::new();
    let mut last = 0;
    for cap in PLACEHOLDER_RE.captures_iter(raw) {
        let m = cap.get(0).unwrap();
        let id = format!("{}:{}", &cap[1], &cap[2]).parse::<CitationId>();
        if let Ok(id) = id {
            pieces.push(Piece::Text(&raw[last..m.start()]));
            pieces.push(Piece::Cite(id));
            last = m.end();
        }
    }
    pieces.push(Piece::Text(&raw[last..]));
    pieces
}

/// Normalizes one raw sentence into word and citation tokens.
pub fn normalize(raw: &str, dict: &PhraseDict, cfg: &NormConfig) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run: Vec<String> = Vec::new();
    let flush = |run: &mut Vec<String>, tokens: &mut Vec<Token>| {
        let words = std::mem::take(run);
        if cfg.phrase_merge && !dict.is_empty() {
            tokens.extend(merge_phrases(words, dict).into_iter().map(Token::word));
        } else {
            tokens.extend(words.into_iter().map(Token::word));
        }
    };
    for piece in split_placeholders(raw) {
        match piece {
            Piece::Text(t) => run.extend(word_pieces(t, cfg).into_iter().map(|w| apply_case(w, cfg))),
            Piece::Cite(id) => {
                flush(&mut run, &mut tokens);
                tokens.push(Token::citation(&id));
            }
        }
    }
    flush(&mut run, &mut tokens);
    tokens
}

fn merge_phrases(words: Vec<String>, dict: &PhraseDict) -> Vec<String> {
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let longest = (PHRASE_MIN_WORDS..=PHRASE_MAX_WORDS.min(words.len() - i))
            .rev()
            .find(|&n| dict.contains(&lower[i..i + n]));
        match longest {
            Some(n) => {
                out.push(lower[i..i + n].join("_"));
                i += n;
            }
            None => {
                out.push(words[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Read-only corpus pre-scan for acronym preservation: all-caps tokens of
/// length ≥ 2 seen at least twice with that casing.
pub fn scan_acronyms<'a>(texts: impl IntoIterator<Item = &'a str>, cfg: &NormConfig) -> BTreeSet<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        for piece in split_placeholders(text) {
            if let Piece::Text(t) = piece {
                for w in word_pieces(t, cfg) {
                    if is_all_caps(&w) {
                        *counts.entry(w).or_default() += 1;
                    }
                }
            }
        }
    }
    counts.into_iter().filter(|(_, n)| *n >= 2).map(|(w, _)| w).collect()
}

/// Segments and normalizes spans; keeps only sentences with a citation and
/// at least two tokens.
pub fn run_preprocess<'a>(
    spans: impl IntoIterator<Item = &'a CitingSpan>,
    dict: &PhraseDict,
    cfg: &NormConfig,
) -> Vec<Sentence> {
    let mut out = Vec::new();
    for span in spans {
        for raw in segment(&span.text, &cfg.abbreviations) {
            let sentence = Sentence {
                doc_id: span.doc_id.clone(),
                pub_year: span.pub_year,
                tokens: normalize(&raw, dict, cfg),
            };
            if sentence.is_valid() {
                out.push(sentence);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    fn abbrevs() -> Vec<String> {
        NormConfig::default().abbreviations
    }

    #[test]
    fn segment_basic_split() {
        let s = segment("A was shown ⟦CITE:pmid:1⟧. B differs ⟦CITE:pmid:2⟧.", &abbrevs());
        assert_eq!(s, vec!["A was shown ⟦CITE:pmid:1⟧.", "B differs ⟦CITE:pmid:2⟧."]);
    }

    #[test]
    fn segment_respects_abbreviations() {
        let s = segment("Smith et al. ⟦CITE:pmid:1⟧ reported X.", &abbrevs());
        assert_eq!(s.len(), 1);
        let s = segment("As in Fig. 2 the rate rose. Then it fell.", &abbrevs());
        assert_eq!(s, vec!["As in Fig. 2 the rate rose.", "Then it fell."]);
        // "fig." at a real boundary is still not split
        let s = segment("We used e.g. Western blots.", &abbrevs());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn segment_without_terminal_punctuation() {
        assert_eq!(segment("no punctuation here", &abbrevs()), vec!["no punctuation here"]);
        assert!(segment("   ", &abbrevs()).is_empty());
    }

    #[test]
    fn segment_needs_uppercase_or_digit_after() {
        assert_eq!(segment("levels were low. but not zero.", &abbrevs()).len(), 1);
        assert_eq!(segment("It rose! 12 cells died? Yes.", &abbrevs()).len(), 3);
    }

    #[test]
    fn normalize_pipeline_example() {
        let t = normalize(
            "Phosphorylation of T-cell receptors ⟦CITE:pmid:18172933⟧",
            &PhraseDict::new(),
            &NormConfig::default(),
        );
        assert_eq!(surfaces(&t), ["phosphorylation", "of", "tcell", "receptors", "CITE:pmid:18172933"]);
        assert_eq!(t[4].kind, TokenKind::Citation);
    }

    #[test]
    fn normalize_urls_numbers_dashes() {
        let cfg = NormConfig::default();
        let d = PhraseDict::new();
        assert_eq!(surfaces(&normalize("see http://x.y/z for details", &d, &cfg)), ["see", "xurlx", "for", "details"]);
        assert_eq!(surfaces(&normalize("at www.ncbi.nlm.nih.gov today", &d, &cfg)), ["at", "xurlx", "today"]);
        assert_eq!(
            surfaces(&normalize("n = 1,024 cells (3.5%) – mostly Tyr216", &d, &cfg)),
            ["n", "xnumx", "cells", "xnumx", "mostly", "tyr216"]
        );
        assert_eq!(surfaces(&normalize("ChloroP1.1 and 2a", &d, &cfg)), ["chlorop1", "xnumx", "and", "2a"]);
    }

    #[test]
    fn steps_can_be_disabled() {
        let cfg = NormConfig {
            url_replace: false,
            dash_removal: false,
            number_replace: false,
            lowercase: false,
            ..NormConfig::default()
        };
        let t = normalize("T-cell 42 www.x.org", &PhraseDict::new(), &cfg);
        assert_eq!(surfaces(&t), ["T", "cell", "42", "www", "x", "org"]);
    }

    #[test]
    fn phrase_merging() {
        let dict = PhraseDict::parse("# phrases\nsignaling networks\nkinase specific phosphorylation site prediction\nsignaling\n");
        assert_eq!(dict.len(), 2);
        let t = normalize(
            "Global Signaling networks use kinase specific phosphorylation site prediction ⟦CITE:pmid:1⟧",
            &dict,
            &NormConfig::default(),
        );
        assert_eq!(
            surfaces(&t),
            ["global", "signaling_networks", "use", "kinase_specific_phosphorylation_site_prediction", "CITE:pmid:1"]
        );
    }

    #[test]
    fn phrase_merging_stops_at_citations() {
        let mut dict = PhraseDict::new();
        dict.insert("signaling networks");
        let t = normalize("signaling ⟦CITE:pmid:3⟧ networks", &dict, &NormConfig::default());
        assert_eq!(surfaces(&t), ["signaling", "CITE:pmid:3", "networks"]);
    }

    #[test]
    fn acronyms_survive_with_corpus_pass() {
        let texts = ["AKT binds PTM sites", "AKT and PTM again", "Single US mention"];
        let mut cfg = NormConfig::default();
        let acronyms = scan_acronyms(texts.iter().copied(), &cfg);
        assert_eq!(acronyms.iter().map(String::as_str).collect::<Vec<_>>(), ["AKT", "PTM"]);
        cfg.acronyms = Some(acronyms);
        let t = normalize("AKT and US", &PhraseDict::new(), &cfg);
        assert_eq!(surfaces(&t), ["AKT", "and", "us"]);
    }

    #[test]
    fn run_preprocess_filters_citationless_sentences() {
        let span = CitingSpan {
            doc_id: CitationId::pmid("9").unwrap(),
            pub_year: 2010,
            text: "Background is long. Kinases matter ⟦CITE:pmid:1⟧. Nothing cited here.".into(),
        };
        let out = run_preprocess([&span], &PhraseDict::new(), &NormConfig::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to_line(), "kinases matter CITE:pmid:1");
        let empty = CitingSpan { text: String::new(), ..span };
        assert!(run_preprocess([&empty], &PhraseDict::new(), &NormConfig::default()).is_empty());
    }

    #[test]
    fn norm_config_kv() {
        let cfg = NormConfig::from_kv_str("# c\nurl_replace=false\nnumber-replace = off\n").unwrap();
        assert!(!cfg.url_replace && !cfg.number_replace && cfg.dash_removal);
        assert!(matches!(NormConfig::from_kv_str("bogus=1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(NormConfig::from_kv_str("lowercase"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn line_format_round_trip() {
        let tokens = line_to_tokens("kinases matter CITE:pmid:1 CITE:meta:janedoe_cell_2006_127_635");
        assert_eq!(tokens[2].kind, TokenKind::Citation);
        assert_eq!(tokens[3].kind, TokenKind::Citation);
        assert_eq!(tokens[0].kind, TokenKind::Word);
    }

    proptest::proptest! {
        #[test]
        fn normalize_is_idempotent(words in proptest::collection::vec("[A-Za-z0-9.,;()%-]{1,9}", 0..12)) {
            let dict = PhraseDict::parse("alpha beta\nbeta gamma delta");
            let cfg = NormConfig::default();
            let raw = words.join(" ");
            let once = normalize(&raw, &dict, &cfg);
            let twice = normalize(&tokens_to_line(&once), &dict, &cfg);
            proptest::prop_assert_eq!(once, twice);
        }

        #[test]
        fn placeholders_become_citation_tokens(ids in proptest::collection::vec(1u32..99999, 1..5), filler in "[a-z ]{0,20}") {
            let raw: String = ids.iter().map(|i| format!("{filler} ⟦CITE:pmid:{i}⟧")).collect();
            let tokens = normalize(&raw, &PhraseDict::new(), &NormConfig::default());
            let cites: Vec<String> = tokens.iter().filter(|t| t.kind == TokenKind::Citation).map(|t| t.surface.clone()).collect();
            let expected: Vec<String> = ids.iter().map(|i| format!("CITE:pmid:{i}")).collect();
            proptest::prop_assert_eq!(cites, expected);
        }
    }
}
