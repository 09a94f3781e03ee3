//! Seeded synthetic corpora with known structure, for experiments,
//! benchmarks and tests.
//!
//! Sentences are drawn from disjoint word clusters. Every sentence cites
//! exactly one publication. Two focal publications are tracked: `STABLE`
//! is cited from cluster 0 in every period; `DRIFT` is cited from cluster 0
//! in the first period and from cluster 1 afterwards.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::CitationId;
use crate::preprocess::Token;

pub const STABLE_PMID: &str = "1";
pub const DRIFT_PMID: &str = "2";

pub fn stable_id() -> CitationId {
    CitationId::pmid(STABLE_PMID).unwrap()
}

pub fn drift_id() -> CitationId {
    CitationId::pmid(DRIFT_PMID).unwrap()
}

#[derive(Debug, Clone)]
pub struct DriftCorpusConfig {
    pub sentences_per_period: usize,
    pub words_per_cluster: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Background publications cited from each cluster.
    pub fillers_per_cluster: usize,
    /// Probability that a sentence of the focal cluster cites a focal
    /// publication instead of a background one.
    pub focal_rate: f64,
}

impl Default for DriftCorpusConfig {
    fn default() -> Self {
        Self {
            sentences_per_period: 2000,
            words_per_cluster: 50,
            min_len: 8,
            max_len: 12,
            fillers_per_cluster: 10,
            focal_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSentence {
    pub cluster: usize,
    pub words: Vec<String>,
    pub citation: CitationId,
    /// Number of words preceding the citation marker.
    pub cite_at: usize,
}

impl SyntheticSentence {
    pub fn tokens(&self) -> Vec<Token> {
        let mut out: Vec<Token> = self.words.iter().map(|w| Token::word(w.as_str())).collect();
        out.insert(self.cite_at, Token::citation(&self.citation));
        out
    }
}

/// Alphabetic cluster words (`kaaa`, `kaab`, … for cluster 0; `zuaa`, … for
/// cluster 1), so no later normalization step alters them.
pub fn cluster_words(cluster: usize, n: usize) -> Vec<String> {
    const PREFIXES: [&str; 4] = ["ka", "zu", "mo", "pe"];
    let prefix = PREFIXES[cluster % PREFIXES.len()];
    (0..n)
        .map(|i| {
            let a = (b'a' + (i / 26 % 26) as u8) as char;
            let b = (b'a' + (i % 26) as u8) as char;
            format!("{prefix}{a}{b}")
        })
        .collect()
}

pub fn filler_id(cluster: usize, i: usize) -> CitationId {
    CitationId::pmid(&(100 * (cluster + 1) + i).to_string()).unwrap()
}

/// Every publication a drift corpus can cite.
pub fn all_citations(cfg: &DriftCorpusConfig) -> Vec<CitationId> {
    let mut ids = vec![stable_id(), drift_id()];
    for c in 0..2 {
        ids.extend((0..cfg.fillers_per_cluster).map(|i| filler_id(c, i)));
    }
    ids
}

/// One period of the drift corpus. `drifted` selects where `DRIFT` is cited
/// from (cluster 0 when false, cluster 1 when true).
pub fn drift_period<R: Rng>(cfg: &DriftCorpusConfig, drifted: bool, rng: &mut R) -> Vec<SyntheticSentence> {
    let vocab = [cluster_words(0, cfg.words_per_cluster), cluster_words(1, cfg.words_per_cluster)];
    let drift_cluster = usize::from(drifted);
    (0..cfg.sentences_per_period)
        .map(|_| {
            let cluster = rng.random_range(0..2);
            let len = rng.random_range(cfg.min_len..=cfg.max_len);
            let words: Vec<String> = (0..len).map(|_| vocab[cluster].choose(rng).unwrap().clone()).collect();
            let u: f64 = rng.random();
            // cluster 0 hosts both focal citations in the first period, so
            // its focal rate is split to keep their counts comparable
            let citation = if cluster == 0 && u < cfg.focal_rate {
                stable_id()
            } else if cluster == drift_cluster
                && (if cluster == 0 { u < 2.0 * cfg.focal_rate } else { u < cfg.focal_rate })
            {
                drift_id()
            } else {
                filler_id(cluster, rng.random_range(0..cfg.fillers_per_cluster))
            };
            let cite_at = rng.random_range(0..=len);
            SyntheticSentence { cluster, words, citation, cite_at }
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders sentences as minimal JATS articles of `per_doc` one-sentence
/// paragraphs each. Returns `(file name, xml)` pairs; citing documents are
/// numbered from `first_pmid`.
pub fn to_jats(
    sentences: &[SyntheticSentence],
    year: i32,
    first_pmid: u64,
    per_doc: usize,
    cited: &[CitationId],
) -> Vec<(String, String)> {
    let refs: String = cited
        .iter()
        .enumerate()
        .filter(|(_, id)| id.kind() == crate::corpus::CitationKind::Pmid)
        .map(|(i, id)| {
            format!(
                "      <ref id=\"r{i}\"><element-citation><pub-id pub-id-type=\"pmid\">{}</pub-id></element-citation></ref>\n",
                id.value()
            )
        })
        .collect();
    let rid = |id: &CitationId| cited.iter().position(|c| c == id).map(|i| format!("r{i}"));

    sentences
        .chunks(per_doc.max(1))
        .enumerate()
        .map(|(n, chunk)| {
            let pmid = first_pmid + n as u64;
            let mut body = String::new();
            for s in chunk {
                let mut parts: Vec<String> = s.words.iter().map(|w| escape(w)).collect();
                if let Some(first) = parts.first_mut() {
                    let mut cs = first.chars();
                    if let Some(c) = cs.next() {
                        *first = c.to_uppercase().chain(cs).collect();
                    }
                }
                let marker = match rid(&s.citation) {
                    Some(r) => format!("<xref ref-type=\"bibr\" rid=\"{r}\">1</xref>"),
                    None => String::new(),
                };
                parts.insert(s.cite_at, marker);
                body.push_str(&format!("    <p>{}.</p>\n", parts.join(" ")));
            }
            let xml = format!(
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<article>\n  <front>\n    <article-meta>\n      \
                 <article-id pub-id-type=\"pmid\">{pmid}</article-id>\n      <pub-date><year>{year}</year></pub-date>\n    \
                 </article-meta>\n  </front>\n  <body>\n{body}  </body>\n  <back>\n    <ref-list>\n{refs}    </ref-list>\n  </back>\n</article>\n"
            );
            (format!("{year}_{pmid}.xml"), xml)
        })
        .collect()
}
