//! Nearest-neighbour lookup and per-publication role reports.

use std::io::{self, Write};

use thiserror::Error;

use crate::align::AlignedSeries;
use crate::change::ChangeRecord;
use crate::corpus::CitationId;
use crate::linalg::{dot, norm};
use crate::preprocess::TokenKind;
use crate::sgns::EmbeddingModel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub surface: String,
    pub kind: TokenKind,
    pub similarity: f64,
}

/// Exhaustive cosine scan; the query token is excluded. Sorted by
/// similarity descending, then surface ascending.
pub fn nearest(
    model: &EmbeddingModel,
    token: &str,
    k: usize,
    kind: Option<TokenKind>,
) -> Result<Vec<Neighbor>, QueryError> {
    if k == 0 {
        return Err(QueryError::ZeroK);
    }
    let qid = model.vocab.id(token).ok_or_else(|| QueryError::UnknownToken(token.to_string()))?;
    let q = model.input_vectors.row_f64(qid);
    let qn = norm(&q);
    let mut hits: Vec<Neighbor> = model
        .vocab
        .entries()
        .iter()
        .enumerate()
        .filter(|(i, e)| *i != qid && kind.is_none_or(|k| e.kind == k))
        .map(|(i, e)| {
            let v = model.input_vectors.row_f64(i);
            let denom = qn * norm(&v);
            let similarity = if denom == 0.0 { 0.0 } else { (dot(&q, &v) / denom).clamp(-1.0, 1.0) };
            Neighbor { surface: e.surface.clone(), kind: e.kind, similarity }
        })
        .collect();
    hits.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.surface.cmp(&b.surface)));
    hits.truncate(k);
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoleRow {
    Present {
        year: i32,
        score: Option<f64>,
        top_citation: Option<Neighbor>,
        top_words: Vec<Neighbor>,
    },
    /// The publication is not in that year's vocabulary (or the year has
    /// no model).
    Absent { year: i32 },
}

impl RoleRow {
    pub fn year(&self) -> i32 {
        match self {
            RoleRow::Present { year, .. } | RoleRow::Absent { year } => *year,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleReport {
    pub publication: CitationId,
    pub rows: Vec<RoleRow>,
}

/// One row per year in `years` (inclusive).
pub fn role_report(
    series: &AlignedSeries,
    records: &[ChangeRecord],
    p: &CitationId,
    years: (i32, i32),
    n_words: usize,
) -> RoleReport {
    let surface = p.token_surface();
    let rows = (years.0..=years.1)
        .map(|year| {
            let Some(model) = series.model(year).filter(|m| m.vocab.id(&surface).is_some()) else {
                return RoleRow::Absent { year };
            };
            let score = records.iter().find(|r| r.year_t == year && &r.publication == p).map(|r| r.score);
            let top_citation =
                nearest(model, &surface, 1, Some(TokenKind::Citation)).ok().and_then(|v| v.into_iter().next());
            let top_words = if n_words == 0 {
                Vec::new()
            } else {
                nearest(model, &surface, n_words, Some(TokenKind::Word)).unwrap_or_default()
            };
            RoleRow::Present { year, score, top_citation, top_words }
        })
        .collect();
    RoleReport { publication: p.clone(), rows }
}

fn cell(n: &Neighbor) -> String {
    format!("{}({:.2})", n.surface, n.similarity)
}

/// `year \t score \t top_citation(sim) \t word(sim) …`
pub fn write_report_tsv<W: Write>(report: &RoleReport, mut w: W) -> io::Result<()> {
    for row in &report.rows {
        match row {
            RoleRow::Absent { year } => writeln!(w, "{year}\tabsent")?,
            RoleRow::Present { year, score, top_citation, top_words } => {
                let score = score.map_or_else(|| "NA".to_string(), crate::change::fmt_sig);
                let cit = top_citation.as_ref().map_or_else(|| "-".to_string(), cell);
                write!(w, "{year}\t{score}\t{cit}")?;
                for n in top_words {
                    write!(w, "\t{}", cell(n))?;
                }
                writeln!(w)?;
            }
        }
    }
    w.flush()
}

/// `rank \t surface \t kind \t similarity` lines.
pub fn write_neighbors_tsv<W: Write>(neighbors: &[Neighbor], mut w: W) -> io::Result<()> {
    for (i, n) in neighbors.iter().enumerate() {
        writeln!(w, "{}\t{}\t{}\t{}", i + 1, n.surface, n.kind, crate::change::fmt_sig(n.similarity))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgns::VectorTable;
    use crate::vocab::{VocabEntry, Vocabulary};

    fn model(period: i32, rows: &[(&str, [f32; 2])]) -> EmbeddingModel {
        let entries = rows
            .iter()
            .map(|(s, _)| VocabEntry {
                surface: s.to_string(),
                kind: if s.starts_with("CITE:") { TokenKind::Citation } else { TokenKind::Word },
                count: 5,
            })
            .collect();
        let data = rows.iter().flat_map(|(_, v)| *v).collect();
        EmbeddingModel {
            period,
            vocab: Vocabulary::from_entries(entries).unwrap(),
            input_vectors: VectorTable::from_vec(2, data),
            output_vectors: None,
            aligned_frame: Some(period),
        }
    }

    fn five() -> EmbeddingModel {
        model(
            2012,
            &[
                ("CITE:pmid:1", [1.0, 0.0]),
                ("kinase", [1.0, 1.0]),
                ("site", [0.0, 1.0]),
                ("CITE:pmid:2", [-1.0, 0.0]),
                ("motif", [2.0, 1.0]),
            ],
        )
    }

    #[test]
    fn hand_computed_top3() {
        let got = nearest(&five(), "CITE:pmid:1", 3, None).unwrap();
        let names: Vec<&str> = got.iter().map(|n| n.surface.as_str()).collect();
        assert_eq!(names, ["motif", "kinase", "site"]);
        assert!((got[0].similarity - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((got[1].similarity - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(got[2].similarity.abs() < 1e-12);
    }

    #[test]
    fn duplicate_row_and_filters() {
        let m = model(1, &[("a", [0.3, 0.4]), ("b", [0.3, 0.4]), ("CITE:pmid:3", [0.3, 0.41])]);
        let top = nearest(&m, "a", 1, None).unwrap();
        assert_eq!(top[0].surface, "b");
        assert!((top[0].similarity - 1.0).abs() < 1e-12);
        let cites = nearest(&m, "a", 5, Some(TokenKind::Citation)).unwrap();
        assert!(cites.iter().all(|n| n.kind == TokenKind::Citation));
        assert_eq!(cites.len(), 1);
        assert_eq!(nearest(&m, "zzz", 1, None), Err(QueryError::UnknownToken("zzz".into())));
        assert_eq!(nearest(&m, "a", 0, None), Err(QueryError::ZeroK));
    }

    #[test]
    fn similarity_is_symmetric() {
        let m = five();
        for a in ["kinase", "site", "motif"] {
            for b in nearest(&m, a, 10, None).unwrap() {
                let back = nearest(&m, &b.surface, 10, None).unwrap();
                let s = back.iter().find(|n| n.surface == a).unwrap().similarity;
                assert!((s - b.similarity).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn report_rows_and_tsv() {
        let models = vec![five(), model(2013, &[("kinase", [1.0, 0.0]), ("site", [0.0, 1.0])])];
        let steps = vec![crate::align::AlignStep::identity(2); 2];
        let series = AlignedSeries::from_parts(models, steps).unwrap();
        let p: CitationId = "17081983".parse().unwrap();
        let report = role_report(&series, &[], &p, (2012, 2013), 2);
        assert!(report.rows.iter().all(|r| matches!(r, RoleRow::Absent { .. })));

        let p: CitationId = "1".parse().unwrap();
        let rec = ChangeRecord { publication: p.clone(), year_t: 2012, score: 0.125, citations_t: 5, citations_prev: 5 };
        let report = role_report(&series, &[rec], &p, (2012, 2014), 2);
        assert_eq!(report.rows.len(), 3);
        let mut buf = Vec::new();
        write_report_tsv(&report, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "2012\t0.125\tCITE:pmid:2(-1.00)\tmotif(0.89)\tkinase(0.71)\n2013\tabsent\n2014\tabsent\n"
        );
    }
}
