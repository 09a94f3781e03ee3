//! Change scores between consecutive aligned periods, grouped yearly
//! statistics, rankings and score histograms.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::align::AlignedSeries;
use crate::corpus::CitationId;
use crate::linalg::cosine;
use crate::preprocess::TokenKind;

/// `1 − cos(w_p^t, w_p^{t−1})` for one publication and year.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRecord {
    pub publication: CitationId,
    pub year_t: i32,
    pub score: f64,
    pub citations_t: u64,
    pub citations_prev: u64,
}

/// Change score from two vectors; `None` when either has zero norm.
pub fn score_vectors(current: &[f64], previous: &[f64]) -> Option<f64> {
    let nx = current.iter().map(|v| v * v).sum::<f64>();
    let ny = previous.iter().map(|v| v * v).sum::<f64>();
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    Some((1.0 - cosine(current, previous)).clamp(0.0, 2.0))
}

/// Change score of `p` at year `t` (against `t − 1`), or `None` when
/// undefined.
pub fn change_score(series: &AlignedSeries, p: &CitationId, t: i32) -> Option<f64> {
    let surface = p.token_surface();
    let now = series.model(t)?.vector(&surface)?;
    let before = series.model(t - 1)?.vector(&surface)?;
    let to64 = |v: &[f32]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    score_vectors(&to64(now), &to64(before))
}

/// How `citations_t` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// Occurrences in period `t` alone.
    #[default]
    WithinYear,
    /// Occurrences in all periods up to and including `t`.
    Cumulative,
}

/// Scores every citation token present in two consecutive periods, ordered
/// by year then publication text.
pub fn compute_records(series: &AlignedSeries, mode: CountMode) -> Vec<ChangeRecord> {
    let mut running: BTreeMap<&str, u64> = BTreeMap::new();
    let mut previous_counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, model) in series.models.iter().enumerate() {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for e in model.vocab.entries().iter().filter(|e| e.kind == TokenKind::Citation) {
            let c = match mode {
                CountMode::WithinYear => e.count,
                CountMode::Cumulative => {
                    let slot = running.entry(e.surface.as_str()).or_default();
                    *slot += e.count;
                    *slot
                }
            };
            counts.insert(e.surface.as_str(), c);
        }
        if idx > 0 {
            let t = model.period;
            let mut year_records: Vec<ChangeRecord> = counts
                .iter()
                .filter_map(|(&surface, &citations_t)| {
                    let citations_prev = *previous_counts.get(surface)?;
                    let publication = CitationId::from_token_surface(surface)?;
                    let score = change_score(series, &publication, t)?;
                    Some(ChangeRecord { publication, year_t: t, score, citations_t, citations_prev })
                })
                .collect();
            year_records.sort_by_cached_key(|r| r.publication.to_string());
            out.extend(year_records);
        }
        if mode == CountMode::Cumulative {
            // absent publications keep their running total
            for (s, c) in &running {
                counts.entry(s).or_insert(*c);
            }
        }
        previous_counts = counts;
    }
    out
}

/// Summary of the scores of one (year, threshold) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStat {
    pub year: i32,
    pub threshold: u64,
    /// `None` when `n == 0`.
    pub mean: Option<f64>,
    /// Sample SD (n − 1 denominator); `None` when `n == 0`, `0` when `n == 1`.
    pub sd: Option<f64>,
    pub n: usize,
}

/// How a record is compared against a citation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// `citations_t > threshold`
    #[default]
    Strict,
    /// `citations_t >= threshold`
    Inclusive,
}

impl ThresholdMode {
    fn admits(self, count: u64, threshold: u64) -> bool {
        match self {
            ThresholdMode::Strict => count > threshold,
            ThresholdMode::Inclusive => count >= threshold,
        }
    }
}

/// Mean, sample SD and size for every year present in `records` and every
/// threshold; cells are emitted even when empty.
pub fn yearly_stats(records: &[ChangeRecord], thresholds: &[u64], mode: ThresholdMode) -> Vec<GroupStat> {
    let mut by_year: BTreeMap<i32, Vec<&ChangeRecord>> = BTreeMap::new();
    for r in records {
        by_year.entry(r.year_t).or_default().push(r);
    }
    let mut out = Vec::new();
    for (&year, recs) in &by_year {
        for &threshold in thresholds {
            let scores: Vec<f64> =
                recs.iter().filter(|r| mode.admits(r.citations_t, threshold)).map(|r| r.score).collect();
            let (mean, sd) = mean_sd(&scores);
            out.push(GroupStat { year, threshold, mean, sd, n: scores.len() });
        }
    }
    out
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPublication {
    pub publication: CitationId,
    pub avg_score: f64,
    pub years_present: usize,
}

/// Top `k` publications by mean score over `window` (inclusive years),
/// requiring at least `min_years` defined scores. Ties go to the smaller
/// identifier text.
pub fn rank_by_avg(records: &[ChangeRecord], window: (i32, i32), min_years: usize, k: usize) -> Vec<RankedPublication> {
    let (start, end) = window;
    let mut sums: BTreeMap<String, (CitationId, f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| (start..=end).contains(&r.year_t)) {
        let slot = sums.entry(r.publication.to_string()).or_insert_with(|| (r.publication.clone(), 0.0, 0));
        slot.1 += r.score;
        slot.2 += 1;
    }
    let mut ranked: Vec<(String, RankedPublication)> = sums
        .into_iter()
        .filter(|(_, (_, _, n))| *n >= min_years.max(1))
        .map(|(key, (publication, sum, n))| {
            (key, RankedPublication { publication, avg_score: sum / n as f64, years_present: n })
        })
        .collect();
    ranked.sort_by(|a, b| b.1.avg_score.total_cmp(&a.1.avg_score).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(_, r)| r).collect()
}

/// Counts of scores in half-open bins `[i·w, (i+1)·w)`; only non-empty
/// bins are returned, in ascending order.
pub fn histogram(records: &[ChangeRecord], bin_width: f64) -> Vec<(f64, usize)> {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for r in records {
        *bins.entry(bin_index(r.score, bin_width)).or_default() += 1;
    }
    bins.into_iter().map(|(i, n)| (i as f64 * bin_width, n)).collect()
}

fn bin_index(x: f64, w: f64) -> i64 {
    let q = x / w;
    // 0.3 / 0.1 = 2.9999999999999996: snap quotients within rounding noise
    // of an edge onto it so decimal edges behave as written
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        q.floor() as i64
    }
}

/// `%g`-style rendering with six significant digits.
pub fn fmt_sig(x: f64) -> String {
    const SIG: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (SIG - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_sig)
}

pub fn write_scores_csv<W: Write>(records: &[ChangeRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "publication,year,score,citations_t,citations_prev")?;
    for r in records {
        writeln!(w, "{},{},{},{},{}", r.publication, r.year_t, fmt_sig(r.score), r.citations_t, r.citations_prev)?;
    }
    w.flush()
}

pub fn write_stats_csv<W: Write>(stats: &[GroupStat], mut w: W) -> io::Result<()> {
    writeln!(w, "year,threshold,mean,sd,n")?;
    for s in stats {
        writeln!(w, "{},{},{},{},{}", s.year, s.threshold, fmt_opt(s.mean), fmt_opt(s.sd), s.n)?;
    }
    w.flush()
}

pub fn write_ranking_csv<W: Write>(ranked: &[RankedPublication], mut w: W) -> io::Result<()> {
    writeln!(w, "rank,publication,avg_score,years_present")?;
    for (i, r) in ranked.iter().enumerate() {
        writeln!(w, "{},{},{},{}", i + 1, r.publication, fmt_sig(r.avg_score), r.years_present)?;
    }
    w.flush()
}

pub fn write_histogram_csv<W: Write>(bins: &[(f64, usize)], mut w: W) -> io::Result<()> {
    writeln!(w, "bin_lo,count")?;
    for (lo, n) in bins {
        writeln!(w, "{},{n}", fmt_sig(*lo))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: &str, year: i32, score: f64, cites: u64) -> ChangeRecord {
        ChangeRecord {
            publication: p.parse().unwrap(),
            year_t: year,
            score,
            citations_t: cites,
            citations_prev: cites,
        }
    }

    #[test]
    fn score_degenerate_cases() {
        let x = [0.3, -1.2, 2.0];
        assert!(score_vectors(&x, &x).unwrap().abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((score_vectors(&x, &neg).unwrap() - 2.0).abs() < 1e-12);
        let s = score_vectors(&[1.0, 0.0, 0.0], &[1.0, 1.0, 0.0]).unwrap();
        assert!((s - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(score_vectors(&[0.0, 0.0], &[1.0, 0.0]), None);
    }

    #[test]
    fn stats_mean_and_sample_sd() {
        let recs = [rec("1", 2010, 0.1, 30), rec("2", 2010, 0.2, 30), rec("3", 2010, 0.3, 30)];
        let s = yearly_stats(&recs, &[20], ThresholdMode::Strict);
        assert_eq!(s.len(), 1);
        assert!((s[0].mean.unwrap() - 0.2).abs() < 1e-12);
        assert!((s[0].sd.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(s[0].n, 3);
    }

    #[test]
    fn stats_degenerate_cells() {
        let recs = [rec("1", 2010, 0.4, 21), rec("2", 2010, 0.9, 20)];
        let s = yearly_stats(&recs, &[20, 50], ThresholdMode::Strict);
        assert_eq!(s[0], GroupStat { year: 2010, threshold: 20, mean: Some(0.4), sd: Some(0.0), n: 1 });
        assert_eq!(s[1], GroupStat { year: 2010, threshold: 50, mean: None, sd: None, n: 0 });
        let inclusive = yearly_stats(&recs, &[20], ThresholdMode::Inclusive);
        assert_eq!(inclusive[0].n, 2);
    }

    #[test]
    fn ranking() {
        let recs = [
            rec("5", 2012, 0.375, 1),
            rec("5", 2013, 0.125, 1),
            rec("7", 2013, 0.9, 1),
            rec("3", 2012, 0.25, 1),
            rec("3", 2014, 0.25, 1),
            rec("5", 2020, 1.0, 1),
        ];
        let r = rank_by_avg(&recs, (2012, 2016), 2, 10);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].publication.to_string(), "pmid:3");
        assert_eq!(r[0].avg_score, 0.25);
        assert_eq!(r[1].publication.to_string(), "pmid:5");
        assert_eq!(r[1].avg_score, 0.25);
        assert_eq!(r[1].years_present, 2);
        assert_eq!(rank_by_avg(&recs, (2012, 2016), 1, 1)[0].publication.to_string(), "pmid:7");
    }

    #[test]
    fn histogram_bins() {
        let recs = [rec("1", 1, 0.05, 1), rec("2", 1, 0.07, 1), rec("3", 1, 0.31, 1)];
        assert_eq!(histogram(&recs, 0.1), vec![(0.0, 2), (0.30000000000000004, 1)]);
        assert!(histogram(&[], 0.1).is_empty());
        // 0.3 sits on an edge and belongs to [0.3, 0.4)
        assert_eq!(histogram(&[rec("1", 1, 0.3, 1)], 0.1)[0].1, 1);
        assert_eq!(bin_index(0.3, 0.1), 3);
        assert_eq!(bin_index(0.7, 0.1), 7);
    }

    #[test]
    fn uniform_scores_fill_bins_evenly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let recs: Vec<ChangeRecord> = (0..1000).map(|i| rec(&(i + 1).to_string(), 1, rng.random::<f64>(), 1)).collect();
        let bins = histogram(&recs, 0.1);
        assert_eq!(bins.len(), 10);
        let sigma = (1000.0f64 * 0.1 * 0.9).sqrt();
        for (lo, n) in bins {
            assert!((n as f64 - 100.0).abs() <= 3.0 * sigma, "bin {lo}: {n}");
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.2), "0.2");
        assert_eq!(fmt_sig(0.292893218813), "0.292893");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(123456.7), "123457");
        assert_eq!(fmt_sig(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig(0.000012345678), "1.23457e-05");
        assert_eq!(fmt_sig(0.30000000000000004), "0.3");
        assert_eq!(fmt_sig(-0.5), "-0.5");
    }

    #[test]
    fn csv_headers() {
        let recs = [rec("1", 2010, 0.125, 30)];
        let mut buf = Vec::new();
        write_scores_csv(&recs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "publication,year,score,citations_t,citations_prev\npmid:1,2010,0.125,30,30\n");
        let mut buf = Vec::new();
        write_stats_csv(&yearly_stats(&recs, &[20, 50], ThresholdMode::Strict), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "year,threshold,mean,sd,n\n2010,20,0.125,0,1\n2010,50,NA,NA,0\n");
    }

    proptest::proptest! {
        #[test]
        fn score_is_bounded_symmetric_and_scale_invariant(
            x in proptest::collection::vec(-5.0f64..5.0, 4),
            y in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            proptest::prop_assume!(x.iter().any(|v| v.abs() > 1e-3) && y.iter().any(|v| v.abs() > 1e-3));
            let s = score_vectors(&x, &y).unwrap();
            proptest::prop_assert!((0.0..=2.0).contains(&s));
            proptest::prop_assert!((s - score_vectors(&y, &x).unwrap()).abs() < 1e-12);
            let scaled: Vec<f64> = x.iter().map(|v| v * 3.7).collect();
            proptest::prop_assert!((s - score_vectors(&scaled, &y).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn group_sizes_shrink_with_threshold(cites in proptest::collection::vec(0u64..200, 0..40)) {
            let recs: Vec<ChangeRecord> = cites.iter().enumerate().map(|(i, &c)| rec(&(i + 1).to_string(), 2010, 0.1, c)).collect();
            let s = yearly_stats(&recs, &[20, 50, 100], ThresholdMode::Strict);
            if !recs.is_empty() {
                proptest::prop_assert!(s[0].n >= s[1].n && s[1].n >= s[2].n);
            }
        }
    }
}
