use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use citedrift::change::{write_histogram_csv, write_ranking_csv, write_scores_csv, write_stats_csv};
use citedrift::format::{read_cemb, write_cemb, write_matrix};
use citedrift::preprocess::scan_acronyms;
use citedrift::query::{write_neighbors_tsv, write_report_tsv};
use citedrift::{
    align_series, build_vocab, compute_records, extract_citing_spans, histogram, nearest, parse_document, rank_by_avg,
    role_report, run_preprocess, train, yearly_stats, AlignedSeries, ChangeRecord, CitationId, CitingSpan,
    EmbeddingModel, PhraseDict, TokenKind,
};

use crate::config::PipelineConfig;
use crate::{Command, KindArg};

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) => e,
        }
    }
}

trait OrFail<T> {
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn data_err(msg: impl Into<String>) -> Failure {
    Failure::Data(anyhow!(msg.into()))
}

pub fn run(cfg: &PipelineConfig, cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Extract => extract(cfg),
        Command::Train { year } => train_year(cfg, year),
        Command::TrainAll => train_all(cfg),
        Command::Align => align(cfg),
        Command::Score => score(cfg),
        Command::Stats => stats(cfg),
        Command::Rank { from, to, top } => rank(cfg, from, to, top),
        Command::Hist { bin } => hist(cfg, bin),
        Command::Neighbors { token, year, k, kind, unaligned } => neighbors(cfg, &token, year, k, kind, unaligned),
        Command::Report { publication, from, to } => report(cfg, &publication, from, to),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display())).data()?;
    }
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display())).data()?;
    Ok(BufWriter::new(f))
}

/// Files in `dir` named `<year>.<ext>`, sorted by year.
fn yearly_files(dir: &Path, ext: &str) -> Result<Vec<(i32, PathBuf)>, Failure> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display())).data()? {
        let path = entry.data()?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        if let Some(year) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<i32>().ok()) {
            out.push((year, path));
        }
    }
    out.sort();
    Ok(out)
}

fn clear_yearly(dir: &Path, ext: &str) -> Result<(), Failure> {
    for (_, path) in yearly_files(dir, ext)? {
        fs::remove_file(&path).with_context(|| format!("cannot remove {}", path.display())).data()?;
    }
    Ok(())
}

fn extract(cfg: &PipelineConfig) -> Result<(), Failure> {
    let corpus = cfg.corpus_dir.as_ref().ok_or_else(|| usage("no corpus directory: set corpus_dir or pass --corpus"))?;
    if !corpus.is_dir() {
        return Err(usage(format!("corpus directory {} does not exist", corpus.display())));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(corpus).sort_by_file_name() {
        let entry = entry.with_context(|| format!("cannot read corpus directory {}", corpus.display())).data()?;
        let is_xml = entry.path().extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("xml"));
        if entry.file_type().is_file() && is_xml {
            files.push(entry.into_path());
        }
    }
    #[derive(Default)]
    struct YearStats {
        publications: usize,
        citing_publications: usize,
        spans: Vec<CitingSpan>,
    }
    let mut years: BTreeMap<i32, YearStats> = BTreeMap::new();
    let mut skipped = 0;
    for path in &files {
        let doc = match fs::read(path).map_err(anyhow::Error::from).and_then(|b| Ok(parse_document(&b)?)) {
            Ok(doc) => doc,
            Err(e) => {
                eprintln!("skipping {}: {e}", path.display());
                skipped += 1;
                continue;
            }
        };
        let spans = extract_citing_spans(&doc);
        let y = years.entry(doc.pub_year).or_default();
        y.publications += 1;
        if !spans.is_empty() {
            y.citing_publications += 1;
        }
        y.spans.extend(spans);
    }

    let dir = cfg.dir("spans");
    clear_yearly(&dir, "tsv")?;
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display())).data()?;
    println!("year\tpublications\tpublications_with_citations\tciting_spans");
    for (year, y) in &years {
        if !y.spans.is_empty() {
            let mut w = create(&dir.join(format!("{year}.tsv")))?;
            for s in &y.spans {
                writeln!(w, "{}", s.to_tsv_line()).data()?;
            }
            w.flush().data()?;
        }
        println!("{year}\t{}\t{}\t{}", y.publications, y.citing_publications, y.spans.len());
    }
    println!("skipped {skipped} file(s)");
    if years.is_empty() {
        return Err(data_err(format!("no readable documents under {}", corpus.display())));
    }
    Ok(())
}

fn read_spans(path: &Path) -> Result<Vec<CitingSpan>, Failure> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display())).data()?;
    let mut spans = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.data()?;
        if line.is_empty() {
            continue;
        }
        spans.push(CitingSpan::from_tsv_line(&line, i + 1).with_context(|| path.display().to_string()).data()?);
    }
    Ok(spans)
}

fn phrase_dict(cfg: &PipelineConfig) -> Result<PhraseDict, Failure> {
    match &cfg.phrase_dict {
        None => Ok(PhraseDict::new()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).data()?;
            Ok(PhraseDict::parse(&text))
        }
    }
}

fn train_year(cfg: &PipelineConfig, year: i32) -> Result<(), Failure> {
    let dict = phrase_dict(cfg)?;
    train_one(cfg, &dict, year)
}

fn train_one(cfg: &PipelineConfig, dict: &PhraseDict, year: i32) -> Result<(), Failure> {
    let span_path = cfg.dir("spans").join(format!("{year}.tsv"));
    if !span_path.is_file() {
        return Err(data_err(format!("no span file for {year} ({}); run `extract` first", span_path.display())));
    }
    let spans = read_spans(&span_path)?;
    let mut norm = cfg.norm.clone();
    if cfg.acronym_pass {
        norm.acronyms = Some(scan_acronyms(spans.iter().map(|s| s.text.as_str()), &norm));
    }
    let sentences = run_preprocess(spans.iter(), dict, &norm);

    let mut w = create(&cfg.dir("sentences").join(format!("{year}.txt")))?;
    for s in &sentences {
        writeln!(w, "{}", s.to_line()).data()?;
    }
    w.flush().data()?;

    let vocab = build_vocab(&sentences, cfg.min_count_word, cfg.min_count_citation)
        .with_context(|| format!("year {year}"))
        .data()?;
    let model = train(&sentences, &vocab, year, &cfg.train).with_context(|| format!("year {year}")).data()?;
    let path = cfg.dir("models").join(format!("{year}.cemb"));
    write_cemb(&model, create(&path)?).data()?;
    let citations = vocab.entries().iter().filter(|e| e.kind == TokenKind::Citation).count();
    println!(
        "{year}: {} sentences, {} words, {} citations -> {}",
        sentences.len(),
        vocab.len() - citations,
        citations,
        path.display()
    );
    Ok(())
}

fn train_all(cfg: &PipelineConfig) -> Result<(), Failure> {
    let years = yearly_files(&cfg.dir("spans"), "tsv")?;
    if years.is_empty() {
        return Err(data_err("no span files; run `extract` first"));
    }
    let dict = phrase_dict(cfg)?;
    for (year, _) in years {
        train_one(cfg, &dict, year)?;
    }
    Ok(())
}

fn load_models(dir: &Path) -> Result<Vec<EmbeddingModel>, Failure> {
    yearly_files(dir, "cemb")?
        .into_iter()
        .map(|(year, path)| {
            let f = File::open(&path).with_context(|| format!("cannot open {}", path.display())).data()?;
            let model = read_cemb(BufReader::new(f)).with_context(|| path.display().to_string()).data()?;
            if model.period != year {
                return Err(data_err(format!("{} holds period {}", path.display(), model.period)));
            }
            Ok(model)
        })
        .collect()
}

fn align(cfg: &PipelineConfig) -> Result<(), Failure> {
    let models = load_models(&cfg.dir("models"))?;
    if models.len() < 2 {
        return Err(data_err(format!("need models for at least two years, found {}", models.len())));
    }
    let series = align_series(models, &cfg.align).data()?;
    let dir = cfg.dir("aligned");
    clear_yearly(&dir, "cemb")?;
    for (model, step) in series.models.iter().zip(&series.steps) {
        write_cemb(model, create(&dir.join(format!("{}.cemb", model.period)))?).data()?;
        write_matrix(&step.rotation.matrix, create(&dir.join(format!("R_{}.txt", model.period)))?).data()?;
        println!(
            "{} -> frame {}{}",
            model.period,
            series.frame(),
            if step.rotation.rank_deficient { " (rank-deficient fit)" } else { "" }
        );
    }
    Ok(())
}

fn load_series(cfg: &PipelineConfig) -> Result<AlignedSeries, Failure> {
    let models = load_models(&cfg.dir("aligned"))?;
    if models.is_empty() {
        return Err(data_err("no aligned models; run `align` first"));
    }
    AlignedSeries::from_aligned(models).data()
}

fn records(cfg: &PipelineConfig, series: &AlignedSeries) -> Vec<ChangeRecord> {
    compute_records(series, cfg.count_mode)
}

/// Writes `path` and echoes it to stdout.
fn emit(path: &Path, write: impl Fn(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let mut w = create(path)?;
    write(&mut w).data()?;
    w.flush().data()?;
    let stdout = io::stdout();
    write(&mut stdout.lock()).data()
}

fn score(cfg: &PipelineConfig) -> Result<(), Failure> {
    let series = load_series(cfg)?;
    let recs = records(cfg, &series);
    let path = cfg.dir("results").join("scores.csv");
    write_scores_csv(&recs, create(&path)?).data()?;
    println!("{} scores -> {}", recs.len(), path.display());
    Ok(())
}

fn stats(cfg: &PipelineConfig) -> Result<(), Failure> {
    let series = load_series(cfg)?;
    let stats = yearly_stats(&records(cfg, &series), &cfg.thresholds, cfg.threshold_mode);
    emit(&cfg.dir("results").join("stats.csv"), |w| write_stats_csv(&stats, w))
}

fn rank(cfg: &PipelineConfig, from: i32, to: i32, top: usize) -> Result<(), Failure> {
    if from > to {
        return Err(usage(format!("--from {from} is after --to {to}")));
    }
    let series = load_series(cfg)?;
    let ranked = rank_by_avg(&records(cfg, &series), (from, to), cfg.min_years, top);
    emit(&cfg.dir("results").join("ranking.csv"), |w| write_ranking_csv(&ranked, w))
}

fn hist(cfg: &PipelineConfig, bin: f64) -> Result<(), Failure> {
    if !(bin.is_finite() && bin > 0.0) {
        return Err(usage(format!("--bin must be positive, got {bin}")));
    }
    let series = load_series(cfg)?;
    let bins = histogram(&records(cfg, &series), bin);
    emit(&cfg.dir("results").join("histogram.csv"), |w| write_histogram_csv(&bins, w))
}

/// Accepts a vocabulary surface as-is, or a publication identifier
/// (`pmid:123`, `CITE:pmid:123`, bare digits).
fn resolve_token(model: &EmbeddingModel, token: &str) -> Option<String> {
    if model.vocab.id(token).is_some() {
        return Some(token.to_string());
    }
    let surface = token.parse::<CitationId>().ok()?.token_surface();
    model.vocab.id(&surface).map(|_| surface)
}

fn neighbors(
    cfg: &PipelineConfig,
    token: &str,
    year: i32,
    k: usize,
    kind: Option<KindArg>,
    unaligned: bool,
) -> Result<(), Failure> {
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let aligned = cfg.dir("aligned").join(format!("{year}.cemb"));
    let path = if unaligned || !aligned.is_file() { cfg.dir("models").join(format!("{year}.cemb")) } else { aligned };
    if !path.is_file() {
        return Err(data_err(format!("no model for {year} ({})", path.display())));
    }
    let f = File::open(&path).with_context(|| format!("cannot open {}", path.display())).data()?;
    let model = read_cemb(BufReader::new(f)).with_context(|| path.display().to_string()).data()?;
    let surface = resolve_token(&model, token).ok_or_else(|| data_err(format!("token `{token}` is not in the {year} vocabulary")))?;
    let kind = kind.map(|k| match k {
        KindArg::Word => TokenKind::Word,
        KindArg::Citation => TokenKind::Citation,
    });
    let hits = nearest(&model, &surface, k, kind).data()?;
    write_neighbors_tsv(&hits, io::stdout().lock()).data()
}

fn report(cfg: &PipelineConfig, publication: &str, from: i32, to: i32) -> Result<(), Failure> {
    let p: CitationId = publication.parse().map_err(|e| Failure::Usage(anyhow!("--pub: {e}")))?;
    if from > to {
        return Err(usage(format!("--from {from} is after --to {to}")));
    }
    let series = load_series(cfg)?;
    let surface = p.token_surface();
    if series.models.iter().all(|m| m.vocab.id(&surface).is_none()) {
        return Err(data_err(format!("publication {p} is not in any period's vocabulary")));
    }
    let report = role_report(&series, &records(cfg, &series), &p, (from, to), cfg.n_words);
    let name = format!("report_{}_{}.tsv", p.kind().tag(), p.value());
    emit(&cfg.dir("results").join(name), |w| write_report_tsv(&report, w))
}
