use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::PipelineConfig;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  usage or configuration error (bad flag, unknown key, missing config path)
  2  data error (unparseable input, missing intermediate file, empty corpus,
     non-consecutive or disjoint periods, unknown token or publication)";

#[derive(Parser, Debug)]
#[command(name = "citedrift", version, about = "Track how the citing context of publications changes over time", after_help = EXIT_CODES)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Every configuration key can also be given as a flag; flags win over the
/// config file.
#[derive(Args, Debug, Default)]
struct GlobalArgs {
    /// Flat key=value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    workdir: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_name = "PATH")]
    phrase_dict: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    abbreviations: Option<PathBuf>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    negatives: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr_start: Option<f64>,
    #[arg(long, global = true)]
    lr_end: Option<f64>,
    #[arg(long, global = true)]
    subsample_t: Option<f64>,
    #[arg(long, global = true)]
    min_count_word: Option<u64>,
    #[arg(long, global = true)]
    min_count_citation: Option<u64>,
    #[arg(long, global = true, value_name = "BOOL")]
    centering: Option<String>,
    #[arg(long, global = true)]
    anchor_min_count: Option<u64>,
    /// Comma-separated citation thresholds for `stats`
    #[arg(long, global = true, value_name = "LIST")]
    thresholds: Option<String>,
    /// strict (>) or inclusive (>=)
    #[arg(long, global = true)]
    threshold_mode: Option<String>,
    /// within or cumulative
    #[arg(long, global = true)]
    count_mode: Option<String>,
    #[arg(long, global = true)]
    min_years: Option<usize>,
    #[arg(long, global = true)]
    n_words: Option<usize>,
    #[arg(long, global = true, value_name = "BOOL")]
    acronym_pass: Option<String>,
    #[arg(long, global = true, value_name = "BOOL")]
    url_replace: Option<String>,
    #[arg(long, global = true, value_name = "BOOL")]
    dash_removal: Option<String>,
    #[arg(long, global = true, value_name = "BOOL")]
    number_replace: Option<String>,
    #[arg(long, global = true, value_name = "BOOL")]
    lowercase: Option<String>,
    #[arg(long, global = true, value_name = "BOOL")]
    phrase_merge: Option<String>,
}

impl GlobalArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        fn put<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
            if let Some(v) = v {
                out.push((key, v.to_string()));
            }
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut out = Vec::new();
        put(&mut out, "workdir", &path(&self.workdir));
        put(&mut out, "corpus_dir", &path(&self.corpus));
        put(&mut out, "phrase_dict", &path(&self.phrase_dict));
        put(&mut out, "abbreviations", &path(&self.abbreviations));
        put(&mut out, "seed", &self.seed);
        put(&mut out, "workers", &self.workers);
        put(&mut out, "dim", &self.dim);
        put(&mut out, "window", &self.window);
        put(&mut out, "negatives", &self.negatives);
        put(&mut out, "epochs", &self.epochs);
        put(&mut out, "lr_start", &self.lr_start);
        put(&mut out, "lr_end", &self.lr_end);
        put(&mut out, "subsample_t", &self.subsample_t);
        put(&mut out, "min_count_word", &self.min_count_word);
        put(&mut out, "min_count_citation", &self.min_count_citation);
        put(&mut out, "centering", &self.centering);
        put(&mut out, "anchor_min_count", &self.anchor_min_count);
        put(&mut out, "thresholds", &self.thresholds);
        put(&mut out, "threshold_mode", &self.threshold_mode);
        put(&mut out, "count_mode", &self.count_mode);
        put(&mut out, "min_years", &self.min_years);
        put(&mut out, "n_words", &self.n_words);
        put(&mut out, "acronym_pass", &self.acronym_pass);
        put(&mut out, "url_replace", &self.url_replace);
        put(&mut out, "dash_removal", &self.dash_removal);
        put(&mut out, "number_replace", &self.number_replace);
        put(&mut out, "lowercase", &self.lowercase);
        put(&mut out, "phrase_merge", &self.phrase_merge);
        out
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the XML corpus into per-year citing spans (spans/<year>.tsv)
    Extract,
    /// Preprocess one year and train its model (models/<year>.cemb)
    Train {
        #[arg(long)]
        year: i32,
    },
    /// Train every year that has a span file
    TrainAll,
    /// Align all models into the latest year's frame (aligned/)
    Align,
    /// Change scores between consecutive years (results/scores.csv)
    Score,
    /// Mean, SD and N per year and citation threshold (results/stats.csv)
    Stats,
    /// Top publications by average change score (results/ranking.csv)
    Rank {
        #[arg(long)]
        from: i32,
        #[arg(long)]
        to: i32,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Score histogram (results/histogram.csv)
    Hist {
        #[arg(long, default_value_t = 0.01)]
        bin: f64,
    },
    /// Nearest neighbours of a token in one year
    Neighbors {
        #[arg(long)]
        token: String,
        #[arg(long)]
        year: i32,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Query the unaligned model instead of the aligned one
        #[arg(long)]
        unaligned: bool,
    },
    /// Per-year role report of one publication (results/report_<id>.tsv)
    Report {
        #[arg(long = "pub", value_name = "ID")]
        publication: String,
        #[arg(long)]
        from: i32,
        #[arg(long)]
        to: i32,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    Word,
    Citation,
}

fn load_config(global: &GlobalArgs) -> anyhow::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &global.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in global.overrides() {
        cfg.set(k, &v).map_err(|e| e.context(format!("flag --{}", k.replace('_', "-"))))?;
    }
    cfg.finish()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match load_config(&cli.global) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match commands::run(&cfg, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
