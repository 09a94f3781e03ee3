//! Flat `key = value` pipeline configuration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use citedrift::preprocess::{parse_bool, NormConfig};
use citedrift::{AlignOptions, CountMode, ThresholdMode, TrainConfig};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus_dir: Option<PathBuf>,
    pub workdir: PathBuf,
    pub phrase_dict: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub norm: NormConfig,
    /// Run the corpus pass that keeps recurring all-caps acronyms.
    pub acronym_pass: bool,
    pub train: TrainConfig,
    pub min_count_word: u64,
    pub min_count_citation: u64,
    pub align: AlignOptions,
    pub thresholds: Vec<u64>,
    pub threshold_mode: ThresholdMode,
    pub count_mode: CountMode,
    pub min_years: usize,
    pub n_words: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus_dir: None,
            workdir: PathBuf::from("work"),
            phrase_dict: None,
            abbreviations: None,
            norm: NormConfig::default(),
            acronym_pass: false,
            train: TrainConfig::default(),
            min_count_word: 5,
            min_count_citation: 1,
            align: AlignOptions::default(),
            thresholds: vec![20, 50, 100],
            threshold_mode: ThresholdMode::Strict,
            count_mode: CountMode::WithinYear,
            min_years: 1,
            n_words: 8,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| anyhow::anyhow!("key `{key}`: cannot parse `{value}`: {e}"))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    parse_bool(value).with_context(|| format!("key `{key}`: expected true/false, got `{value}`"))
}

impl PipelineConfig {
    /// Sets one key. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('-', "_");
        let v = value.trim();
        match k.as_str() {
            "corpus_dir" | "corpus" => self.corpus_dir = Some(PathBuf::from(v)),
            "workdir" => self.workdir = PathBuf::from(v),
            "phrase_dict" => self.phrase_dict = Some(PathBuf::from(v)),
            "abbreviations" => self.abbreviations = Some(PathBuf::from(v)),
            "acronym_pass" => self.acronym_pass = boolean(&k, v)?,
            "dim" => self.train.dim = num(&k, v)?,
            "window" => self.train.window = num(&k, v)?,
            "negatives" => self.train.negatives = num(&k, v)?,
            "epochs" => self.train.epochs = num(&k, v)?,
            "lr_start" => self.train.lr_start = num(&k, v)?,
            "lr_end" => self.train.lr_end = num(&k, v)?,
            "subsample_t" => self.train.subsample_t = num(&k, v)?,
            "seed" => self.train.seed = num(&k, v)?,
            "workers" => self.train.workers = num(&k, v)?,
            "min_count_word" => self.min_count_word = num(&k, v)?,
            "min_count_citation" => self.min_count_citation = num(&k, v)?,
            "centering" => self.align.centering = boolean(&k, v)?,
            "anchor_min_count" => self.align.anchor_min_count = num(&k, v)?,
            "thresholds" => {
                self.thresholds = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(&k, s))
                    .collect::<Result<_>>()?
            }
            "threshold_mode" => {
                self.threshold_mode = match v {
                    "strict" => ThresholdMode::Strict,
                    "inclusive" => ThresholdMode::Inclusive,
                    _ => bail!("key `{k}`: expected strict or inclusive, got `{v}`"),
                }
            }
            "count_mode" => {
                self.count_mode = match v {
                    "within" => CountMode::WithinYear,
                    "cumulative" => CountMode::Cumulative,
                    _ => bail!("key `{k}`: expected within or cumulative, got `{v}`"),
                }
            }
            "min_years" => self.min_years = num(&k, v)?,
            "n_words" => self.n_words = num(&k, v)?,
            _ => {
                if !self.norm.set(&k, v)? {
                    bail!("unknown configuration key `{key}`");
                }
            }
        }
        Ok(())
    }

    pub fn apply_str(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("{origin}:{}: expected key=value", i + 1))?;
            self.set(k, v).with_context(|| format!("{origin}:{}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        self.apply_str(&text, &path.display().to_string())
    }

    /// Checks values and loads the files the configuration points at.
    pub fn finish(&mut self) -> Result<()> {
        self.train.validate()?;
        if self.min_count_word == 0 || self.min_count_citation == 0 {
            bail!("minimum counts must be at least 1");
        }
        if let Some(p) = &self.abbreviations {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read abbreviations {}", p.display()))?;
            self.norm.load_abbreviations(&text);
        }
        if let Some(p) = &self.phrase_dict {
            if !p.is_file() {
                bail!("phrase dictionary {} does not exist", p.display());
            }
        }
        Ok(())
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.workdir.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_and_values() {
        let mut c = PipelineConfig::default();
        c.apply_str("# run\ndim = 50\nmin-count-word=2\nthresholds=5,10\nurl_replace=false\ncount_mode=cumulative\n", "t")
            .unwrap();
        assert_eq!(c.train.dim, 50);
        assert_eq!(c.min_count_word, 2);
        assert_eq!(c.thresholds, [5, 10]);
        assert!(!c.norm.url_replace);
        assert_eq!(c.count_mode, CountMode::Cumulative);
        assert!(c.apply_str("bogus=1", "t").is_err());
        assert!(c.apply_str("dim=abc", "t").is_err());
        assert!(c.apply_str("no equals sign", "t").is_err());
    }
}
