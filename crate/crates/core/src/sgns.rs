//! Skip-gram with negative sampling over the joint word/citation stream.
//!
//! For a centre token `w_i` and each context token `w_j` within a dynamic
//! window of `w_i`, one SGD step is taken on
//!
//! ```text
//! loss = -[ log σ(c·x) + Σ_k log σ(-c·n_k) ]
//! ```
//!
//! where `c` is the centre's input vector, `x` the context's output vector
//! and `n_k` the output vectors of words drawn from the negative table.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::preprocess::Token;
use crate::vocab::{NegativeTable, VocabError, Vocabulary};

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("corpus has no in-vocabulary tokens")]
    EmptyCorpus,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub subsample_t: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lr_end: 1e-4,
            subsample_t: 1e-4,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be >= 1");
        }
        if !(self.lr_start > self.lr_end && self.lr_end > 0.0) {
            return bad("need lr_start > lr_end > 0");
        }
        if self.subsample_t.is_nan() || self.subsample_t <= 0.0 {
            return bad("subsample_t must be > 0");
        }
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        Ok(())
    }
}

/// Row-major `rows × dim` table of `f32` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    data: Vec<f32>,
}

impl VectorTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self { dim, data: vec![0.0; rows * dim] }
    }

    pub fn from_vec(dim: usize, data: Vec<f32>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "buffer is not a whole number of rows");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| v as f64).collect()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// One period's embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub period: i32,
    pub vocab: Vocabulary,
    /// Published vectors, one row per vocabulary id.
    pub input_vectors: VectorTable,
    /// Context vectors; only present right after training.
    pub output_vectors: Option<VectorTable>,
    /// Set once the vectors have been rotated into another period's frame.
    pub aligned_frame: Option<i32>,
}

impl EmbeddingModel {
    pub fn dim(&self) -> usize {
        self.input_vectors.dim()
    }

    pub fn vector(&self, surface: &str) -> Option<&[f32]> {
        self.vocab.id(surface).map(|i| self.input_vectors.row(i))
    }
}

/// Logistic function with the argument clamped to ±30.
pub fn sigmoid<T: Float>(x: T) -> T {
    let limit = T::from(30.0).unwrap();
    let tiny = T::from(1e-13).unwrap();
    if x > limit {
        T::one() - tiny
    } else if x < -limit {
        tiny
    } else {
        T::one() / (T::one() + (-x).exp())
    }
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Computes the pair loss and the scalar coefficients of its gradients:
/// `∂/∂x = a·c`, `∂/∂n_k = b_k·c`, `∂/∂c = a·x + Σ b_k·n_k`.
///
/// Returns `(a, loss)` and writes `b_k` into `neg_coefs`.
fn pair_coefficients<T: Float>(center: &[T], context: &[T], negatives: &[T], neg_coefs: &mut [T]) -> (T, T) {
    let d = center.len();
    let s = sigmoid(dot(center, context));
    let mut loss = -s.ln();
    for (n, b) in negatives.chunks_exact(d.max(1)).zip(neg_coefs.iter_mut()) {
        let z = dot(center, n);
        loss = loss - sigmoid(-z).ln();
        *b = sigmoid(z);
    }
    (s - T::one(), loss)
}

fn check_shapes<T>(center: &[T], context: &[T], negatives: &[T]) {
    let d = center.len();
    assert_eq!(context.len(), d, "context length differs from centre length");
    assert!((d == 0 && negatives.is_empty()) || (d > 0 && negatives.len().is_multiple_of(d)), "negatives must be k×d");
}

/// `-[log σ(c·x) + Σ_k log σ(-c·n_k)]`; `negatives` is a row-major k×d matrix.
pub fn pair_loss<T: Float>(center: &[T], context: &[T], negatives: &[T]) -> T {
    check_shapes(center, context, negatives);
    let k = if center.is_empty() { 0 } else { negatives.len() / center.len() };
    let mut coefs = vec![T::zero(); k];
    pair_coefficients(center, context, negatives, &mut coefs).1
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradients<T> {
    pub center: Vec<T>,
    pub context: Vec<T>,
    /// Row-major k×d.
    pub negatives: Vec<T>,
}

/// Analytic gradients of [`pair_loss`] with respect to every argument.
pub fn pair_gradients<T: Float>(center: &[T], context: &[T], negatives: &[T]) -> PairGradients<T> {
    check_shapes(center, context, negatives);
    let d = center.len();
    let k = negatives.len().checked_div(d).unwrap_or(0);
    let mut coefs = vec![T::zero(); k];
    let (a, _) = pair_coefficients(center, context, negatives, &mut coefs);
    let context_grad = center.iter().map(|&c| a * c).collect();
    let mut center_grad: Vec<T> = context.iter().map(|&x| a * x).collect();
    let mut neg_grad = Vec::with_capacity(negatives.len());
    for (n, &b) in negatives.chunks_exact(d.max(1)).zip(&coefs) {
        neg_grad.extend(center.iter().map(|&c| b * c));
        for (g, &v) in center_grad.iter_mut().zip(n) {
            *g = *g + b * v;
        }
    }
    PairGradients { center: center_grad, context: context_grad, negatives: neg_grad }
}

/// Matrix shared between training workers. Cells are `f32` bit patterns in
/// relaxed atomics: updates from different workers may interleave and lose
/// writes, which is the accepted Hogwild contract.
struct SharedMatrix {
    dim: usize,
    cells: Vec<AtomicU32>,
}

impl SharedMatrix {
    fn from_table(t: &VectorTable) -> Self {
        Self { dim: t.dim, cells: t.data.iter().map(|v| AtomicU32::new(v.to_bits())).collect() }
    }

    fn load(&self, row: usize, out: &mut [f32]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f32::from_bits(c.load(Ordering::Relaxed));
        }
    }

    /// `row += scale * delta`
    fn add_scaled(&self, row: usize, delta: &[f32], scale: f32) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (c, &d) in cells.iter().zip(delta) {
            let v = f32::from_bits(c.load(Ordering::Relaxed)) + scale * d;
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn into_table(self) -> VectorTable {
        let data = self.cells.into_iter().map(|c| f32::from_bits(c.into_inner())).collect();
        VectorTable { dim: self.dim, data }
    }
}

/// Per-epoch diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean pair loss of each epoch, measured before each update.
    pub epoch_loss: Vec<f64>,
    pub pairs: u64,
}

const MAX_NEGATIVE_REDRAWS: usize = 10;

pub fn train<S: AsRef<[Token]> + Sync>(
    sentences: &[S],
    vocab: &Vocabulary,
    period: i32,
    cfg: &TrainConfig,
) -> Result<EmbeddingModel, TrainError> {
    train_with_report(sentences, vocab, period, cfg).map(|(m, _)| m)
}

/// Trains one period's model.
///
/// With `workers == 1` the result is a pure function of the inputs and the
/// seed. With more workers, sentences are sharded round-robin and trained
/// concurrently against shared matrices without locking.
pub fn train_with_report<S: AsRef<[Token]> + Sync>(
    sentences: &[S],
    vocab: &Vocabulary,
    period: i32,
    cfg: &TrainConfig,
) -> Result<(EmbeddingModel, TrainReport), TrainError> {
    cfg.validate()?;
    let encoded: Vec<Vec<u32>> = sentences
        .iter()
        .map(|s| s.as_ref().iter().filter_map(|t| vocab.id(&t.surface)).map(|i| i as u32).collect())
        .collect();
    let positions_per_epoch: u64 = encoded.iter().map(|s| s.len() as u64).sum();
    if positions_per_epoch == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let table = NegativeTable::new(vocab)?;

    let d = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut input = VectorTable::zeros(vocab.len(), d);
    for v in &mut input.data {
        *v = (rng.random::<f32>() - 0.5) / d as f32;
    }
    let output = VectorTable::zeros(vocab.len(), d);
    if cfg.epochs == 0 {
        let model = EmbeddingModel { period, vocab: vocab.clone(), input_vectors: input, output_vectors: Some(output), aligned_frame: None };
        return Ok((model, TrainReport::default()));
    }

    let keep: Vec<f64> = (0..vocab.len()).map(|i| vocab.keep_probability(i, cfg.subsample_t)).collect();
    let shared_in = SharedMatrix::from_table(&input);
    let shared_out = SharedMatrix::from_table(&output);
    let job = Job {
        cfg,
        encoded: &encoded,
        keep: &keep,
        table: &table,
        input: &shared_in,
        output: &shared_out,
        processed: AtomicU64::new(0),
        total_positions: positions_per_epoch * cfg.epochs as u64,
    };

    let stats: Vec<WorkerStats> = if cfg.workers == 1 {
        vec![job.run_worker(0, rng)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.workers)
                .map(|w| {
                    let worker_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(w as u64 + 1)));
                    let job = &job;
                    scope.spawn(move || job.run_worker(w, worker_rng))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
        })
    };

    let mut report = TrainReport { epoch_loss: vec![0.0; cfg.epochs], pairs: 0 };
    for e in 0..cfg.epochs {
        let (sum, n) = stats.iter().fold((0.0, 0u64), |(s, n), w| (s + w.loss[e], n + w.pairs[e]));
        report.epoch_loss[e] = if n == 0 { 0.0 } else { sum / n as f64 };
        report.pairs += n;
    }
    let model = EmbeddingModel {
        period,
        vocab: vocab.clone(),
        input_vectors: shared_in.into_table(),
        output_vectors: Some(shared_out.into_table()),
        aligned_frame: None,
    };
    Ok((model, report))
}

struct Job<'a> {
    cfg: &'a TrainConfig,
    encoded: &'a [Vec<u32>],
    keep: &'a [f64],
    table: &'a NegativeTable,
    input: &'a SharedMatrix,
    output: &'a SharedMatrix,
    processed: AtomicU64,
    total_positions: u64,
}

struct WorkerStats {
    loss: Vec<f64>,
    pairs: Vec<u64>,
}

impl Job<'_> {
    fn learning_rate(&self) -> f32 {
        let done = self.processed.load(Ordering::Relaxed).min(self.total_positions) as f64;
        let frac = done / self.total_positions as f64;
        (self.cfg.lr_start - (self.cfg.lr_start - self.cfg.lr_end) * frac) as f32
    }

    fn run_worker(&self, worker: usize, mut rng: ChaCha8Rng) -> WorkerStats {
        let cfg = self.cfg;
        let d = cfg.dim;
        let mut stats = WorkerStats { loss: vec![0.0; cfg.epochs], pairs: vec![0; cfg.epochs] };
        let mut center = vec![0f32; d];
        let mut context = vec![0f32; d];
        let mut negs = vec![0f32; cfg.negatives * d];
        let mut neg_ids = Vec::with_capacity(cfg.negatives);
        let mut coefs = vec![0f32; cfg.negatives];
        let mut center_grad = vec![0f32; d];
        let mut kept: Vec<u32> = Vec::new();

        for epoch in 0..cfg.epochs {
            for sentence in self.encoded.iter().skip(worker).step_by(cfg.workers) {
                let lr = self.learning_rate();
                kept.clear();
                for &id in sentence {
                    let p = self.keep[id as usize];
                    if p >= 1.0 || rng.random::<f64>() < p {
                        kept.push(id);
                    }
                }
                for i in 0..kept.len() {
                    let b = rng.random_range(1..=cfg.window);
                    let lo = i.saturating_sub(b);
                    let hi = (i + b).min(kept.len() - 1);
                    let c_id = kept[i] as usize;
                    for (j, &ctx) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                        if j == i {
                            continue;
                        }
                        let x_id = ctx as usize;
                        neg_ids.clear();
                        for _ in 0..cfg.negatives {
                            for _ in 0..=MAX_NEGATIVE_REDRAWS {
                                let n = self.table.sample(rng.random::<f64>());
                                if n != x_id {
                                    neg_ids.push(n);
                                    break;
                                }
                            }
                        }
                        let k = neg_ids.len();
                        self.input.load(c_id, &mut center);
                        self.output.load(x_id, &mut context);
                        for (slot, &n) in neg_ids.iter().enumerate() {
                            self.output.load(n, &mut negs[slot * d..(slot + 1) * d]);
                        }
                        let (a, loss) = pair_coefficients(&center, &context, &negs[..k * d], &mut coefs[..k]);
                        stats.loss[epoch] += loss as f64;
                        stats.pairs[epoch] += 1;

                        for (g, &x) in center_grad.iter_mut().zip(&context) {
                            *g = a * x;
                        }
                        for (slot, &bk) in coefs[..k].iter().enumerate() {
                            for (g, &v) in center_grad.iter_mut().zip(&negs[slot * d..(slot + 1) * d]) {
                                *g += bk * v;
                            }
                        }
                        self.output.add_scaled(x_id, &center, -lr * a);
                        for (&n, &bk) in neg_ids.iter().zip(&coefs[..k]) {
                            self.output.add_scaled(n, &center, -lr * bk);
                        }
                        self.input.add_scaled(c_id, &center_grad, -lr);
                    }
                }
                self.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
            }
        }
        stats
    }
}
