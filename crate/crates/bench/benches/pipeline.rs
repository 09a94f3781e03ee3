use std::hint::black_box;

use citedrift::align::procrustes;
use citedrift::linalg::{svd_jacobi, Matrix};
use citedrift::synthetic::{drift_period, DriftCorpusConfig, SyntheticSentence};
use citedrift::{build_vocab, nearest, train, Token, TrainConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sentences(n: usize) -> Vec<Vec<Token>> {
    let cfg = DriftCorpusConfig { sentences_per_period: n, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    drift_period(&cfg, false, &mut rng).iter().map(SyntheticSentence::tokens).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn bench_train(c: &mut Criterion) {
    let sents = sentences(2000);
    let vocab = build_vocab(&sents, 5, 1).unwrap();
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for workers in [1, 4] {
        let cfg = TrainConfig { dim: 50, epochs: 1, subsample_t: 1e-3, workers, ..TrainConfig::default() };
        group.bench_with_input(BenchmarkId::new("2000_sentences_d50", workers), &cfg, |b, cfg| {
            b.iter(|| train(black_box(&sents), &vocab, 2000, cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_procrustes(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("procrustes");
    for d in [10, 50, 100] {
        let s = random_matrix(&mut rng, 5 * d, d);
        let t = random_matrix(&mut rng, 5 * d, d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| procrustes(black_box(&s), black_box(&t)).unwrap())
        });
    }
    let a = random_matrix(&mut rng, 100, 100);
    group.bench_function("svd_jacobi_100", |b| b.iter(|| svd_jacobi(black_box(&a))));
    group.finish();
}

fn bench_nearest(c: &mut Criterion) {
    let sents = sentences(2000);
    let vocab = build_vocab(&sents, 1, 1).unwrap();
    let cfg = TrainConfig { dim: 50, epochs: 1, ..TrainConfig::default() };
    let model = train(&sents, &vocab, 2000, &cfg).unwrap();
    let token = model.vocab.entry(0).surface.clone();
    c.bench_function("nearest_k10", |b| b.iter(|| nearest(&model, black_box(&token), 10, None).unwrap()));
}

criterion_group!(benches, bench_train, bench_procrustes, bench_nearest);
criterion_main!(benches);
