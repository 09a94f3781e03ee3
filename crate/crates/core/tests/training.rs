use citedrift::sgns::train_with_report;
use citedrift::synthetic::{cluster_words, drift_period, DriftCorpusConfig, SyntheticSentence};
use citedrift::{build_vocab, train, Token, TrainConfig};
use citedrift::linalg::cosine;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(n: usize, seed: u64) -> Vec<Vec<Token>> {
    let cfg = DriftCorpusConfig { sentences_per_period: n, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    drift_period(&cfg, false, &mut rng).iter().map(SyntheticSentence::tokens).collect()
}

#[test]
fn clusters_separate_for_nearly_all_seeds() {
    let a = cluster_words(0, 50);
    let b = cluster_words(1, 50);
    let mut ok = 0;
    for seed in 0..20 {
        let sents = corpus(2000, 100 + seed);
        let v = build_vocab(&sents, 5, 1).unwrap();
        let cfg = TrainConfig { dim: 50, seed, subsample_t: 1e-3, ..TrainConfig::default() };
        let m = train(&sents, &v, 2000, &cfg).unwrap();
        let vec = |w: &str| m.input_vectors.row_f64(v.id(w).unwrap());
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for (i, x) in a.iter().chain(&b).enumerate() {
            for (j, y) in a.iter().chain(&b).enumerate().skip(i + 1) {
                let c = cosine(&vec(x), &vec(y));
                if (i < 50) == (j < 50) {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        if intra / ni as f64 > inter / nx as f64 {
            ok += 1;
        }
    }
    assert!(ok >= 19, "{ok} of 20 seeds separated the clusters");
}

#[test]
fn epoch_loss_decreases() {
    for seed in 0..10 {
        let sents = corpus(200, seed);
        let v = build_vocab(&sents, 1, 1).unwrap();
        let cfg = TrainConfig { dim: 20, seed, ..TrainConfig::default() };
        let (m, report) = train_with_report(&sents, &v, 2000, &cfg).unwrap();
        assert!(report.epoch_loss[4] < report.epoch_loss[0], "seed {seed}: {:?}", report.epoch_loss);
        let data = m.input_vectors.as_slice();
        assert!(data.iter().all(|x| x.is_finite() && x.abs() < 100.0));
    }
}
