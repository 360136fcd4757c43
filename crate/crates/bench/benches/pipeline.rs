//! Benchmarks for the pipeline's hot paths: indicator assembly, the SVM
//! dual solver, one autoencoder pretraining epoch, and the drawdown scan.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dircast_core::experiment::gen_synthetic;
use dircast_core::features::assemble;
use dircast_core::indicators::catalog;
use dircast_core::nn::TrainConfig;
use dircast_core::sdae::{pretrain_layer, DenoisingAutoencoder};
use dircast_core::svm::solve_dual;
use dircast_core::FeatureMatrix;

fn features_fixture(days: usize) -> FeatureMatrix {
    let series = gen_synthetic(days, 3, 0.8).expect("synthetic series");
    assemble(&series, &catalog()).expect("feature matrix")
}

fn bench_indicators(c: &mut Criterion) {
    let series = gen_synthetic(2289, 3, 0.8).expect("synthetic series");
    let specs = catalog();
    c.bench_function("indicators/assemble_2289_bars", |b| {
        b.iter(|| assemble(black_box(&series), black_box(&specs)).unwrap())
    });
}

fn bench_smo(c: &mut Criterion) {
    let features = features_fixture(500);
    let n = 300.min(features.n_rows());
    let x: Vec<Vec<f64>> = (0..n).map(|i| features.row(i).to_vec()).collect();
    let y: Vec<f64> = features.labels_pm1()[..n].to_vec();
    let mut group = c.benchmark_group("svm");
    group.sample_size(20);
    group.bench_function("solve_dual_300_rows", |b| {
        b.iter(|| {
            solve_dual(
                black_box(&x),
                black_box(&y),
                black_box(10.0),
                black_box(2.0),
                1e-3,
                100,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_pretrain_epoch(c: &mut Criterion) {
    let features = features_fixture(500);
    let inputs: Vec<Vec<f64>> = (0..features.n_rows())
        .map(|i| features.row(i).to_vec())
        .collect();
    let config = TrainConfig {
        learning_rate: 0.05,
        momentum: 0.9,
        epochs: 1,
        batch_size: 32,
        seed: 4,
    };
    let mut group = c.benchmark_group("sdae");
    group.sample_size(30);
    group.bench_function("pretrain_one_epoch_28_to_64", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut da = DenoisingAutoencoder::new(inputs[0].len(), 64, 0.3, &mut rng);
            pretrain_layer(&mut da, black_box(&inputs), &config).unwrap()
        })
    });
    group.finish();
}

fn bench_drawdown(c: &mut Criterion) {
    let mut rng = XorShift(55);
    let mut values = Vec::with_capacity(100_000);
    let mut level = 0.0f64;
    for _ in 0..100_000 {
        level += rng.next_f64() - 0.495;
        values.push(level);
    }
    c.bench_function("backtest/max_drawdown_100k_points", |b| {
        b.iter(|| dircast_core::backtest::max_drawdown(black_box(&values)))
    });
}

struct XorShift(u64);

impl XorShift {
    fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

criterion_group!(
    benches,
    bench_indicators,
    bench_smo,
    bench_pretrain_epoch,
    bench_drawdown
);
criterion_main!(benches);
