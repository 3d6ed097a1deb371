use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use refnft::analysis::{self, PayoffSurface, WitnessGrid};
use refnft::harness::{self, ExperimentConfig};
use refnft::ledger::{Ledger, MintRequest, NftKind};
use refnft::market::{MarketParams, WeightVector};

fn ledger_rounds(c: &mut Criterion) {
    c.bench_function("ledger_50_rounds", |b| {
        b.iter(|| {
            let mut ledger = Ledger::new(MarketParams::default()).unwrap();
            ledger.seed_genesis(NftKind::Dataset, 0.5, 0.5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for h in 1..=50 {
                for i in 0..5 {
                    ledger
                        .mint(
                            MintRequest {
                                publisher: Some(i),
                                kind: NftKind::Model,
                                theta: vec![],
                                weights: WeightVector::self_only(),
                                quality: 0.5,
                                price: 0.5,
                                pi_r: 0.0,
                                lambda: 0.5,
                            },
                            &[],
                        )
                        .unwrap();
                }
                ledger.advance_round(h).unwrap();
                black_box(ledger.candidate_set(h, 10, 20, &mut rng));
            }
        })
    });
}

fn episode(c: &mut Criterion) {
    let config = ExperimentConfig {
        epochs: 20,
        seeds: vec![0],
        n_publishers: 4,
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    group.bench_function("run_seed_20x4", |b| b.iter(|| harness::run_seed(&config, 0).unwrap()));
    group.finish();
}

fn witness(c: &mut Criterion) {
    let p = MarketParams::default();
    let surface = PayoffSurface::default_for(&p);
    let grid = WitnessGrid::for_params(&p, 51);
    c.bench_function("witness_51x51", |b| {
        b.iter(|| analysis::nonconvexity_witness(&surface.evaluator(), &grid))
    });
}

criterion_group!(benches, ledger_rounds, episode, witness);
criterion_main!(benches);
