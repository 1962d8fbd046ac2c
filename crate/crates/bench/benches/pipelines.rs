use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sigshape::cbss::{build_codebook, progressive_select, DistanceCache};
use sigshape::channel::{make_correlation, sample_channel};
use sigshape::config::{CsitMode, Scheme, SystemConfig};
use sigshape::evaluate::simulate_ser;
use sigshape::fixtures::load_fixture_set;
use sigshape::obss::{build_qcqp, solve_entry_qcqp, PartitionIndicator, SolverOptions};
use sigshape::rng::substream;
use sigshape::shaping::{make_weight, WeightMode};
use sigshape::tac::enumerate_tacs;

fn gensm_config(n_bits: usize) -> SystemConfig {
    SystemConfig::new(Scheme::GenSm, 3, 2, 2, n_bits, CsitMode::None).unwrap()
}

fn bench_channel_sampling(c: &mut Criterion) {
    let corr = make_correlation(0.3, 4).unwrap();
    let mut rng = substream(1, "bench-channel");
    c.bench_function("sample_channel 4x4", |b| {
        b.iter(|| sample_channel(&mut rng, &corr, 4))
    });
}

fn bench_qcqp(c: &mut Criterion) {
    let config = gensm_config(3);
    let family = enumerate_tacs(&config).unwrap();
    let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();
    let mut partition = PartitionIndicator::empty(family.len());
    for k in [0, 0, 1, 1, 2, 2, 0, 1] {
        partition = partition.with_added(k);
    }

    c.bench_function("build_qcqp t=8", |b| {
        b.iter(|| build_qcqp(&partition, &family, &a).unwrap())
    });

    let inst = build_qcqp(&partition, &family, &a).unwrap();
    let opts = SolverOptions {
        restarts: 4,
        max_iters: 60,
        inner_iters: 100,
        seed: 2,
        ..Default::default()
    };
    c.bench_function("solve_entry_qcqp t=8 (4 restarts)", |b| {
        b.iter(|| solve_entry_qcqp(&inst, &opts).unwrap())
    });
}

fn bench_cbss(c: &mut Criterion) {
    let config = gensm_config(3);
    let family = enumerate_tacs(&config).unwrap();
    let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();
    let mut group = c.benchmark_group("cbss");
    for m_c in [4usize, 16] {
        let cb = build_codebook(&config, &family, m_c).unwrap();
        group.bench_with_input(BenchmarkId::new("distance_cache", m_c), &cb, |b, cb| {
            b.iter(|| DistanceCache::build(cb, &a).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("progressive_select", m_c), &cb, |b, cb| {
            b.iter(|| progressive_select(cb, &a, 8).unwrap())
        });
    }
    group.finish();
}

fn bench_ser(c: &mut Criterion) {
    let set = load_fixture_set("gensm_d0").unwrap();
    let corr = make_correlation(0.0, 3).unwrap();
    c.bench_function("simulate_ser 10k trials", |b| {
        b.iter(|| simulate_ser(&set, &corr, 2, 100.0, 10_000, 3, 0.0).unwrap())
    });
}

criterion_group!(
    benches,
    bench_channel_sampling,
    bench_qcqp,
    bench_cbss,
    bench_ser
);
criterion_main!(benches);
