use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mcmc_sigtest::chains::{bimodal_chain, Ar1Kernel};
use mcmc_sigtest::kernel::KernelPair;
use mcmc_sigtest::par::Execution;
use mcmc_sigtest::pvalue::TestOutcome;
use mcmc_sigtest::rng::Stream;
use mcmc_sigtest::samplers::{sample_parallel_with, sample_permuted_serial};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn spokes(c: &mut Criterion) {
    let pair = KernelPair::new(bimodal_chain(), 100).unwrap();
    let mut group = c.benchmark_group("parallel_sampler_spokes");
    for m in [999, 9999] {
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, m), &m, |b, &m| {
                b.iter(|| sample_parallel_with(&pair, black_box(50usize), m, &Stream::new(1), mode))
            });
        }
    }
    group.finish();
}

fn replications(c: &mut Criterion) {
    let pair = KernelPair::new(Ar1Kernel::new(0.7).unwrap(), 5).unwrap();
    let master = Stream::new(2);
    let mut group = c.benchmark_group("replications");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new(name, 200), |b| {
            b.iter(|| {
                mode.map(200, |r| {
                    let set = sample_parallel_with(&pair, 1.0, 99, &master.split(r as u64), Execution::Sequential);
                    TestOutcome::evaluate(&set, |x| *x).unwrap().p_mc
                })
            })
        });
    }
    group.finish();
}

fn serial(c: &mut Criterion) {
    let pair = KernelPair::new(bimodal_chain(), 100).unwrap();
    c.bench_function("permuted_serial_m99_l100", |b| {
        b.iter(|| sample_permuted_serial(&pair, black_box(50usize), 99, &Stream::new(3)))
    });
}

criterion_group!(benches, spokes, replications, serial);
criterion_main!(benches);
