use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use obst_bench::fixture;
use obst_core::overlay::RunOptions;

fn bench_serve(c: &mut Criterion) {
    let mut group = c.benchmark_group("serve");
    for &(n, k) in &[(512usize, 1usize), (512, 16)] {
        group.bench_function(format!("adjusting_n{n}_k{k}"), |b| {
            let (overlay, sigma) = fixture(n, k, 4096, 7);
            b.iter_batched(
                || overlay.clone(),
                |mut o| {
                    black_box(o.run_sequence(&sigma, RunOptions::default()).unwrap());
                },
                BatchSize::LargeInput,
            );
        });
        group.bench_function(format!("static_n{n}_k{k}"), |b| {
            let (overlay, sigma) = fixture(n, k, 4096, 7);
            b.iter_batched(
                || overlay.clone(),
                |mut o| {
                    black_box(
                        o.run_sequence(
                            &sigma,
                            RunOptions {
                                adjust: false,
                                adjust_every: 1,
                            },
                        )
                        .unwrap(),
                    );
                },
                BatchSize::LargeInput,
            );
        });
    }
    group.finish();
}

fn bench_routing(c: &mut Criterion) {
    let (overlay, sigma) = fixture(1024, 4, 4096, 9);
    c.bench_function("closest_tree_n1024_k4", |b| {
        b.iter(|| {
            for &(u, v) in &sigma.requests {
                black_box(overlay.closest_tree(u, v).unwrap());
            }
        });
    });
}

criterion_group!(benches, bench_serve, bench_routing);
criterion_main!(benches);
