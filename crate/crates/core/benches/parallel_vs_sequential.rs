//! Worker-count comparison for the parallel hot paths.
//!
//! `cargo bench` runs each case on one worker and on every available worker.
//! `cargo bench --no-default-features` builds the sequential fallback, where
//! both variants run the plain loop.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use envelope_core::data::DomainBounds;
use envelope_core::estimation::{BootstrapConfig, BootstrapPool};
use envelope_core::ga::{self, GaConfig};
use envelope_core::model_selection::{cross_validate, FitConfig, GammaGrid};
use envelope_core::objective::{Objective, ObjectiveConfig};
use envelope_core::par;
use envelope_core::sim_bench::{generate, Scenario, SimulationSpec};

fn worker_counts() -> Vec<usize> {
    let all = par::default_workers();
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn ga_generation(c: &mut Criterion) {
    let d = generate(&SimulationSpec::new(Scenario::II, 5000, 1)).unwrap();
    let pool = BootstrapPool::new(
        &d,
        BootstrapConfig {
            replicates: 200,
            seed: 2,
        },
    )
    .unwrap();
    let cfg = ObjectiveConfig::for_dataset(&d, 0.2, 10.0, 1.0, *pool.config());
    let obj = Objective::new(&d, cfg, 2, Some(&pool)).unwrap();
    let bounds = DomainBounds::from_data(&d, 0.01);
    let ga_cfg = GaConfig {
        population_size: 100,
        max_generations: 5,
        stall_generations: 100,
        ..Default::default()
    };

    let mut group = c.benchmark_group("ga_5_generations_2d_n5000");
    group.sample_size(10);
    for w in worker_counts() {
        group.bench_with_input(BenchmarkId::from_parameter(w), &w, |b, &w| {
            b.iter(|| {
                par::install(Some(w), || {
                    black_box(ga::run(|v| obj.fitness(v), &bounds, 2, 2, &ga_cfg).unwrap())
                })
            })
        });
    }
    group.finish();
}

fn cv_grid(c: &mut Criterion) {
    let d = generate(&SimulationSpec::new(Scenario::IC, 600, 3)).unwrap();
    let mut cfg = FitConfig {
        beta: 0.25,
        ..Default::default()
    };
    cfg.ga.max_generations = 20;
    cfg.bootstrap.replicates = 100;
    let grid = GammaGrid::new(vec![0.0, 2.0, 4.0]).unwrap();

    let mut group = c.benchmark_group("cv_3_gammas_4_folds");
    group.sample_size(10);
    for w in worker_counts() {
        group.bench_with_input(BenchmarkId::from_parameter(w), &w, |b, &w| {
            b.iter(|| {
                par::install(Some(w), || {
                    black_box(cross_validate(&d, &cfg, &grid, 4, 7).unwrap())
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, ga_generation, cv_grid);
criterion_main!(benches);
