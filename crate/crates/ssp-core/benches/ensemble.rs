//! Timing comparison of path-parallel and single-threaded ensemble runs.
//!
//! The ensemble maps Monte Carlo paths over a rayon pool (when the
//! `parallel` feature is on) and reduces results in path-index order, so
//! the report must be bitwise identical whatever the pool size; the
//! assertion below enforces that before any timing starts.

use std::path::{Path, PathBuf};

use criterion::{criterion_group, criterion_main, Criterion};
use ssp_core::experiments::{
    run_ensemble, EnsembleSpec, LevelSpec, NoiseKind, ReferenceKind, Scheme,
};
use ssp_core::model::StefanModel;
use ssp_core::stepper::NewtonConfig;

fn mesh_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../meshes")
        .join(name)
}

fn spec() -> EnsembleSpec {
    EnsembleSpec {
        levels: vec![
            LevelSpec {
                label: "mesh1-01".into(),
                mesh: mesh_path("mesh1-01.msh"),
                scheme: Scheme::Mlp1,
                r: 0.5,
                n_steps: 8,
            },
            LevelSpec {
                label: "mesh1-02".into(),
                mesh: mesh_path("mesh1-02.msh"),
                scheme: Scheme::Mlp1,
                r: 0.5,
                n_steps: 16,
            },
        ],
        paths: 4,
        seed: 3,
        model: StefanModel::test2(1.0),
        noise: NoiseKind::Scalar,
        plateau: (1.0, 2.0),
        newton: NewtonConfig::default(),
        reference: ReferenceKind::FinestLevel,
        cache_dir: None,
        cache_tag: "bench".into(),
    }
}

fn bench_ensemble(c: &mut Criterion) {
    let spec = spec();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool = rayon::ThreadPoolBuilder::new().build().unwrap();

    let sequential_report = single.install(|| run_ensemble(&spec)).unwrap();
    let parallel_report = pool.install(|| run_ensemble(&spec)).unwrap();
    assert_eq!(
        sequential_report, parallel_report,
        "ensemble reports must not depend on the worker count"
    );

    let mut group = c.benchmark_group("run_ensemble");
    group.sample_size(10);
    group.bench_function("single_thread", |b| {
        b.iter(|| single.install(|| run_ensemble(&spec).unwrap()))
    });
    group.bench_function("thread_pool", |b| {
        b.iter(|| pool.install(|| run_ensemble(&spec).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_ensemble);
criterion_main!(benches);
