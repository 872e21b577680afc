use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nalgebra::Matrix3;
use stylize_bench::{cube_style, torus, SIZES};
use stylize_core::solver::{local_step, Precomputed};
use stylize_core::{Regularization, Solver, SolverParams};

fn params(regularization: Regularization) -> SolverParams {
    SolverParams {
        regularization,
        tolerance: f64::MIN_POSITIVE,
        ..Default::default()
    }
}

fn local(c: &mut Criterion) {
    let mut g = c.benchmark_group("local_step");
    for (nu, nv) in SIZES {
        let mesh = torus(nu, nv);
        for reg in [Regularization::Arap, Regularization::Farap, Regularization::Acap] {
            let pre = Precomputed::new(mesh.positions(), mesh.faces(), reg, None).unwrap();
            let targets = cube_style()
                .targets(mesh.positions(), mesh.faces(), reg.mode())
                .unwrap()
                .vectors;
            let mut rotations = vec![Matrix3::identity(); pre.element_count()];
            let mut scales = vec![1.0; pre.element_count()];
            g.throughput(Throughput::Elements(pre.element_count() as u64));
            g.bench_with_input(BenchmarkId::new(reg.as_str(), mesh.vertex_count()), &(), |b, _| {
                b.iter(|| local_step(&pre, mesh.positions(), &targets, 1.0, &mut rotations, &mut scales))
            });
        }
    }
    g.finish();
}

fn global(c: &mut Criterion) {
    let mut g = c.benchmark_group("global_step");
    for (nu, nv) in SIZES {
        let mesh = torus(nu, nv);
        let pre = Precomputed::new(mesh.positions(), mesh.faces(), Regularization::Arap, None).unwrap();
        let rotations = vec![Matrix3::identity(); pre.element_count()];
        let scales = vec![1.0; pre.element_count()];
        g.throughput(Throughput::Elements(mesh.vertex_count() as u64));
        g.bench_with_input(BenchmarkId::from_parameter(mesh.vertex_count()), &(), |b, _| {
            b.iter(|| pre.global_step(&rotations, &scales).unwrap())
        });
    }
    g.finish();
}

fn iteration(c: &mut Criterion) {
    let mut g = c.benchmark_group("iteration");
    g.sample_size(20);
    for (nu, nv) in SIZES {
        let mesh = torus(nu, nv);
        let mut solver = Solver::new(mesh.clone(), cube_style(), params(Regularization::Arap)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(mesh.vertex_count()), &(), |b, _| {
            b.iter(|| solver.step().unwrap())
        });
    }
    g.finish();
}

fn precompute(c: &mut Criterion) {
    let mut g = c.benchmark_group("precompute");
    g.sample_size(10);
    for (nu, nv) in SIZES {
        let mesh = torus(nu, nv);
        g.bench_with_input(BenchmarkId::from_parameter(mesh.vertex_count()), &(), |b, _| {
            b.iter(|| Precomputed::new(mesh.positions(), mesh.faces(), Regularization::Arap, None).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, local, global, iteration, precompute);
criterion_main!(benches);
