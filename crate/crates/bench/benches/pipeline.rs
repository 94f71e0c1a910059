use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ncstokes::assembly::{AssemblyOptions, LoadData};
use ncstokes::mesh::build_cube_mesh;
use ncstokes::problem::ExactSolution;
use ncstokes::solver::SolveOptions;
use ncstokes::verify::macro_report;
use ncstokes::{assemble, build_spaces, solve, BoundaryPartition, ElementDef, ElementKind, Pair};

fn element_construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("element_build");
    for kind in ElementKind::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(kind.name()), &kind, |b, &k| {
            b.iter(|| ElementDef::build(k).unwrap())
        });
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mesh = build_cube_mesh(2, &BoundaryPartition::neumann_top()).unwrap();
    let exact = ExactSolution::cube_benchmark(1.0);
    let f = |x| exact.body_force(x);
    let t = |x, n| exact.traction(x, n);
    let load = LoadData { body_force: Some(&f), traction: Some(&t), dirichlet: None };
    let mut group = c.benchmark_group("assemble_n2");
    group.sample_size(10);
    for kind in ElementKind::ALL {
        let (v, p) = build_spaces(&mesh, Pair::standard(kind));
        group.bench_function(kind.name(), |b| {
            b.iter(|| assemble(&mesh, &v, &p, AssemblyOptions::new(1.0), &load).unwrap())
        });
    }
    group.finish();
}

fn direct_solve(c: &mut Criterion) {
    let mesh = build_cube_mesh(2, &BoundaryPartition::neumann_top()).unwrap();
    let exact = ExactSolution::cube_benchmark(1.0);
    let f = |x| exact.body_force(x);
    let t = |x, n| exact.traction(x, n);
    let load = LoadData { body_force: Some(&f), traction: Some(&t), dirichlet: None };
    let mut group = c.benchmark_group("solve_n2");
    group.sample_size(10);
    for kind in [ElementKind::Nc2r, ElementKind::Nc2] {
        let (v, p) = build_spaces(&mesh, Pair::standard(kind));
        let system = assemble(&mesh, &v, &p, AssemblyOptions::new(1.0), &load).unwrap();
        group.bench_function(kind.name(), |b| b.iter(|| solve(&system, &SolveOptions::default()).unwrap()));
    }
    group.finish();
}

fn macro_nullspace(c: &mut Criterion) {
    let pair = [Pair::standard(ElementKind::Nc3r)];
    let mut group = c.benchmark_group("macro");
    group.sample_size(10);
    group.bench_function("nc3r", |b| b.iter(|| macro_report(&pair).unwrap()));
    group.finish();
}

criterion_group!(benches, element_construction, assembly, direct_solve, macro_nullspace);
criterion_main!(benches);
