use ncstokes::assembly::{assemble, AssemblyOptions, LoadData};
use ncstokes::mesh::{build_cube_mesh, BoundaryPartition};
use ncstokes::problem::ExactSolution;
use ncstokes::solver::{solve, PressureGauge, SolveOptions, SolverMode};
use ncstokes::space::{build_spaces, Pair};
use ncstokes::verify::patch_test;
use ncstokes::ElementKind;

fn with_benchmark_load<R>(mu: f64, run: impl FnOnce(&LoadData) -> R) -> R {
    let exact = ExactSolution::cube_benchmark(mu);
    let f = |x| exact.body_force(x);
    let t = |x, n| exact.traction(x, n);
    run(&LoadData { body_force: Some(&f), traction: Some(&t), dirichlet: None })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn pinned_and_multiplier_gauges_agree() {
    let mesh = build_cube_mesh(2, &BoundaryPartition::all_dirichlet()).unwrap();
    for kind in [ElementKind::Nc2r, ElementKind::Nc2] {
        let (v, p) = build_spaces(&mesh, Pair::standard(kind));
        let sys = with_benchmark_load(1.0, |load| assemble(&mesh, &v, &p, AssemblyOptions::new(1.0), load)).unwrap();
        assert!(sys.mean_constraint);
        let auto = solve(&sys, &SolveOptions::default()).unwrap();
        let pinned = solve(&sys, &SolveOptions { gauge: PressureGauge::Pin(3), ..SolveOptions::default() }).unwrap();
        assert!(max_diff(&auto.velocity, &pinned.velocity) < 1e-9, "{kind}");
        assert!(max_diff(&auto.pressure, &pinned.pressure) < 1e-8, "{kind}");
        let mean: f64 = sys.mean_row.iter().zip(&auto.pressure).map(|(a, b)| a * b).sum();
        assert!(mean.abs() < 1e-10);
    }
}

#[test]
fn minres_matches_the_direct_solver_with_a_traction_face() {
    let mesh = build_cube_mesh(2, &BoundaryPartition::neumann_top()).unwrap();
    for kind in [ElementKind::Nc2r, ElementKind::Nc3r] {
        let (v, p) = build_spaces(&mesh, Pair::standard(kind));
        let sys = with_benchmark_load(1.0, |load| assemble(&mesh, &v, &p, AssemblyOptions::new(1.0), load)).unwrap();
        assert!(!sys.mean_constraint);
        let direct = solve(&sys, &SolveOptions::with_mode(SolverMode::Direct)).unwrap();
        let iter = solve(&sys, &SolveOptions::with_mode(SolverMode::Iterative)).unwrap();
        assert!(iter.relative_residual <= 1e-10);
        assert!(max_diff(&direct.velocity, &iter.velocity) < 1e-8, "{kind}");
        assert!(max_diff(&direct.pressure, &iter.pressure) < 1e-8, "{kind}");
    }
}

#[test]
fn scaling_viscosity_and_load_together_scales_only_the_pressure() {
    let mesh = build_cube_mesh(1, &BoundaryPartition::neumann_top()).unwrap();
    let (v, p) = build_spaces(&mesh, Pair::standard(ElementKind::Nc2));
    let exact = ExactSolution::cube_benchmark(1.0);
    let solve_scaled = |s: f64| {
        let f = |x| exact.body_force(x).map(|c| s * c);
        let t = |x, n| exact.traction(x, n).map(|c| s * c);
        let load = LoadData { body_force: Some(&f), traction: Some(&t), dirichlet: None };
        let sys = assemble(&mesh, &v, &p, AssemblyOptions::new(s), &load).unwrap();
        solve(&sys, &SolveOptions::default()).unwrap()
    };
    let a = solve_scaled(1.0);
    let b = solve_scaled(25.0);
    assert!(max_diff(&a.velocity, &b.velocity) < 1e-9);
    let pa: Vec<f64> = a.pressure.iter().map(|x| 25.0 * x).collect();
    assert!(max_diff(&pa, &b.pressure) < 1e-7);
}

#[test]
fn polynomial_solutions_are_reproduced() {
    let options = SolveOptions::default();
    for pair in Pair::all_standard() {
        for partition in [BoundaryPartition::all_dirichlet(), BoundaryPartition::neumann_top()] {
            let r = patch_test(pair, 1, 1.0, &partition, &options).unwrap();
            assert!(r.velocity < 1e-8, "{} velocity {}", pair.name(), r.velocity);
            assert!(r.pressure < 1e-8, "{} pressure {}", pair.name(), r.pressure);
        }
    }
}

#[test]
fn mismatched_gauge_index_is_rejected() {
    let mesh = build_cube_mesh(1, &BoundaryPartition::all_dirichlet()).unwrap();
    let (v, p) = build_spaces(&mesh, Pair::standard(ElementKind::Nc2r));
    let sys = with_benchmark_load(1.0, |load| assemble(&mesh, &v, &p, AssemblyOptions::new(1.0), load)).unwrap();
    let opts = SolveOptions { gauge: PressureGauge::Pin(p.n_dofs() + 5), ..SolveOptions::default() };
    assert!(solve(&sys, &opts).is_err());
}
