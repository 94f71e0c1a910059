//! Mesh, solution and matrix artifacts for external viewers.

use std::path::{Path, PathBuf};

use ncstokes::assembly::{element_divergence_norms, AssemblyOptions, LoadData};
use ncstokes::io::{write_matrix_market, write_vtk, CellField};
use ncstokes::mesh::build_cube_mesh;
use ncstokes::problem::ExactSolution;
use ncstokes::solver::SolveOptions;
use ncstokes::{assemble, build_spaces, solve, BoundaryPartition, Pair, Result};

const CENTROID: [f64; 4] = [0.25; 4];

/// Solves the cube benchmark for `pair` at level `n` and writes the cell
/// fields as legacy VTK plus the `A` and `B` blocks as Matrix Market files.
/// Returns the written paths.
pub fn export_benchmark(dir: &Path, pair: Pair, n: usize, mu: f64, options: &SolveOptions) -> Result<Vec<PathBuf>> {
    let mesh = build_cube_mesh(n, &BoundaryPartition::neumann_top())?;
    let (vspace, pspace) = build_spaces(&mesh, pair);
    let exact = ExactSolution::cube_benchmark(mu);
    let f = |x| exact.body_force(x);
    let t = |x, nrm| exact.traction(x, nrm);
    let load = LoadData { body_force: Some(&f), traction: Some(&t), dirichlet: None };
    let system = assemble(&mesh, &vspace, &pspace, AssemblyOptions::new(mu), &load)?;
    let report = solve(&system, options)?;
    let uh = report.discrete_velocity(&system);

    let mut velocity = Vec::with_capacity(mesh.n_tets());
    let mut pressure = Vec::with_capacity(mesh.n_tets());
    let mut error = Vec::with_capacity(mesh.n_tets());
    for t in 0..mesh.n_tets() {
        let (u, _) = vspace.eval(&mesh, &uh, t, &CENTROID)?;
        let x = mesh.geometry[t].point(&CENTROID);
        let ue = exact.velocity(x);
        velocity.push(u);
        pressure.push(pspace.eval(&report.pressure, t, &CENTROID));
        error.push((0..3).map(|c| (u[c] - ue[c]).powi(2)).sum::<f64>().sqrt());
    }
    let fields = vec![
        CellField::Vector("velocity".into(), velocity),
        CellField::Scalar("pressure".into(), pressure),
        CellField::Scalar("velocity_error_centroid".into(), error),
        CellField::Scalar("divergence_l2".into(), element_divergence_norms(&mesh, &vspace, &uh)?),
    ];
    let stem = format!("{}_n{n}", pair.name());
    let vtk = dir.join(format!("{stem}.vtk"));
    let a = dir.join(format!("{stem}_A.mtx"));
    let b = dir.join(format!("{stem}_B.mtx"));
    write_vtk(&vtk, &mesh, &fields)?;
    write_matrix_market(&a, &system.a)?;
    write_matrix_market(&b, &system.b)?;
    Ok(vec![vtk, a, b])
}
