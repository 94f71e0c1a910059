//! Null space of the divergence on a vertex star.

use faer::Mat;

use super::{CheckRow, Expectation, Report};
use crate::assembly::{assemble, AssemblyOptions, LoadData};
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::mesh::{build_cube_mesh, BoundaryPartition, Mesh};
use crate::space::{Pair, PressureSpace, VelocitySpace};

#[derive(Clone, Debug, PartialEq)]
pub struct MacroResult {
    pub pair: Pair,
    pub vertex: usize,
    pub tets: usize,
    /// Nullity of `B_M^T` on mean-zero pressures.
    pub nullity: usize,
    /// Nullity of `B_M^T` on all pressures of the star.
    pub nullity_unconstrained: usize,
    /// Largest opposite-edge midpoint disagreement over the unconstrained
    /// null space, per tetrahedron, scaled by the vector's maximum.
    pub midedge_spread: f64,
}

/// `max |q(m_ij) - q(m_kl)|` over the tetrahedra of `pspace` and the three
/// pairs of opposite edges.
pub fn midedge_spread(pspace: &PressureSpace, q: &[f64]) -> f64 {
    const PAIRS: [([usize; 2], [usize; 2]); 3] = [([0, 1], [2, 3]), ([0, 2], [1, 3]), ([0, 3], [1, 2])];
    let mid = |e: [usize; 2]| {
        let mut b = [0.0; 4];
        b[e[0]] = 0.5;
        b[e[1]] = 0.5;
        b
    };
    let mut worst = 0.0f64;
    for pos in 0..pspace.tets.len() {
        for (a, b) in PAIRS {
            worst = worst.max((pspace.eval(q, pos, &mid(a)) - pspace.eval(q, pos, &mid(b))).abs());
        }
    }
    worst
}

/// Null space of `B_M^T` on the star of `vertex`: velocities vanish (in the
/// face-moment sense) on the star boundary and pressures are discontinuous
/// of the pair's degree on the star tetrahedra.
pub fn macro_nullspace(mesh: &Mesh, pair: Pair, vertex: usize) -> Result<MacroResult> {
    if !mesh.is_interior_vertex(vertex) {
        return Err(Error::InvalidArgument(format!("vertex {vertex} is on the boundary")));
    }
    let star = mesh.macro_element(vertex)?;
    let interior: std::collections::HashSet<usize> = star.interior_faces.iter().copied().collect();
    let v = VelocitySpace::restricted(mesh, pair.velocity, &star.tets, |f| interior.contains(&f));
    let p = PressureSpace::on_tets(&star.tets, pair.pressure_degree);
    let sys = assemble(mesh, &v, &p, AssemblyOptions::new(1.0), &LoadData::default())?;
    let b = linalg::to_dense(&sys.b);
    let (np, nu) = (b.nrows(), b.ncols());
    let bt = b.transpose().to_owned();

    let nullity_unconstrained = rank_deficit(&bt)?;
    let basis = null_vectors(&bt)?;
    let midedge = basis.iter().map(|q| {
        let scale = q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        midedge_spread(&p, q) / scale
    });
    let midedge_spread = midedge.fold(0.0, f64::max);

    // orthonormal complement of the mean functional
    let mean = p.mean_row(mesh);
    let z = complement(&mean);
    let btz = &bt * &z;
    let nullity = rank_deficit(&btz)?;
    debug_assert!(nu == 0 || btz.ncols() + 1 == np);
    Ok(MacroResult { pair, vertex, tets: star.tets.len(), nullity, nullity_unconstrained, midedge_spread })
}

/// `ncols - rank`, including any deficit from having fewer rows than columns.
fn rank_deficit(m: &Mat<f64>) -> Result<usize> {
    if m.ncols() == 0 {
        return Ok(0);
    }
    linalg::nullity(m.as_ref(), RANK_TOL)
}

/// Right singular vectors of `m` for singular values below the rank threshold.
fn null_vectors(m: &Mat<f64>) -> Result<Vec<Vec<f64>>> {
    let n = m.ncols();
    if n == 0 {
        return Ok(Vec::new());
    }
    // eigenvectors of m^T m with tiny eigenvalues
    let mtm = m.transpose() * m;
    let (vals, vecs) = linalg::sym_eigen(mtm.as_ref())?;
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    Ok((0..n)
        .filter(|&i| vals[i].max(0.0).sqrt() <= RANK_TOL * top.sqrt())
        .map(|i| (0..n).map(|r| vecs[(r, i)]).collect())
        .collect())
}

/// Orthonormal basis of the orthogonal complement of `w` via a Householder reflector.
fn complement(w: &[f64]) -> Mat<f64> {
    let n = w.len();
    let norm = linalg::norm2(w);
    let mut v = w.to_vec();
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign * norm;
    let vn2 = linalg::dot(&v, &v);
    // H = I - 2 v v^T / |v|^2 maps w to a multiple of e_0; columns 1.. span w^perp
    Mat::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let id = if i == col { 1.0 } else { 0.0 };
        id - 2.0 * v[i] * v[col] / vn2
    })
}

/// Macro-element checks for every given pair on the star of the centre
/// vertex of the level-2 mesh.
pub fn macro_report(pairs: &[Pair]) -> Result<(Vec<MacroResult>, Report)> {
    let mesh = build_cube_mesh(2, &BoundaryPartition::all_dirichlet())?;
    let centre = mesh.vertex_nearest([0.5, 0.5, 0.5]);
    let mut results = Vec::new();
    let mut report = Report::new();
    for &pair in pairs {
        let r = macro_nullspace(&mesh, pair, centre)?;
        let name = pair.name();
        report.push(CheckRow::new("macro", name.as_str(), Some(2), "star_tets", Expectation::Equals(24.0), r.tets as f64));
        report.push(CheckRow::new("macro", name.as_str(), Some(2), "nullity_mean_zero", Expectation::Equals(0.0), r.nullity as f64));
        report.push(CheckRow::new(
            "macro",
            name.as_str(),
            Some(2),
            "nullity_unconstrained",
            Expectation::Equals(1.0),
            r.nullity_unconstrained as f64,
        ));
        report.push(CheckRow::new("macro", name.as_str(), Some(2), "midedge_spread", Expectation::AtMost(1e-8), r.midedge_spread));
        results.push(r);
    }
    Ok((results, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementKind;

    #[test]
    fn householder_complement_is_orthonormal() {
        let w = [0.3, -1.0, 2.0, 0.5];
        let z = complement(&w);
        for j in 0..3 {
            let col: Vec<f64> = (0..4).map(|i| z[(i, j)]).collect();
            assert!(linalg::dot(&col, &w).abs() < 1e-14);
            assert!((linalg::norm2(&col) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_vertex_is_rejected() {
        let mesh = build_cube_mesh(2, &BoundaryPartition::all_dirichlet()).unwrap();
        assert!(macro_nullspace(&mesh, Pair::standard(ElementKind::Nc3r), 0).is_err());
    }

    #[test]
    fn reduced_order_three_star_has_trivial_null_space() {
        let (results, report) = macro_report(&[Pair::standard(ElementKind::Nc3r)]).unwrap();
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(results[0].nullity, 0);
    }
}
