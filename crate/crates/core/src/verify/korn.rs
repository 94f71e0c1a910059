//! Discrete Korn inequality: the smallest generalized eigenvalue of
//! `(eps(u), eps(v)) x = lambda (grad u, grad v)_h x` on the free unknowns.

use faer::linalg::solvers::SolveCore;
use faer::{Conj, Mat, Side};

use super::{CheckRow, Expectation, Report};
use crate::assembly::{assemble, vector_gram, AssemblyOptions, LoadData};
use crate::element::ElementKind;
use crate::error::{Error, Result};
use crate::linalg::{self, SparseMat};
use crate::mesh::{build_cube_mesh, BoundaryPartition};
use crate::space::{build_spaces, Pair};

/// Above this many unknowns the Lanczos path is used.
const DENSE_LIMIT: usize = 2500;
const LANCZOS_MAX: usize = 600;
const LANCZOS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct KornResult {
    pub level: usize,
    pub kind: ElementKind,
    pub lambda_min: f64,
    pub unknowns: usize,
}

/// Korn constant of `kind` on the level-`n` cube mesh. With no Dirichlet
/// face the rigid rotations are in the kernel and the result is zero up to
/// round-off.
pub fn korn_coercivity(kind: ElementKind, n: usize, partition: &BoundaryPartition) -> Result<KornResult> {
    let mesh = build_cube_mesh(n, partition)?;
    let (v, p) = build_spaces(&mesh, Pair::standard(kind));
    // mu = 1/2 makes the viscous block the plain strain Gram matrix
    let sys = assemble(&mesh, &v, &p, AssemblyOptions::new(0.5), &LoadData::default())?;
    let gram = vector_gram(&mesh, &v)?;
    let nu = v.n_free();
    let lambda_min = if nu <= DENSE_LIMIT || mesh.count_faces(crate::mesh::BoundaryTag::Dirichlet) == 0 {
        dense_korn(&sys.a, &gram)?
    } else {
        lanczos_korn(&sys.a, &gram)?
    };
    Ok(KornResult { level: n, kind, lambda_min, unknowns: nu })
}

/// `lambda_min(W^T A W)` with `W = U_+ Lambda_+^{-1/2}` spanning the range of `G`.
fn dense_korn(a: &SparseMat, g: &SparseMat) -> Result<f64> {
    let gd = linalg::to_dense(g);
    let (gv, gu) = linalg::sym_eigen(gd.as_ref())?;
    let top = gv.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..gv.len()).filter(|&i| gv[i] > 1e-10 * top).collect();
    let n = gd.nrows();
    let w = Mat::from_fn(n, keep.len(), |i, j| gu[(i, keep[j])] / gv[keep[j]].sqrt());
    let ad = linalg::to_dense(a);
    let t = w.transpose() * &ad * &w;
    let t = Mat::from_fn(t.nrows(), t.ncols(), |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    let (vals, _) = linalg::sym_eigen(t.as_ref())?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

/// Largest eigenvalue `theta` of `A^{-1} G` by Lanczos in the `A` inner
/// product with full reorthogonalization; returns `1 / theta`.
fn lanczos_korn(a: &SparseMat, g: &SparseMat) -> Result<f64> {
    let n = a.nrows();
    let llt = a
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Eigen(format!("strain matrix is not positive definite: {e:?}")))?;
    let apply = |x: &[f64]| -> Vec<f64> {
        let gx = linalg::spmv(g, x);
        let mut m = Mat::from_fn(n, 1, |i, _| gx[i]);
        llt.solve_in_place_with_conj(Conj::No, m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    };
    let anorm = |x: &[f64]| linalg::dot(x, &linalg::spmv(a, x)).sqrt();
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let s = anorm(&q);
    q.iter_mut().for_each(|x| *x /= s);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut a_basis: Vec<Vec<f64>> = Vec::new();
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut theta = 0.0;
    for it in 0..LANCZOS_MAX.min(n) {
        let aq = linalg::spmv(a, &q);
        let mut r = apply(&q);
        let alpha = linalg::dot(&aq, &r);
        basis.push(q.clone());
        a_basis.push(aq);
        for _ in 0..2 {
            for (qi, aqi) in basis.iter().zip(&a_basis) {
                let c = linalg::dot(aqi, &r);
                r.iter_mut().zip(qi).for_each(|(x, y)| *x -= c * y);
            }
        }
        alphas.push(alpha);
        let beta = anorm(&r);
        let m = alphas.len();
        let tri = Mat::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        if it % 5 == 4 || beta < 1e-14 {
            let (vals, vecs) = linalg::sym_eigen(tri.as_ref())?;
            theta = vals[m - 1];
            let bound = beta * vecs[(m - 1, m - 1)].abs();
            if bound <= LANCZOS_TOL * theta || beta < 1e-14 {
                return Ok(1.0 / theta);
            }
        }
        betas.push(beta);
        q = r.iter().map(|x| x / beta).collect();
    }
    if theta > 0.0 {
        return Err(Error::Eigen(format!(
            "Lanczos did not converge in {LANCZOS_MAX} steps (current estimate {:e})",
            1.0 / theta
        )));
    }
    Err(Error::Eigen("Lanczos produced no estimate".into()))
}

/// Korn constants over `levels` for the benchmark boundary configuration,
/// plus the all-Neumann control on the coarsest level.
pub fn korn_report(kind: ElementKind, levels: &[usize]) -> Result<(Vec<KornResult>, Report)> {
    let results = levels
        .iter()
        .map(|&n| korn_coercivity(kind, n, &BoundaryPartition::neumann_top()))
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new();
    for r in &results {
        report.push(CheckRow::new("korn", kind.name(), Some(r.level), "lambda_min", Expectation::Above(0.0), r.lambda_min));
    }
    if results.len() > 1 {
        let max = results.iter().map(|r| r.lambda_min).fold(0.0, f64::max);
        let min = results.iter().map(|r| r.lambda_min).fold(f64::INFINITY, f64::min);
        report.push(CheckRow::new("korn", kind.name(), None, "lambda_min_over_max", Expectation::AtLeast(0.5), min / max));
    }
    if let Some(&n0) = levels.first() {
        let c = korn_coercivity(kind, n0, &BoundaryPartition::all_neumann())?;
        report.push(CheckRow::new(
            "korn",
            kind.name(),
            Some(n0),
            "lambda_min_all_neumann",
            Expectation::Below(1e-8),
            c.lambda_min.abs(),
        ));
    }
    Ok((results, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_lanczos_agree() {
        let mesh = build_cube_mesh(1, &BoundaryPartition::neumann_top()).unwrap();
        let (v, p) = build_spaces(&mesh, Pair::standard(ElementKind::Nc2r));
        let sys = assemble(&mesh, &v, &p, AssemblyOptions::new(0.5), &LoadData::default()).unwrap();
        let g = vector_gram(&mesh, &v).unwrap();
        let d = dense_korn(&sys.a, &g).unwrap();
        let l = lanczos_korn(&sys.a, &g).unwrap();
        assert!(d > 0.0 && (d - l).abs() < 1e-8 * d.max(1.0), "{d} vs {l}");
    }

    #[test]
    fn rotations_are_detected_without_dirichlet_faces() {
        let r = korn_coercivity(ElementKind::Nc2r, 1, &BoundaryPartition::all_neumann()).unwrap();
        assert!(r.lambda_min.abs() < 1e-8, "{r:?}");
        let r = korn_coercivity(ElementKind::Nc2r, 1, &BoundaryPartition::neumann_top()).unwrap();
        assert!(r.lambda_min > 1e-3);
    }
}
