//! Discrete inf-sup constants.
//!
//! With `G` the broken `H^1` Gram matrix on the free velocity unknowns and
//! `M = L L^T` the block-diagonal pressure mass matrix, the squared constant
//! is the smallest eigenvalue of `L^{-1} B G^{-1} B^T L^{-T}` on the
//! complement of `w = L^T e`, `e` being the constant pressure. On a no-slip
//! boundary `w` spans the kernel, so it is shifted away by adding
//! `SHIFT * w w^T / |w|^2` and the smallest eigenvalue of the full matrix is
//! taken. The shift exceeds the largest possible eigenvalue (`|div v|^2 <=
//! 3 |grad v|^2`).

use faer::linalg::solvers::SolveCore;
use faer::{Conj, Mat, Side};

use super::{CheckRow, Expectation, Report};
use crate::assembly::{assemble, pressure_mass_blocks, vector_gram, AssemblyOptions, LoadData};
use crate::error::{Error, Result};
use crate::linalg::{self, SparseMat};
use crate::mesh::{build_cube_mesh, BoundaryPartition, Mesh};
use crate::space::{build_spaces, Pair, PressureSpace, VelocitySpace};

const SHIFT: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct InfSupResult {
    pub level: usize,
    pub pair: Pair,
    pub beta: f64,
    /// `||S x - lambda x||` for the computed extremal eigenpair.
    pub eigen_residual: f64,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
}

/// Inf-sup constant of `pair` on the level-`n` cube mesh with a no-slip
/// boundary and mean-zero pressures.
pub fn infsup_constant(pair: Pair, n: usize) -> Result<InfSupResult> {
    let mesh = build_cube_mesh(n, &BoundaryPartition::all_dirichlet())?;
    let (v, p) = build_spaces(&mesh, pair);
    let (beta, eigen_residual) = infsup_on(&mesh, &v, &p)?;
    Ok(InfSupResult {
        level: n,
        pair,
        beta,
        eigen_residual,
        velocity_dofs: v.n_free(),
        pressure_dofs: p.n_dofs(),
    })
}

fn infsup_on(mesh: &Mesh, v: &VelocitySpace, p: &PressureSpace) -> Result<(f64, f64)> {
    let sys = assemble(mesh, v, p, AssemblyOptions::new(1.0), &LoadData::default())?;
    let gram = vector_gram(mesh, v)?;
    let np = p.n_dofs();
    let nu = v.n_free();
    if np == 0 {
        return Err(Error::InvalidArgument("empty pressure space".into()));
    }
    // columns of B^T, then G^{-1} B^T
    let bt = sparse_transpose_dense(&sys.b, nu);
    let mut x = bt;
    if nu > 0 {
        let llt = gram
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Eigen(format!("velocity Gram matrix is not positive definite: {e:?}")))?;
        llt.solve_in_place_with_conj(Conj::No, x.as_mut());
    }
    let mut s = Mat::<f64>::zeros(np, np);
    for j in 0..np {
        let col: Vec<f64> = (0..nu).map(|i| x[(i, j)]).collect();
        let y = linalg::spmv(&sys.b, &col);
        for i in 0..np {
            s[(i, j)] = y[i];
        }
    }
    drop(x);
    // L^{-1} S L^{-T} blockwise
    let blocks = pressure_mass_blocks(mesh, p);
    let m = p.local_dim();
    let linv: Vec<Mat<f64>> = blocks
        .iter()
        .map(|b| {
            b.llt(Side::Lower)
                .map(|l| linalg::inverse(l.L()))
                .map_err(|e| Error::Eigen(format!("pressure mass block is not positive definite: {e:?}")))
        })
        .collect::<Result<_>>()?;
    let ntet = blocks.len();
    let mut t = Mat::<f64>::zeros(np, np);
    for a in 0..ntet {
        let rows = s.as_ref().subrows(a * m, m);
        let prod = &linv[a] * rows;
        t.as_mut().subrows_mut(a * m, m).copy_from(&prod);
    }
    for a in 0..ntet {
        let cols = t.as_ref().subcols(a * m, m);
        let prod = cols * linv[a].transpose();
        s.as_mut().subcols_mut(a * m, m).copy_from(&prod);
    }
    // symmetrize against round-off, then shift the constant direction
    let mut w = vec![0.0; np];
    let e = p.constant_vector(1.0);
    for a in 0..ntet {
        let l = blocks[a].llt(Side::Lower).expect("factorized above");
        let lf = l.L();
        for i in 0..m {
            w[a * m + i] = (i..m).map(|r| lf[(r, i)] * e[a * m + r]).sum();
        }
    }
    let wn2 = linalg::dot(&w, &w);
    for j in 0..np {
        for i in 0..j {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    for j in 0..np {
        for i in 0..np {
            s[(i, j)] += SHIFT * w[i] * w[j] / wn2;
        }
    }
    let (vals, vecs) = linalg::sym_eigen(s.as_ref())?;
    let lambda = vals[0];
    let u = vecs.col(0);
    let su = &s * u;
    let mut res = 0.0f64;
    for i in 0..np {
        res += (su[i] - lambda * u[i]).powi(2);
    }
    Ok((lambda.max(0.0).sqrt(), res.sqrt()))
}

fn sparse_transpose_dense(b: &SparseMat, nu: usize) -> Mat<f64> {
    let mut m = Mat::zeros(nu, b.nrows());
    let (cp, ri, val) = (b.col_ptr(), b.row_idx(), b.val());
    for j in 0..b.ncols() {
        for k in cp[j]..cp[j + 1] {
            m[(j, ri[k])] += val[k];
        }
    }
    m
}

/// Inf-sup constants over `levels`, with rows asserting positivity and a
/// min/max ratio of at least one half across the levels.
pub fn infsup_report(pair: Pair, levels: &[usize]) -> Result<(Vec<InfSupResult>, Report)> {
    let results = levels.iter().map(|&n| infsup_constant(pair, n)).collect::<Result<Vec<_>>>()?;
    let mut report = Report::new();
    let name = pair.name();
    let stable = pair.is_standard();
    for r in &results {
        let exp = if stable { Expectation::Above(0.0) } else { Expectation::Below(1e-8) };
        report.push(CheckRow::new("infsup", name.as_str(), Some(r.level), "beta", exp, r.beta));
        report.push(CheckRow::new(
            "infsup",
            name.as_str(),
            Some(r.level),
            "eigen_residual",
            Expectation::AtMost(1e-8),
            r.eigen_residual,
        ));
    }
    if stable && results.len() > 1 {
        let max = results.iter().map(|r| r.beta).fold(0.0, f64::max);
        let min = results.iter().map(|r| r.beta).fold(f64::INFINITY, f64::min);
        report.push(CheckRow::new(
            "infsup",
            name.as_str(),
            None,
            "beta_min_over_max",
            Expectation::AtLeast(0.5),
            if max > 0.0 { min / max } else { 0.0 },
        ));
    }
    Ok((results, report))
}
