//! Saddle-point assembly, Gram and mass matrices, and error norms.

use faer::sparse::Triplet;
use faer::Mat;
use rayon::prelude::*;

use crate::element::Tabulation;
use crate::error::{Error, Result};
use crate::linalg::{self, SparseMat};
use crate::mesh::{local_face_vertices, BoundaryTag, Mesh, Point};
use crate::polyquad::{tet_rule, tri_rule, QuadratureRule};
use crate::space::{DiscreteVelocity, DofSlot, PressureSpace, VelocitySpace, DATA_EXACTNESS};

pub type VectorFn<'a> = &'a (dyn Fn(Point) -> [f64; 3] + Sync);
/// Neumann data as a function of the point and the outward unit normal.
pub type TractionFn<'a> = &'a (dyn Fn(Point, Point) -> [f64; 3] + Sync);

/// Problem data entering the right-hand side.
#[derive(Clone, Copy, Default)]
pub struct LoadData<'a> {
    pub body_force: Option<VectorFn<'a>>,
    pub traction: Option<TractionFn<'a>>,
    /// Boundary velocity imposed on the fixed face moments.
    pub dirichlet: Option<VectorFn<'a>>,
}

/// The discrete Stokes system
/// `[A B^T; B 0] (u, p) = (f, g)`, optionally with the constraint `c . p = 0`.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    /// Viscous block over the free velocity unknowns.
    pub a: SparseMat,
    /// Divergence block, pressure rows by velocity columns.
    pub b: SparseMat,
    pub f: Vec<f64>,
    /// Pressure right-hand side; nonzero only with nonhomogeneous boundary data.
    pub g: Vec<f64>,
    /// `c . p = int_Omega p`.
    pub mean_row: Vec<f64>,
    /// Whether the pressure is fixed by `c . p = 0`. Set when there is no
    /// Neumann boundary, where the pressure is otherwise defined up to a constant.
    pub mean_constraint: bool,
    /// Fixed boundary values used during elimination.
    pub fixed: Vec<f64>,
    /// Per-tetrahedron pressure mass blocks.
    pub pressure_mass: Vec<Mat<f64>>,
    pub mu: f64,
}

impl SaddleSystem {
    pub fn n_u(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.b.nrows()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AssemblyOptions {
    pub mu: f64,
    /// Quadrature exactness for the element matrices; `None` picks the minimum.
    pub exactness: Option<usize>,
}

impl AssemblyOptions {
    pub fn new(mu: f64) -> Self {
        Self { mu, exactness: None }
    }
}

/// Minimum exactness for element matrices: `2k + 2`, raised when the
/// pressure degree requires it.
pub fn required_exactness(vspace: &VelocitySpace, pspace: &PressureSpace) -> usize {
    let k = vspace.kind.order();
    (2 * k + 2).max(k + pspace.degree)
}

struct ElementBlock {
    a: Vec<f64>,
    b: Vec<f64>,
    f: Vec<f64>,
}

struct Tables {
    rule: &'static QuadratureRule,
    tab: Tabulation,
    pressure: Vec<f64>,
    data_rule: &'static QuadratureRule,
    data_tab: Tabulation,
}

fn pressure_table(pspace: &PressureSpace, rule: &QuadratureRule) -> Vec<f64> {
    rule.points.iter().flat_map(|p| pspace.basis.iter().map(move |b| b.eval(p))).collect()
}

fn element_block(
    mesh: &Mesh,
    vspace: &VelocitySpace,
    pspace: &PressureSpace,
    tables: &Tables,
    data: &LoadData<'_>,
    mu: f64,
    pos: usize,
) -> Result<ElementBlock> {
    let t = vspace.tets[pos];
    let geom = mesh.tet_geometry(t)?;
    let n = vspace.local_dim();
    let np = pspace.local_dim();
    let nv = 3 * n;
    let mut a = vec![0.0; nv * nv];
    let mut b = vec![0.0; np * nv];
    let tab = &tables.tab;
    let mut grads = vec![[0.0; 3]; n];
    for q in 0..tab.npoints {
        let w = tables.rule.weights[q] * geom.volume;
        for (j, g) in grads.iter_mut().enumerate() {
            *g = tab.grad(q, j, geom);
        }
        // A[(c,i),(d,j)] = mu (delta_cd g_i . g_j + g_i[d] g_j[c])
        for i in 0..n {
            let gi = grads[i];
            for j in 0..n {
                let gj = grads[j];
                let gg = w * mu * linalg::dot(&gi, &gj);
                for c in 0..3 {
                    let row = (c * n + i) * nv;
                    a[row + c * n + j] += gg;
                    for d in 0..3 {
                        a[row + d * n + j] += w * mu * gi[d] * gj[c];
                    }
                }
            }
        }
        let pq = &tables.pressure[q * np..(q + 1) * np];
        for (m, &qm) in pq.iter().enumerate() {
            for j in 0..n {
                for c in 0..3 {
                    b[m * nv + c * n + j] -= w * qm * grads[j][c];
                }
            }
        }
    }
    let mut f = vec![0.0; nv];
    if let Some(force) = data.body_force {
        let dt = &tables.data_tab;
        for (q, p) in tables.data_rule.points.iter().enumerate() {
            let w = tables.data_rule.weights[q] * geom.volume;
            let fx = force(geom.point(p));
            for j in 0..n {
                let phi = dt.value(q, j);
                for c in 0..3 {
                    f[c * n + j] += w * fx[c] * phi;
                }
            }
        }
    }
    if let Some(traction) = data.traction {
        let def = vspace.def()?;
        let frule = tri_rule(DATA_EXACTNESS)?;
        for (local, &face) in mesh.tet_faces[t].iter().enumerate() {
            if mesh.faces[face].tag != BoundaryTag::Neumann {
                continue;
            }
            let nu = geom.scaled_normals[local];
            let nrm = crate::mesh::norm(nu);
            let normal = nu.map(|x| x / nrm);
            let order = local_face_vertices(local);
            for (mu_pt, fw) in frule.points.iter().zip(&frule.weights) {
                let mut bary = [0.0; 4];
                for (slot, &v) in order.iter().enumerate() {
                    bary[v] = mu_pt[slot];
                }
                let g = traction(geom.point(&bary), normal);
                let w = fw * geom.face_areas[local];
                let vals = def.eval_nodal(&bary);
                for j in 0..n {
                    for c in 0..3 {
                        f[c * n + j] += w * g[c] * vals[j];
                    }
                }
            }
        }
    }
    Ok(ElementBlock { a, b, f })
}

/// Assembles the saddle-point system of a velocity/pressure pair.
pub fn assemble(
    mesh: &Mesh,
    vspace: &VelocitySpace,
    pspace: &PressureSpace,
    options: AssemblyOptions,
    data: &LoadData<'_>,
) -> Result<SaddleSystem> {
    if !(options.mu > 0.0) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {}", options.mu)));
    }
    if vspace.tets != pspace.tets {
        return Err(Error::InvalidArgument("velocity and pressure spaces live on different tets".into()));
    }
    let needed = required_exactness(vspace, pspace);
    let exactness = options.exactness.unwrap_or(needed);
    if exactness < needed {
        return Err(Error::Configuration(format!(
            "quadrature exactness {exactness} is below the required {needed}"
        )));
    }
    let def = vspace.def()?;
    let rule = tet_rule(exactness)?;
    let data_rule = tet_rule(DATA_EXACTNESS)?;
    let tables = Tables {
        rule,
        tab: def.tabulate(rule),
        pressure: pressure_table(pspace, rule),
        data_rule,
        data_tab: if data.body_force.is_some() { def.tabulate(data_rule) } else { def.tabulate(rule) },
    };
    let blocks: Vec<ElementBlock> = (0..vspace.tets.len())
        .into_par_iter()
        .map(|pos| element_block(mesh, vspace, pspace, &tables, data, options.mu, pos))
        .collect::<Result<_>>()?;

    let fixed = match data.dirichlet {
        Some(u) => vspace.interpolate(mesh, u)?.fixed,
        None => vec![0.0; vspace.n_fixed()],
    };
    let n = vspace.local_dim();
    let np = pspace.local_dim();
    let nv = 3 * n;
    let (ns, nfx) = (vspace.n_scalar_free, vspace.n_scalar_fixed);
    let global = |pos: usize, lc: usize| {
        let (c, j) = (lc / n, lc % n);
        match vspace.slot(pos, j) {
            DofSlot::Free(g) => DofSlot::Free(c * ns + g),
            DofSlot::Fixed(g) => DofSlot::Fixed(c * nfx + g),
        }
    };
    let mut a_trip = Vec::with_capacity(blocks.len() * nv * nv);
    let mut b_trip = Vec::with_capacity(blocks.len() * np * nv);
    let mut f = vec![0.0; vspace.n_free()];
    let mut g = vec![0.0; pspace.n_dofs()];
    for (pos, blk) in blocks.iter().enumerate() {
        let map: Vec<DofSlot> = (0..nv).map(|lc| global(pos, lc)).collect();
        for r in 0..nv {
            let DofSlot::Free(gr) = map[r] else { continue };
            f[gr] += blk.f[r];
            for s in 0..nv {
                let v = blk.a[r * nv + s];
                match map[s] {
                    DofSlot::Free(gs) => a_trip.push(Triplet::new(gr, gs, v)),
                    DofSlot::Fixed(gs) => f[gr] -= v * fixed[gs],
                }
            }
        }
        for m in 0..np {
            let row = pspace.index(pos, m);
            for s in 0..nv {
                let v = blk.b[m * nv + s];
                match map[s] {
                    DofSlot::Free(gs) => b_trip.push(Triplet::new(row, gs, v)),
                    DofSlot::Fixed(gs) => g[row] -= v * fixed[gs],
                }
            }
        }
    }
    let a = linalg::sparse_from_triplets(vspace.n_free(), vspace.n_free(), &a_trip)?;
    let b = linalg::sparse_from_triplets(pspace.n_dofs(), vspace.n_free(), &b_trip)?;
    Ok(SaddleSystem {
        a,
        b,
        f,
        g,
        mean_row: pspace.mean_row(mesh),
        mean_constraint: !mesh.has_neumann(),
        fixed,
        pressure_mass: pressure_mass_blocks(mesh, pspace),
        mu: options.mu,
    })
}

/// Scalar broken `H^1` Gram matrix `sum_T int_T grad phi_i . grad phi_j`
/// over the free scalar unknowns.
pub fn scalar_gram(mesh: &Mesh, vspace: &VelocitySpace) -> Result<SparseMat> {
    let def = vspace.def()?;
    let rule = tet_rule(2 * vspace.kind.order())?;
    let tab = def.tabulate(rule);
    let n = vspace.local_dim();
    let locals: Vec<Vec<f64>> = (0..vspace.tets.len())
        .into_par_iter()
        .map(|pos| {
            let geom = &mesh.geometry[vspace.tets[pos]];
            let mut k = vec![0.0; n * n];
            for q in 0..tab.npoints {
                let w = rule.weights[q] * geom.volume;
                let grads: Vec<[f64; 3]> = (0..n).map(|j| tab.grad(q, j, geom)).collect();
                for i in 0..n {
                    for j in 0..n {
                        k[i * n + j] += w * linalg::dot(&grads[i], &grads[j]);
                    }
                }
            }
            k
        })
        .collect();
    let mut trip = Vec::new();
    for (pos, k) in locals.iter().enumerate() {
        for i in 0..n {
            let DofSlot::Free(gi) = vspace.slot(pos, i) else { continue };
            for j in 0..n {
                if let DofSlot::Free(gj) = vspace.slot(pos, j) {
                    trip.push(Triplet::new(gi, gj, k[i * n + j]));
                }
            }
        }
    }
    linalg::sparse_from_triplets(vspace.n_scalar_free, vspace.n_scalar_free, &trip)
}

/// The vector Gram matrix `blockdiag(G, G, G)` of [`scalar_gram`].
pub fn vector_gram(mesh: &Mesh, vspace: &VelocitySpace) -> Result<SparseMat> {
    let g = scalar_gram(mesh, vspace)?;
    let ns = g.nrows();
    let mut trip = Vec::new();
    let (cp, ri, v) = (g.col_ptr(), g.row_idx(), g.val());
    for c in 0..3 {
        for j in 0..ns {
            for p in cp[j]..cp[j + 1] {
                trip.push(Triplet::new(c * ns + ri[p], c * ns + j, v[p]));
            }
        }
    }
    linalg::sparse_from_triplets(3 * ns, 3 * ns, &trip)
}

/// Per-tetrahedron pressure mass blocks `|T| M_ref`, in space order.
pub fn pressure_mass_blocks(mesh: &Mesh, pspace: &PressureSpace) -> Vec<Mat<f64>> {
    pspace
        .tets
        .iter()
        .map(|&t| {
            let vol = mesh.geometry[t].volume;
            Mat::from_fn(pspace.local_dim(), pspace.local_dim(), |i, j| {
                vol * pspace.reference_mass[(i, j)]
            })
        })
        .collect()
}

/// Broken `H^1` seminorm and `L^2` norm errors against an exact velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityErrors {
    pub h1_seminorm: f64,
    pub l2: f64,
}

/// Errors `|u - u_h|_{1,h}` and `||u - u_h||_0` with exactness-12 quadrature.
pub fn velocity_errors(
    mesh: &Mesh,
    vspace: &VelocitySpace,
    uh: &DiscreteVelocity,
    u: VectorFn<'_>,
    grad_u: &(dyn Fn(Point) -> [[f64; 3]; 3] + Sync),
) -> Result<VelocityErrors> {
    let def = vspace.def()?;
    let rule = tet_rule(DATA_EXACTNESS)?;
    let tab = def.tabulate(rule);
    let n = vspace.local_dim();
    let parts: Vec<(f64, f64)> = (0..vspace.tets.len())
        .into_par_iter()
        .map(|pos| {
            let geom = &mesh.geometry[vspace.tets[pos]];
            let coeffs: [Vec<f64>; 3] = std::array::from_fn(|c| vspace.local_coeffs(pos, c, uh));
            let (mut h1, mut l2) = (0.0, 0.0);
            for (q, p) in rule.points.iter().enumerate() {
                let w = rule.weights[q] * geom.volume;
                let x = geom.point(p);
                let (ue, ge) = (u(x), grad_u(x));
                for c in 0..3 {
                    let mut val = 0.0;
                    let mut grad = [0.0; 3];
                    for j in 0..n {
                        val += coeffs[c][j] * tab.value(q, j);
                        let gj = tab.grad(q, j, geom);
                        for d in 0..3 {
                            grad[d] += coeffs[c][j] * gj[d];
                        }
                    }
                    l2 += w * (val - ue[c]).powi(2);
                    for d in 0..3 {
                        h1 += w * (grad[d] - ge[c][d]).powi(2);
                    }
                }
            }
            (h1, l2)
        })
        .collect();
    let (h1, l2) = parts.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    Ok(VelocityErrors { h1_seminorm: h1.sqrt(), l2: l2.sqrt() })
}

/// `|v_h|_{1,h}`.
pub fn energy_seminorm(mesh: &Mesh, vspace: &VelocitySpace, v: &DiscreteVelocity) -> Result<f64> {
    let zero = |_: Point| [0.0; 3];
    let zero_grad = |_: Point| [[0.0; 3]; 3];
    Ok(velocity_errors(mesh, vspace, v, &zero, &zero_grad)?.h1_seminorm)
}

/// `||p - p_h||_0`; with `remove_mean` both are shifted to zero mean first.
pub fn pressure_error(
    mesh: &Mesh,
    pspace: &PressureSpace,
    ph: &[f64],
    p: &(dyn Fn(Point) -> f64 + Sync),
    remove_mean: bool,
) -> Result<f64> {
    let rule = tet_rule(DATA_EXACTNESS)?;
    let table = pressure_table(pspace, rule);
    let np = pspace.local_dim();
    let vol: f64 = pspace.tets.iter().map(|&t| mesh.geometry[t].volume).sum();
    let (mean_h, mean_e) = if remove_mean {
        let exact: f64 = pspace
            .tets
            .iter()
            .map(|&t| {
                let g = &mesh.geometry[t];
                g.volume * rule.integrate(|b| p(g.point(b)))
            })
            .sum();
        (pspace.integral(mesh, ph) / vol, exact / vol)
    } else {
        (0.0, 0.0)
    };
    let total: f64 = pspace
        .tets
        .iter()
        .enumerate()
        .map(|(pos, &t)| {
            let g = &mesh.geometry[t];
            let base = pos * np;
            let mut s = 0.0;
            for (q, pt) in rule.points.iter().enumerate() {
                let vh: f64 = (0..np).map(|m| ph[base + m] * table[q * np + m]).sum();
                s += rule.weights[q] * ((vh - mean_h) - (p(g.point(pt)) - mean_e)).powi(2);
            }
            s * g.volume
        })
        .sum();
    Ok(total.sqrt())
}

/// `||div v_h||_{0,T}` for every tetrahedron of the space.
pub fn element_divergence_norms(
    mesh: &Mesh,
    vspace: &VelocitySpace,
    v: &DiscreteVelocity,
) -> Result<Vec<f64>> {
    let def = vspace.def()?;
    let rule = tet_rule(2 * vspace.kind.order())?;
    let tab = def.tabulate(rule);
    let n = vspace.local_dim();
    Ok((0..vspace.tets.len())
        .into_par_iter()
        .map(|pos| {
            let geom = &mesh.geometry[vspace.tets[pos]];
            let coeffs: [Vec<f64>; 3] = std::array::from_fn(|c| vspace.local_coeffs(pos, c, v));
            let mut s = 0.0;
            for q in 0..tab.npoints {
                let mut div = 0.0;
                for j in 0..n {
                    let g = tab.grad(q, j, geom);
                    for c in 0..3 {
                        div += coeffs[c][j] * g[c];
                    }
                }
                s += rule.weights[q] * geom.volume * div * div;
            }
            s.sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementKind;
    use crate::mesh::{build_cube_mesh, BoundaryPartition};
    use crate::space::{build_spaces, Pair};

    #[test]
    fn symmetric_viscous_block_and_zero_load() {
        let mesh = build_cube_mesh(1, &BoundaryPartition::neumann_top()).unwrap();
        let (v, p) = build_spaces(&mesh, Pair::standard(ElementKind::Nc2r));
        let sys = assemble(&mesh, &v, &p, AssemblyOptions::new(1.0), &LoadData::default()).unwrap();
        let a = linalg::to_dense(&sys.a);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                assert!((a[(i, j)] - a[(j, i)]).abs() <= 1e-12 * a[(i, i)].abs().max(1.0));
            }
        }
        assert!(sys.f.iter().all(|x| *x == 0.0));
        assert!(!sys.mean_constraint);
    }

    #[test]
    fn exactness_shortfall_is_a_configuration_error() {
        let mesh = build_cube_mesh(1, &BoundaryPartition::all_dirichlet()).unwrap();
        let (v, p) = build_spaces(&mesh, Pair::standard(ElementKind::Nc3));
        let opts = AssemblyOptions { mu: 1.0, exactness: Some(5) };
        assert!(matches!(
            assemble(&mesh, &v, &p, opts, &LoadData::default()),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(
            assemble(&mesh, &v, &p, AssemblyOptions::new(0.0), &LoadData::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unit_field_norm() {
        let mesh = build_cube_mesh(2, &BoundaryPartition::all_neumann()).unwrap();
        let (v, _) = build_spaces(&mesh, Pair::standard(ElementKind::Nc2));
        let e = |_: Point| [1.0, 0.0, 0.0];
        let zero = v.zero();
        let err = velocity_errors(&mesh, &v, &zero, &e, &|_| [[0.0; 3]; 3]).unwrap();
        assert!((err.l2 - 1.0).abs() < 1e-13);
        let one = v.interpolate(&mesh, &e).unwrap();
        assert!(energy_seminorm(&mesh, &v, &one).unwrap() < 1e-12);
    }
}
