//! Scalar reference elements.
//!
//! Each element is a shape space spanned by barycentric polynomials together
//! with an ordered list of degrees of freedom: `k (k + 1) / 2` normalized face
//! moments on each of the four faces (face `i` is opposite local vertex `i`),
//! followed by either moments against the bubble space (full elements) or the
//! volume average (reduced elements). Face weights are monomials in the face
//! barycentrics taken in ascending local-vertex order; with tetrahedron
//! vertices sorted by global id this is the canonical face order shared by
//! both neighbours.
//!
//! All degrees of freedom are divided by `|F|` or `|T|`, so they are invariant
//! under affine maps and the dual matrix is the same on every tetrahedron.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{local_face_vertices, TetGeometry};
use crate::polyquad::{homogeneous_exponents, tet_rule, tri_rule, BaryPoly, QuadratureRule, Simplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Nc2,
    Nc3,
    Nc2r,
    Nc3r,
}

impl ElementKind {
    pub const ALL: [ElementKind; 4] =
        [ElementKind::Nc2, ElementKind::Nc3, ElementKind::Nc2r, ElementKind::Nc3r];

    /// The order `k` of the face moments (weights of degree `k - 1`).
    pub fn order(self) -> usize {
        match self {
            ElementKind::Nc2 | ElementKind::Nc2r => 2,
            ElementKind::Nc3 | ElementKind::Nc3r => 3,
        }
    }

    pub fn is_reduced(self) -> bool {
        matches!(self, ElementKind::Nc2r | ElementKind::Nc3r)
    }

    /// Polynomial degree needed to represent every shape function.
    pub fn shape_degree(self) -> usize {
        self.order() + 1
    }

    /// Face moments per face.
    pub fn face_dofs(self) -> usize {
        let k = self.order();
        k * (k + 1) / 2
    }

    pub fn interior_dofs(self) -> usize {
        match self {
            ElementKind::Nc2 => 8,
            ElementKind::Nc3 => 11,
            ElementKind::Nc2r | ElementKind::Nc3r => 1,
        }
    }

    pub fn local_dim(self) -> usize {
        4 * self.face_dofs() + self.interior_dofs()
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Nc2 => "nc2",
            ElementKind::Nc3 => "nc3",
            ElementKind::Nc2r => "nc2r",
            ElementKind::Nc3r => "nc3r",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ElementKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown element kind `{s}`")))
    }
}

fn check_order(k: usize) -> Result<()> {
    if k == 2 || k == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("order k = {k} is not supported (2 or 3)")))
    }
}

fn lam(i: usize) -> BaryPoly {
    BaryPoly::var(Simplex::Tet, i)
}

fn cst(c: f64) -> BaryPoly {
    BaryPoly::constant(Simplex::Tet, c)
}

fn sum_of(terms: impl IntoIterator<Item = BaryPoly>) -> BaryPoly {
    terms.into_iter().fold(BaryPoly::zero(Simplex::Tet, 0), |a, b| &a + &b)
}

fn product_of(terms: impl IntoIterator<Item = BaryPoly>) -> BaryPoly {
    terms.into_iter().fold(cst(1.0), |a, b| &a * &b)
}

/// Monomials `mu_0^a mu_1^b` with `a + b <= k - 1` on a triangle, graded.
pub fn face_weights(k: usize) -> Result<Vec<BaryPoly>> {
    check_order(k)?;
    let mut out = Vec::new();
    for deg in 0..k {
        for a in (0..=deg).rev() {
            out.push(BaryPoly::monomial(Simplex::Triangle, [a as u8, (deg - a) as u8, 0, 0], 1.0));
        }
    }
    Ok(out)
}

/// Normalized face moments `(1/|F_i|) int_{F_i} p w` for every face `i` and
/// every weight of order `k - 1`, face-major.
pub fn face_moments(p: &BaryPoly, k: usize) -> Result<Vec<f64>> {
    let weights = face_weights(k)?;
    let mut out = Vec::with_capacity(4 * weights.len());
    for face in 0..4 {
        let tr = p.trace_to_face(face, local_face_vertices(face))?;
        for w in &weights {
            out.push((&tr * w).mean());
        }
    }
    Ok(out)
}

/// Rank of a polynomial family, computed from the unique homogeneous
/// representation of degree `degree`.
pub fn family_rank(polys: &[BaryPoly], degree: usize) -> Result<usize> {
    let rows = polys.iter().map(|p| p.homogeneous_coeffs(degree)).collect::<Result<Vec<_>>>()?;
    linalg::numerical_rank(linalg::mat_from_rows(&rows).as_ref(), linalg::RANK_TOL)
}

const BUBBLE_MOMENT_TOL: f64 = 1e-12;

fn max_face_moment(p: &BaryPoly, k: usize) -> Result<f64> {
    Ok(face_moments(p, k)?.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

fn raw_bubbles(k: usize) -> Vec<BaryPoly> {
    let mut out = Vec::new();
    if k == 2 {
        for i in 0..4 {
            let l = lam(i);
            out.push(&(&l.pow(3).scale(5.0) - &l.pow(2).scale(5.0)) + &l);
        }
        for i in 0..4 {
            let l = lam(i);
            let others: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            let sq = sum_of(others.iter().map(|&j| lam(j).pow(2))).scale(3.0);
            let prod = product_of(others.iter().map(|&j| lam(j))).scale(30.0);
            let p = &(&(&l.pow(2).scale(-2.0) + &l.scale(4.0)) - &cst(2.0)) + &(&sq + &prod);
            out.push(p);
        }
    } else {
        for i in 0..4 {
            let l = lam(i);
            let p = &(&l.pow(4).scale(14.0) - &l.pow(3).scale(21.0))
                + &(&l.pow(2).scale(9.0) - &l);
            out.push(p);
        }
        out.push(product_of((0..4).map(lam)));
        // pair bubbles are invariant under {i, j} <-> {k, l}, so only the
        // three partitions with lambda_1 in the first pair are kept
        for j in 1..4 {
            out.push(pair_bubble(0, j));
        }
        for j in 1..4 {
            out.push(antisymmetric_pair_bubble(0, j));
        }
    }
    out
}

fn complement_pair(i: usize, j: usize) -> (usize, usize) {
    let rest: Vec<usize> = (0..4).filter(|&m| m != i && m != j).collect();
    (rest[0], rest[1])
}

/// Quartic bubble attached to the partition `{i, j} | {k, l}`.
fn pair_bubble(i: usize, j: usize) -> BaryPoly {
    let (a, b) = complement_pair(i, j);
    let s = &lam(i) + &lam(j);
    let t = &lam(a) + &lam(b);
    let pij = &lam(i) * &lam(j);
    let pkl = &lam(a) * &lam(b);
    let head = sum_of([
        s.pow(4).scale(28.0),
        s.pow(3).scale(-53.0),
        s.pow(2).scale(27.0),
        pij.scale(-18.0),
        pkl.scale(3.0),
    ]);
    let tail = sum_of([pij.scale(21.0), cst(-2.0), t.pow(2).scale(-3.0), pkl.scale(-21.0)]);
    &head + &(&s * &tail)
}

/// Quartic bubble that changes sign when the pairs `{i, j}` and `{k, l}` swap:
/// `q(li, lj) - q(lk, ll) - 4 (li^3 + lj^3)(lk + ll) + 4 (li + lj)(lk^3 + ll^3)`
/// with `q(a, b) = a^4 - 8 a^3 b + 18 a^2 b^2 - 8 a b^3 + b^4`.
fn antisymmetric_pair_bubble(i: usize, j: usize) -> BaryPoly {
    let (k, l) = complement_pair(i, j);
    let q = |a: usize, b: usize| {
        let (x, y) = (lam(a), lam(b));
        sum_of([
            x.pow(4),
            (&x.pow(3) * &y).scale(-8.0),
            (&x.pow(2) * &y.pow(2)).scale(18.0),
            (&x * &y.pow(3)).scale(-8.0),
            y.pow(4),
        ])
    };
    let cubes = |a: usize, b: usize| &lam(a).pow(3) + &lam(b).pow(3);
    let sums = |a: usize, b: usize| &lam(a) + &lam(b);
    sum_of([
        q(i, j),
        q(k, l).scale(-1.0),
        (&cubes(i, j) * &sums(k, l)).scale(-4.0),
        (&sums(i, j) * &cubes(k, l)).scale(4.0),
    ])
}

/// Basis of the bubble space of `P_{k+1}(T)`: polynomials whose face moments
/// of order `k - 1` all vanish. Eight functions for `k = 2`, eleven for `k = 3`.
///
/// Every function is checked against the face-moment constraints and the
/// family against linear independence before it is returned.
pub fn bubble_basis(k: usize) -> Result<Vec<BaryPoly>> {
    check_order(k)?;
    let basis = raw_bubbles(k);
    for (idx, b) in basis.iter().enumerate() {
        let m = max_face_moment(b, k)?;
        if m > BUBBLE_MOMENT_TOL {
            return Err(Error::Internal(format!(
                "bubble {idx} of order {k} has a face moment of size {m:e}"
            )));
        }
    }
    let rank = family_rank(&basis, k + 1)?;
    if rank != basis.len() {
        return Err(Error::Internal(format!(
            "bubble basis of order {k} has rank {rank}, expected {}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// The single bubble of `P_k(T)`.
pub fn reduced_bubble(k: usize) -> Result<BaryPoly> {
    check_order(k)?;
    let b = if k == 2 {
        &cst(2.0) - &sum_of((0..4).map(|i| lam(i).pow(2))).scale(4.0)
    } else {
        let cubic = sum_of((0..4).map(|i| &lam(i).pow(2).scale(9.0) - &lam(i).pow(3).scale(11.0)));
        let mut triples = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                for m in j + 1..4 {
                    triples.push(product_of([lam(i), lam(j), lam(m)]));
                }
            }
        }
        &cubic - &sum_of(triples).scale(72.0)
    };
    Ok(b)
}

/// Basis of the complement of the bubble space in `P_{k+1}(T)` built from
/// products of barycentric coordinates over at most three distinct indices.
pub fn complement_basis(k: usize) -> Result<Vec<BaryPoly>> {
    check_order(k)?;
    let mut out = Vec::new();
    let mono = |e: [u8; 4]| BaryPoly::monomial(Simplex::Tet, e, 1.0);
    let top = k as u8;
    for i in 0..4 {
        for j in i + 1..4 {
            let mut e = [0u8; 4];
            e[i] = top;
            e[j] = 1;
            out.push(mono(e));
            let mut e = [0u8; 4];
            e[i] = 1;
            e[j] = top;
            out.push(mono(e));
        }
    }
    if k == 3 {
        for i in 0..4 {
            for j in i + 1..4 {
                for m in j + 1..4 {
                    for sq in [i, j, m] {
                        let mut e = [0u8; 4];
                        e[i] = 1;
                        e[j] = 1;
                        e[m] = 1;
                        e[sq] = 2;
                        out.push(mono(e));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Monomial basis of `P_d(T)`: all homogeneous barycentric monomials of degree `d`.
pub fn full_shape_basis(degree: usize) -> Vec<BaryPoly> {
    homogeneous_exponents(4, degree)
        .into_iter()
        .map(|e| BaryPoly::monomial(Simplex::Tet, e, 1.0))
        .collect()
}

/// `P_k(T)` enriched by `2k - 3` monomials of degree `k + 1`; depends on the
/// local vertex numbering.
pub fn reduced_shape_basis(k: usize) -> Result<Vec<BaryPoly>> {
    check_order(k)?;
    let supplements: &[[u8; 4]] = if k == 2 {
        &[[2, 1, 0, 0], [0, 2, 1, 0], [1, 0, 2, 0]]
    } else {
        &[[2, 0, 1, 1], [1, 2, 0, 1], [1, 1, 2, 0], [0, 1, 1, 2], [1, 3, 0, 0]]
    };
    let mut basis = full_shape_basis(k);
    basis.extend(supplements.iter().map(|&e| BaryPoly::monomial(Simplex::Tet, e, 1.0)));
    let rank = family_rank(&basis, k + 1)?;
    if rank != basis.len() {
        return Err(Error::Internal(format!(
            "reduced shape basis of order {k} has rank {rank}, expected {}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Nullity of the face-moment constraints of order `k - 1` on `P_degree(T)`
/// for a physical tetrahedron, using a Cartesian monomial basis and
/// quadrature at physical points.
pub fn face_constraint_nullity(geom: &TetGeometry, k: usize, degree: usize) -> Result<usize> {
    check_order(k)?;
    let weights = face_weights(k)?;
    let rule = tri_rule(degree + k - 1)?;
    let c = geom.point(&[0.25; 4]);
    let h = geom
        .vertices
        .iter()
        .map(|v| crate::mesh::norm(crate::mesh::sub(*v, c)))
        .fold(0.0, f64::max);
    let mut exps = Vec::new();
    for a in 0..=degree {
        for b in 0..=degree - a {
            for cc in 0..=degree - a - b {
                exps.push([a as i32, b as i32, cc as i32]);
            }
        }
    }
    let mut rows = Vec::new();
    for face in 0..4 {
        let order = local_face_vertices(face);
        for w in &weights {
            let row = exps
                .iter()
                .map(|e| {
                    rule.integrate(|mu| {
                        let mut bary = [0.0; 4];
                        for (slot, &v) in order.iter().enumerate() {
                            bary[v] = mu[slot];
                        }
                        let x = geom.point(&bary);
                        let m: f64 = (0..3).map(|d| ((x[d] - c[d]) / h).powi(e[d])).product();
                        m * w.eval(mu)
                    })
                })
                .collect();
            rows.push(row);
        }
    }
    linalg::nullity(linalg::mat_from_rows(&rows).as_ref(), linalg::RANK_TOL)
}

/// Dimension of the bubble space of `P_{k+1}(T)` on the reference tetrahedron.
pub fn bubble_space_dimension(k: usize) -> Result<usize> {
    face_constraint_nullity(&reference_tet(), k, k + 1)
}

pub fn reference_tet() -> TetGeometry {
    TetGeometry::from_vertices(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        0,
    )
    .expect("reference tetrahedron is nondegenerate")
}

/// A linear functional on a local shape space.
#[derive(Clone, Debug)]
pub enum DofFunctional {
    /// `(1/|F|) int_F v w`, with `w` a triangle polynomial in canonical face order.
    FaceMoment { face: usize, weight: BaryPoly },
    /// `(1/|T|) int_T v w`.
    InteriorMoment { weight: BaryPoly },
    /// `(1/|T|) int_T v`.
    VolumeAverage,
}

impl DofFunctional {
    /// Exact value on a polynomial.
    pub fn apply_poly(&self, p: &BaryPoly) -> Result<f64> {
        Ok(match self {
            DofFunctional::FaceMoment { face, weight } => {
                (&p.trace_to_face(*face, local_face_vertices(*face))? * weight).mean()
            }
            DofFunctional::InteriorMoment { weight } => (p * weight).mean(),
            DofFunctional::VolumeAverage => p.mean(),
        })
    }

    /// Value on a function of the barycentric point, by quadrature of the
    /// given exactness.
    pub fn apply_fn(&self, f: &dyn Fn(&[f64; 4]) -> f64, exactness: usize) -> Result<f64> {
        Ok(match self {
            DofFunctional::FaceMoment { face, weight } => {
                let order = local_face_vertices(*face);
                tri_rule(exactness)?.integrate(|mu| {
                    let mut bary = [0.0; 4];
                    for (slot, &v) in order.iter().enumerate() {
                        bary[v] = mu[slot];
                    }
                    f(&bary) * weight.eval(mu)
                })
            }
            DofFunctional::InteriorMoment { weight } => tet_rule(exactness)?
                .integrate(|b| f(&[b[0], b[1], b[2], b[3]]) * weight.eval(b)),
            DofFunctional::VolumeAverage => {
                tet_rule(exactness)?.integrate(|b| f(&[b[0], b[1], b[2], b[3]]))
            }
        })
    }

    pub fn face(&self) -> Option<usize> {
        match self {
            DofFunctional::FaceMoment { face, .. } => Some(*face),
            _ => None,
        }
    }
}

/// Values and barycentric partial derivatives of the nodal basis at the
/// points of a quadrature rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub npoints: usize,
    pub nbasis: usize,
    values: Vec<f64>,
    partials: Vec<[f64; 4]>,
}

impl Tabulation {
    pub fn value(&self, q: usize, j: usize) -> f64 {
        self.values[q * self.nbasis + j]
    }

    /// Cartesian gradient of nodal function `j` at point `q`.
    pub fn grad(&self, q: usize, j: usize, geom: &TetGeometry) -> [f64; 3] {
        let d = &self.partials[q * self.nbasis + j];
        let mut g = [0.0; 3];
        for (i, di) in d.iter().enumerate() {
            for c in 0..3 {
                g[c] += di * geom.grad_lambda[i][c];
            }
        }
        g
    }
}

/// A reference element: shape space, degrees of freedom and the dual basis.
#[derive(Debug)]
pub struct ElementDef {
    pub kind: ElementKind,
    pub shape: Vec<BaryPoly>,
    pub dofs: Vec<DofFunctional>,
    /// `V[i][j] = dof_i(shape_j)`.
    pub vandermonde: Mat<f64>,
    /// `V^{-1}`; column `j` holds the shape coefficients of nodal function `j`.
    pub dual: Mat<f64>,
    pub condition: f64,
    pub nodal: Vec<BaryPoly>,
    nodal_partials: Vec<[BaryPoly; 4]>,
}

/// Largest admissible Vandermonde condition number.
pub const MAX_CONDITION: f64 = 1e6;

impl ElementDef {
    /// Builds the definition from scratch. [`element_def`] caches the result.
    pub fn build(kind: ElementKind) -> Result<Self> {
        let k = kind.order();
        let shape = if kind.is_reduced() {
            reduced_shape_basis(k)?
        } else {
            full_shape_basis(k + 1)
        };
        let mut dofs = Vec::with_capacity(kind.local_dim());
        let weights = face_weights(k)?;
        for face in 0..4 {
            for w in &weights {
                dofs.push(DofFunctional::FaceMoment { face, weight: w.clone() });
            }
        }
        if kind.is_reduced() {
            dofs.push(DofFunctional::VolumeAverage);
        } else {
            for b in bubble_basis(k)? {
                dofs.push(DofFunctional::InteriorMoment { weight: b });
            }
        }
        let n = shape.len();
        if dofs.len() != n || n != kind.local_dim() {
            return Err(Error::Internal(format!(
                "{kind}: {} shape functions but {} degrees of freedom",
                n,
                dofs.len()
            )));
        }
        let mut vandermonde = Mat::zeros(n, n);
        for (i, dof) in dofs.iter().enumerate() {
            for (j, s) in shape.iter().enumerate() {
                vandermonde[(i, j)] = dof.apply_poly(s)?;
            }
        }
        let condition = linalg::condition_number(vandermonde.as_ref())?;
        if !(condition < MAX_CONDITION) {
            return Err(Error::Internal(format!(
                "{kind}: Vandermonde condition number {condition:e} (unisolvence failure)"
            )));
        }
        let dual = linalg::inverse(vandermonde.as_ref());
        let nodal: Vec<BaryPoly> = (0..n)
            .map(|j| sum_of((0..n).map(|i| shape[i].scale(dual[(i, j)]))))
            .collect();
        for (i, dof) in dofs.iter().enumerate() {
            for (j, phi) in nodal.iter().enumerate() {
                let v = dof.apply_poly(phi)?;
                let target = if i == j { 1.0 } else { 0.0 };
                if (v - target).abs() > 1e-9 {
                    return Err(Error::Internal(format!(
                        "{kind}: dof {i} of nodal function {j} is {v}, expected {target}"
                    )));
                }
            }
        }
        let nodal_partials =
            nodal.iter().map(|p| [p.partial(0), p.partial(1), p.partial(2), p.partial(3)]).collect();
        Ok(Self { kind, shape, dofs, vandermonde, dual, condition, nodal, nodal_partials })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn order(&self) -> usize {
        self.kind.order()
    }

    /// Values of all nodal functions at a barycentric point.
    pub fn eval_nodal(&self, bary: &[f64]) -> Vec<f64> {
        self.nodal.iter().map(|p| p.eval(bary)).collect()
    }

    /// Cartesian gradients of all nodal functions at a barycentric point.
    pub fn grad_nodal(&self, geom: &TetGeometry, bary: &[f64]) -> Vec<[f64; 3]> {
        self.nodal_partials
            .iter()
            .map(|d| {
                let mut g = [0.0; 3];
                for (i, di) in d.iter().enumerate() {
                    let v = di.eval(bary);
                    for c in 0..3 {
                        g[c] += v * geom.grad_lambda[i][c];
                    }
                }
                g
            })
            .collect()
    }

    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        let n = self.dim();
        let mut values = Vec::with_capacity(rule.len() * n);
        let mut partials = Vec::with_capacity(rule.len() * n);
        for p in &rule.points {
            for (phi, d) in self.nodal.iter().zip(&self.nodal_partials) {
                values.push(phi.eval(p));
                partials.push([d[0].eval(p), d[1].eval(p), d[2].eval(p), d[3].eval(p)]);
            }
        }
        Tabulation { npoints: rule.len(), nbasis: n, values, partials }
    }

    /// Degrees of freedom of a scalar function of the barycentric point.
    pub fn interpolate_fn(&self, f: &dyn Fn(&[f64; 4]) -> f64, exactness: usize) -> Result<Vec<f64>> {
        self.dofs.iter().map(|d| d.apply_fn(f, exactness)).collect()
    }
}

/// The cached definition of an element kind.
pub fn element_def(kind: ElementKind) -> Result<&'static ElementDef> {
    static CACHE: [OnceLock<std::result::Result<ElementDef, String>>; 4] =
        [const { OnceLock::new() }; 4];
    let slot = match kind {
        ElementKind::Nc2 => 0,
        ElementKind::Nc3 => 1,
        ElementKind::Nc2r => 2,
        ElementKind::Nc3r => 3,
    };
    CACHE[slot]
        .get_or_init(|| ElementDef::build(kind).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::Internal(e.clone()))
}

/// Result of the divergence-of-bubbles computation.
#[derive(Clone, Debug)]
pub struct DivImage {
    pub rank: usize,
    /// `dim P_k(T)`.
    pub target_dim: usize,
    /// Largest `|mean(q)| / max|q|` over the image generators.
    pub max_relative_mean: f64,
}

/// Rank of `div` applied to the vector bubbles `b e_c` on a fixed skewed
/// tetrahedron, measured in `P_k(T)`.
pub fn div_bubble_image(k: usize) -> Result<DivImage> {
    let bubbles = bubble_basis(k)?;
    let geom = TetGeometry::from_vertices(
        [[0.0, 0.0, 0.0], [1.0, 0.1, 0.0], [0.2, 1.1, 0.1], [0.1, 0.3, 0.9]],
        0,
    )?;
    let lattice: Vec<[f64; 4]> = homogeneous_exponents(4, 2 * k)
        .iter()
        .map(|e| e.map(|x| x as f64 / (2 * k) as f64))
        .collect();
    let mut rows = Vec::new();
    let mut max_relative_mean = 0.0f64;
    for b in &bubbles {
        let partials: Vec<BaryPoly> = (0..4).map(|i| b.partial(i)).collect();
        for c in 0..3 {
            let div = sum_of((0..4).map(|i| partials[i].scale(geom.grad_lambda[i][c])));
            let sup = lattice.iter().map(|p| div.eval(p).abs()).fold(0.0, f64::max);
            if sup > 0.0 {
                max_relative_mean = max_relative_mean.max(div.mean().abs() / sup);
            }
            rows.push(div.homogeneous_coeffs(k)?);
        }
    }
    let rank = linalg::numerical_rank(linalg::mat_from_rows(&rows).as_ref(), linalg::RANK_TOL)?;
    Ok(DivImage { rank, target_dim: homogeneous_exponents(4, k).len(), max_relative_mean })
}

/// Rank of the bubble basis stacked with [`complement_basis`]; equals
/// `dim P_{k+1}(T)` when the sum is direct and exhaustive.
pub fn direct_sum_rank(k: usize) -> Result<(usize, usize)> {
    let mut all = bubble_basis(k)?;
    all.extend(complement_basis(k)?);
    Ok((family_rank(&all, k + 1)?, all.len()))
}

/// Checks `P_k(T) ⊂ P_{k+1}^-(T) ⊂ P_{k+1}(T)` by ranks of stacked families.
pub fn reduced_inclusions_hold(k: usize) -> Result<bool> {
    let pk = full_shape_basis(k);
    let reduced = reduced_shape_basis(k)?;
    let full = full_shape_basis(k + 1);
    let r_reduced = family_rank(&reduced, k + 1)?;
    let stacked_low: Vec<BaryPoly> = pk.iter().chain(&reduced).cloned().collect();
    let stacked_high: Vec<BaryPoly> = reduced.iter().chain(&full).cloned().collect();
    Ok(family_rank(&stacked_low, k + 1)? == r_reduced
        && family_rank(&stacked_high, k + 1)? == full.len())
}

/// Nullity of the face-moment constraints restricted to the reduced shape space.
pub fn reduced_space_bubble_nullity(k: usize) -> Result<usize> {
    let basis = reduced_shape_basis(k)?;
    let cols: Vec<Vec<f64>> = basis.iter().map(|p| face_moments(p, k)).collect::<Result<_>>()?;
    // constraints are rows; the basis functions are the columns
    let m = Mat::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i]);
    linalg::nullity(m.as_ref(), linalg::RANK_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_metadata() {
        let dims: Vec<usize> = ElementKind::ALL.iter().map(|k| k.local_dim()).collect();
        assert_eq!(dims, vec![20, 35, 13, 25]);
        assert_eq!("NC3R".parse::<ElementKind>().unwrap(), ElementKind::Nc3r);
        assert!("nc4".parse::<ElementKind>().is_err());
    }

    #[test]
    fn bubble_counts() {
        assert_eq!(bubble_basis(2).unwrap().len(), 8);
        assert_eq!(bubble_basis(3).unwrap().len(), 11);
        assert!(matches!(bubble_basis(4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cubic_vertex_bubbles_are_orthogonal_to_linear_face_weights() {
        let rule = tri_rule(6).unwrap();
        for (i, phi) in bubble_basis(2).unwrap().iter().take(4).enumerate() {
            for face in 0..4 {
                let order = local_face_vertices(face);
                for m in 0..3 {
                    let v = rule.integrate(|mu| {
                        let mut b = [0.0; 4];
                        for (slot, &v) in order.iter().enumerate() {
                            b[v] = mu[slot];
                        }
                        phi.eval(&b) * mu[m]
                    });
                    assert!(v.abs() < 1e-14, "phi_{i} on face {face} weight {m}: {v}");
                }
            }
        }
    }

    #[test]
    fn pair_bubbles_coincide_for_complementary_pairs() {
        for j in 1..4 {
            let (k, l) = complement_pair(0, j);
            assert!(pair_bubble(0, j).approx_eq(&pair_bubble(k, l), 1e-12));
            let anti = &antisymmetric_pair_bubble(0, j) + &antisymmetric_pair_bubble(k, l);
            assert!(anti.approx_eq(&BaryPoly::zero(Simplex::Tet, 4), 1e-12));
        }
    }

    #[test]
    fn constraint_nullities_on_reference() {
        assert_eq!(bubble_space_dimension(2).unwrap(), 8);
        assert_eq!(bubble_space_dimension(3).unwrap(), 11);
        let r = reference_tet();
        assert_eq!(face_constraint_nullity(&r, 2, 2).unwrap(), 1);
        assert_eq!(face_constraint_nullity(&r, 3, 3).unwrap(), 1);
    }

    #[test]
    fn reduced_bubbles_have_vanishing_moments() {
        for k in [2, 3] {
            let b = reduced_bubble(k).unwrap();
            assert!(max_face_moment(&b, k).unwrap() < 1e-12);
            assert!(b.mean().abs() > 1e-3);
        }
    }

    #[test]
    fn flipping_the_triple_product_sign_breaks_the_cubic_bubble() {
        let cubic = sum_of((0..4).map(|i| &lam(i).pow(2).scale(9.0) - &lam(i).pow(3).scale(11.0)));
        let triples = sum_of([
            product_of([lam(0), lam(1), lam(2)]),
            product_of([lam(0), lam(1), lam(3)]),
            product_of([lam(0), lam(2), lam(3)]),
            product_of([lam(1), lam(2), lam(3)]),
        ]);
        let flipped = &cubic + &triples.scale(72.0);
        assert!(max_face_moment(&flipped, 3).unwrap() > 1e-2);
    }

    #[test]
    fn direct_sum_and_inclusions() {
        assert_eq!(direct_sum_rank(2).unwrap(), (20, 20));
        assert_eq!(direct_sum_rank(3).unwrap(), (35, 35));
        assert!(reduced_inclusions_hold(2).unwrap());
        assert!(reduced_inclusions_hold(3).unwrap());
        assert_eq!(reduced_space_bubble_nullity(2).unwrap(), 1);
        assert_eq!(reduced_space_bubble_nullity(3).unwrap(), 1);
    }

    #[test]
    fn element_definitions_are_unisolvent() {
        for kind in ElementKind::ALL {
            let def = element_def(kind).unwrap();
            assert_eq!(def.dim(), kind.local_dim());
            assert!(def.condition < MAX_CONDITION, "{kind}: {}", def.condition);
        }
    }

    #[test]
    fn nodal_basis_reproduces_constants() {
        for kind in ElementKind::ALL {
            let def = element_def(kind).unwrap();
            let one = cst(1.0);
            let coeffs: Vec<f64> = def.dofs.iter().map(|d| d.apply_poly(&one).unwrap()).collect();
            for p in [[0.25; 4], [0.1, 0.2, 0.3, 0.4], [0.7, 0.1, 0.1, 0.1]] {
                let v: f64 = def.eval_nodal(&p).iter().zip(&coeffs).map(|(a, b)| a * b).sum();
                assert!((v - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn divergence_of_bubbles_misses_only_constants() {
        let d2 = div_bubble_image(2).unwrap();
        assert_eq!((d2.rank, d2.target_dim), (9, 10));
        let d3 = div_bubble_image(3).unwrap();
        assert_eq!((d3.rank, d3.target_dim), (19, 20));
        assert!(d2.max_relative_mean < 1e-12 && d3.max_relative_mean < 1e-12);
    }
}
