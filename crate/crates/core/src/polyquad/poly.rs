use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::mesh::TetGeometry;

use super::{integrate_monomial_exact, Simplex};

/// Multi-indices of `nvars` variables with total degree `<= degree`, in
/// graded order (all degree-0 terms, then degree 1, ...). The graded order
/// makes the table for a smaller degree a prefix of a larger one.
pub(crate) struct MonomialTable {
    pub exps: Vec<[u8; 4]>,
    index: HashMap<[u8; 4], usize>,
}

impl MonomialTable {
    fn build(nvars: usize, degree: usize) -> Self {
        let mut exps = Vec::new();
        for total in 0..=degree {
            exps.extend(homogeneous_exponents(nvars, total));
        }
        let index = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        Self { exps, index }
    }

    pub fn position(&self, e: &[u8; 4]) -> usize {
        self.index[e]
    }
}

/// All exponent vectors of `nvars` variables with total degree exactly `degree`,
/// lexicographically descending (so `l1^d` comes first).
pub fn homogeneous_exponents(nvars: usize, degree: usize) -> Vec<[u8; 4]> {
    fn rec(var: usize, nvars: usize, left: usize, cur: &mut [u8; 4], out: &mut Vec<[u8; 4]>) {
        if var + 1 == nvars {
            cur[var] = left as u8;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[var] = e as u8;
            rec(var + 1, nvars, left - e, cur, out);
        }
        cur[var] = 0;
    }
    let mut out = Vec::new();
    rec(0, nvars, degree, &mut [0; 4], &mut out);
    out
}

pub(crate) fn table(nvars: usize, degree: usize) -> &'static MonomialTable {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static MonomialTable>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    *guard
        .entry((nvars, degree))
        .or_insert_with(|| Box::leak(Box::new(MonomialTable::build(nvars, degree))))
}

/// A polynomial in the barycentric coordinates of a triangle or tetrahedron.
///
/// Coefficients are stored densely over all monomials `lambda^alpha` with
/// `|alpha| <= degree`. Because the barycentric coordinates sum to one this
/// representation is not unique; compare polynomials with
/// [`BaryPoly::approx_eq`] (evaluation on a unisolvent lattice), or map them to
/// the unique homogeneous form with [`BaryPoly::homogeneous_coeffs`].
#[derive(Clone, Debug, PartialEq)]
pub struct BaryPoly {
    simplex: Simplex,
    degree: usize,
    coeffs: Vec<f64>,
}

impl BaryPoly {
    pub fn zero(simplex: Simplex, degree: usize) -> Self {
        let len = table(simplex.nvars(), degree).exps.len();
        Self { simplex, degree, coeffs: vec![0.0; len] }
    }

    pub fn constant(simplex: Simplex, c: f64) -> Self {
        let mut p = Self::zero(simplex, 0);
        p.coeffs[0] = c;
        p
    }

    /// The barycentric coordinate `lambda_i` (zero-based).
    pub fn var(simplex: Simplex, i: usize) -> Self {
        let mut e = [0u8; 4];
        e[i] = 1;
        Self::monomial(simplex, e, 1.0)
    }

    pub fn monomial(simplex: Simplex, exps: [u8; 4], coeff: f64) -> Self {
        debug_assert!(simplex.nvars() == 4 || exps[3] == 0);
        let degree = exps.iter().map(|&e| e as usize).sum();
        let mut p = Self::zero(simplex, degree);
        let pos = table(simplex.nvars(), degree).position(&exps);
        p.coeffs[pos] = coeff;
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` terms.
    pub fn from_terms(simplex: Simplex, terms: &[([u8; 4], f64)]) -> Self {
        terms
            .iter()
            .fold(Self::zero(simplex, 0), |acc, &(e, c)| &acc + &Self::monomial(simplex, e, c))
    }

    pub fn simplex(&self) -> Simplex {
        self.simplex
    }

    /// Degree bound of the storage (an upper bound on the true degree).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Iterates the nonzero `(exponents, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = ([u8; 4], f64)> + '_ {
        let t = table(self.simplex.nvars(), self.degree);
        self.coeffs
            .iter()
            .zip(&t.exps)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, e)| (*e, *c))
    }

    fn with_degree(&self, degree: usize) -> Self {
        debug_assert!(degree >= self.degree);
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(table(self.simplex.nvars(), degree).exps.len(), 0.0);
        Self { simplex: self.simplex, degree, coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            simplex: self.simplex,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(self.simplex, 1.0), |acc, _| &acc * self)
    }

    /// Evaluates at a barycentric point (length 3 or 4, matching the simplex).
    pub fn eval(&self, bary: &[f64]) -> f64 {
        let nv = self.simplex.nvars();
        debug_assert_eq!(bary.len(), nv);
        let mut powers = [[1.0f64; 17]; 4];
        for v in 0..nv {
            for e in 1..=self.degree.min(16) {
                powers[v][e] = powers[v][e - 1] * bary[v];
            }
        }
        let t = table(nv, self.degree);
        let mut s = 0.0;
        for (c, e) in self.coeffs.iter().zip(&t.exps) {
            if *c != 0.0 {
                let mut m = *c;
                for v in 0..nv {
                    m *= powers[v][e[v] as usize];
                }
                s += m;
            }
        }
        s
    }

    /// Partial derivative with respect to `lambda_var`, treating the
    /// barycentric coordinates as independent variables.
    pub fn partial(&self, var: usize) -> Self {
        let degree = self.degree.saturating_sub(1);
        let mut out = Self::zero(self.simplex, degree);
        let t = table(self.simplex.nvars(), degree);
        for (mut e, c) in self.terms() {
            if e[var] > 0 {
                let f = e[var] as f64;
                e[var] -= 1;
                out.coeffs[t.position(&e)] += c * f;
            }
        }
        out
    }

    /// Cartesian gradient at a barycentric point of the tetrahedron described
    /// by `geom`, via the chain rule `grad p = sum_i dp/dlambda_i grad lambda_i`.
    pub fn grad(&self, geom: &TetGeometry, bary: &[f64]) -> Result<[f64; 3]> {
        if self.simplex != Simplex::Tet {
            return Err(Error::DimensionMismatch { expected: 4, found: self.simplex.nvars() });
        }
        let mut g = [0.0; 3];
        for i in 0..4 {
            let d = self.partial(i).eval(bary);
            for c in 0..3 {
                g[c] += d * geom.grad_lambda[i][c];
            }
        }
        Ok(g)
    }

    /// Restriction to the face opposite local vertex `local_face`.
    ///
    /// `face_vertex_order[j]` is the local tetrahedron vertex playing the role
    /// of the face's `j`-th vertex, so face barycentric `mu_j` equals
    /// `lambda_{face_vertex_order[j]}` on the face.
    pub fn trace_to_face(&self, local_face: usize, face_vertex_order: [usize; 3]) -> Result<Self> {
        if self.simplex != Simplex::Tet {
            return Err(Error::DimensionMismatch { expected: 4, found: self.simplex.nvars() });
        }
        if local_face > 3 {
            return Err(Error::InvalidArgument(format!("local face {local_face} out of range")));
        }
        let mut seen = [false; 4];
        for &v in &face_vertex_order {
            if v > 3 || v == local_face || seen[v] {
                return Err(Error::InvalidArgument(format!(
                    "{face_vertex_order:?} is not an ordering of the vertices of face {local_face}"
                )));
            }
            seen[v] = true;
        }
        let mut out = Self::zero(Simplex::Triangle, self.degree);
        let t = table(3, self.degree);
        for (e, c) in self.terms() {
            if e[local_face] != 0 {
                continue;
            }
            let fe = [
                e[face_vertex_order[0]],
                e[face_vertex_order[1]],
                e[face_vertex_order[2]],
                0,
            ];
            out.coeffs[t.position(&fe)] += c;
        }
        Ok(out)
    }

    /// Embeds a triangle polynomial into a tetrahedron: face barycentric `j`
    /// becomes `lambda_{face_vertex_order[j]}`.
    pub fn lift_from_face(&self, face_vertex_order: [usize; 3]) -> Self {
        assert_eq!(self.simplex, Simplex::Triangle);
        let mut out = Self::zero(Simplex::Tet, self.degree);
        let t = table(4, self.degree);
        for (e, c) in self.terms() {
            let mut te = [0u8; 4];
            for j in 0..3 {
                te[face_vertex_order[j]] = e[j];
            }
            out.coeffs[t.position(&te)] += c;
        }
        out
    }

    /// Coefficients of the unique homogeneous representation of degree `d`
    /// (`d >= self` true degree), ordered as [`homogeneous_exponents`].
    ///
    /// Lower-degree terms are lifted by multiplying with `(sum lambda)^(d-e)`.
    pub fn homogeneous_coeffs(&self, d: usize) -> Result<Vec<f64>> {
        let nv = self.simplex.nvars();
        let sum = (0..nv).fold(Self::zero(self.simplex, 1), |acc, i| &acc + &Self::var(self.simplex, i));
        let target = homogeneous_exponents(nv, d);
        let index: HashMap<[u8; 4], usize> =
            target.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let mut out = vec![0.0; target.len()];
        for (e, c) in self.terms() {
            let deg: usize = e.iter().map(|&x| x as usize).sum();
            if deg > d {
                return Err(Error::InvalidArgument(format!(
                    "term of degree {deg} exceeds homogeneous degree {d}"
                )));
            }
            let lifted = &Self::monomial(self.simplex, e, c) * &sum.pow((d - deg) as u32);
            for (le, lc) in lifted.terms() {
                let ld: usize = le.iter().map(|&x| x as usize).sum();
                if ld == d {
                    out[index[&le]] += lc;
                }
            }
        }
        Ok(out)
    }

    /// Mean value over the simplex, `(1/|S|) * integral`, computed exactly from
    /// the factorial formula.
    pub fn mean(&self) -> f64 {
        let dim = self.simplex.dim();
        self.terms().map(|(e, c)| c * integrate_monomial_exact(&e[..dim + 1])).sum()
    }

    /// Pointwise comparison on the principal lattice of order `degree`, which
    /// is unisolvent for polynomials of that degree.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.simplex != other.simplex {
            return false;
        }
        let d = self.degree.max(other.degree).max(1);
        let nv = self.simplex.nvars();
        homogeneous_exponents(nv, d).iter().all(|e| {
            let pt: Vec<f64> = e[..nv].iter().map(|&x| x as f64 / d as f64).collect();
            (self.eval(&pt) - other.eval(&pt)).abs() <= tol
        })
    }
}

impl Add for &BaryPoly {
    type Output = BaryPoly;
    fn add(self, rhs: &BaryPoly) -> BaryPoly {
        assert_eq!(self.simplex, rhs.simplex, "simplex mismatch");
        let d = self.degree.max(rhs.degree);
        let mut out = self.with_degree(d);
        for (o, r) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *o += r;
        }
        out
    }
}

impl Sub for &BaryPoly {
    type Output = BaryPoly;
    fn sub(self, rhs: &BaryPoly) -> BaryPoly {
        self + &(-rhs)
    }
}

impl Neg for &BaryPoly {
    type Output = BaryPoly;
    fn neg(self) -> BaryPoly {
        self.scale(-1.0)
    }
}

impl Mul for &BaryPoly {
    type Output = BaryPoly;
    fn mul(self, rhs: &BaryPoly) -> BaryPoly {
        assert_eq!(self.simplex, rhs.simplex, "simplex mismatch");
        let nv = self.simplex.nvars();
        let mut out = BaryPoly::zero(self.simplex, self.degree + rhs.degree);
        let t = table(nv, out.degree);
        for (a, ca) in self.terms() {
            for (b, cb) in rhs.terms() {
                let mut e = [0u8; 4];
                for v in 0..4 {
                    e[v] = a[v] + b[v];
                }
                out.coeffs[t.position(&e)] += ca * cb;
            }
        }
        out
    }
}

impl Add for BaryPoly {
    type Output = BaryPoly;
    fn add(self, rhs: BaryPoly) -> BaryPoly {
        &self + &rhs
    }
}

impl Sub for BaryPoly {
    type Output = BaryPoly;
    fn sub(self, rhs: BaryPoly) -> BaryPoly {
        &self - &rhs
    }
}

impl Mul for BaryPoly {
    type Output = BaryPoly;
    fn mul(self, rhs: BaryPoly) -> BaryPoly {
        &self * &rhs
    }
}
