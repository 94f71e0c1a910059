//! Global discrete spaces.
//!
//! A velocity space numbers the scalar degrees of freedom of one component;
//! the three components reuse the same numbering, stacked component-major
//! (`index = c * n_scalar + g`). Face moments live on faces and are shared by
//! both neighbours, which is exactly the weak continuity of the
//! nonconforming spaces. Face moments on constrained faces are kept apart as
//! fixed values so nonhomogeneous boundary data can be imposed by
//! elimination.

use std::fmt;
use std::str::FromStr;

use faer::Mat;

use crate::element::{element_def, ElementDef, ElementKind};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{BoundaryTag, Mesh, Point};
use crate::polyquad::{homogeneous_exponents, tet_rule, BaryPoly, Simplex};

/// Quadrature exactness for integrals against non-polynomial data.
pub const DATA_EXACTNESS: usize = 12;

/// A velocity element paired with a discontinuous pressure degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pair {
    pub velocity: ElementKind,
    pub pressure_degree: usize,
}

impl Pair {
    /// The stable pairing: `P_k` pressures for the full elements, `P_{k-1}`
    /// for the reduced ones.
    pub fn standard(kind: ElementKind) -> Self {
        let k = kind.order();
        Self { velocity: kind, pressure_degree: if kind.is_reduced() { k - 1 } else { k } }
    }

    /// Pressures of the same degree as the velocity shape space. Only the
    /// divergence of a velocity can be seen by `b_h`, so the pressure part
    /// orthogonal to `P_k` is never controlled.
    pub fn unstable_control(kind: ElementKind) -> Self {
        Self { velocity: kind, pressure_degree: kind.shape_degree() }
    }

    pub fn all_standard() -> [Pair; 4] {
        ElementKind::ALL.map(Pair::standard)
    }

    pub fn order(&self) -> usize {
        self.velocity.order()
    }

    pub fn is_standard(&self) -> bool {
        *self == Pair::standard(self.velocity)
    }

    pub fn name(&self) -> String {
        if self.is_standard() {
            self.velocity.name().to_string()
        } else {
            format!("{}-p{}", self.velocity.name(), self.pressure_degree)
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Pair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ElementKind>().map(Pair::standard)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofSlot {
    Free(usize),
    Fixed(usize),
}

/// Coefficients of a discrete velocity: free unknowns and fixed boundary values,
/// each stacked component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteVelocity {
    pub free: Vec<f64>,
    pub fixed: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct VelocitySpace {
    pub kind: ElementKind,
    /// Tetrahedra carrying the space, in assembly order.
    pub tets: Vec<usize>,
    slots: Vec<DofSlot>,
    pub n_scalar_free: usize,
    pub n_scalar_fixed: usize,
}

impl VelocitySpace {
    /// The space on the whole mesh; face moments on Dirichlet faces are fixed.
    pub fn new(mesh: &Mesh, kind: ElementKind) -> Self {
        let tets: Vec<usize> = (0..mesh.n_tets()).collect();
        Self::restricted(mesh, kind, &tets, |f| mesh.faces[f].tag != BoundaryTag::Dirichlet)
    }

    /// The space on a subset of tetrahedra where only faces accepted by
    /// `free_face` carry free face moments.
    pub fn restricted(
        mesh: &Mesh,
        kind: ElementKind,
        tets: &[usize],
        free_face: impl Fn(usize) -> bool,
    ) -> Self {
        let nf = kind.face_dofs();
        let nloc = kind.local_dim();
        let mut face_base: Vec<Option<DofSlot>> = vec![None; mesh.faces.len()];
        let mut slots = Vec::with_capacity(tets.len() * nloc);
        let (mut n_free, mut n_fixed) = (0, 0);
        for &t in tets {
            for &f in &mesh.tet_faces[t] {
                let base = *face_base[f].get_or_insert_with(|| {
                    if free_face(f) {
                        n_free += nf;
                        DofSlot::Free(n_free - nf)
                    } else {
                        n_fixed += nf;
                        DofSlot::Fixed(n_fixed - nf)
                    }
                });
                for w in 0..nf {
                    slots.push(match base {
                        DofSlot::Free(b) => DofSlot::Free(b + w),
                        DofSlot::Fixed(b) => DofSlot::Fixed(b + w),
                    });
                }
            }
            for _ in 0..kind.interior_dofs() {
                slots.push(DofSlot::Free(n_free));
                n_free += 1;
            }
        }
        Self { kind, tets: tets.to_vec(), slots, n_scalar_free: n_free, n_scalar_fixed: n_fixed }
    }

    pub fn def(&self) -> Result<&'static ElementDef> {
        element_def(self.kind)
    }

    pub fn local_dim(&self) -> usize {
        self.kind.local_dim()
    }

    pub fn slot(&self, pos: usize, j: usize) -> DofSlot {
        self.slots[pos * self.local_dim() + j]
    }

    /// Number of free vector unknowns.
    pub fn n_free(&self) -> usize {
        3 * self.n_scalar_free
    }

    pub fn n_fixed(&self) -> usize {
        3 * self.n_scalar_fixed
    }

    pub fn zero(&self) -> DiscreteVelocity {
        DiscreteVelocity { free: vec![0.0; self.n_free()], fixed: vec![0.0; self.n_fixed()] }
    }

    /// Local coefficients of component `c` on the tetrahedron at position `pos`.
    pub fn local_coeffs(&self, pos: usize, c: usize, v: &DiscreteVelocity) -> Vec<f64> {
        (0..self.local_dim())
            .map(|j| match self.slot(pos, j) {
                DofSlot::Free(g) => v.free[c * self.n_scalar_free + g],
                DofSlot::Fixed(g) => v.fixed[c * self.n_scalar_fixed + g],
            })
            .collect()
    }

    /// Degrees of freedom of a vector field. Face moments shared by two
    /// tetrahedra are computed once, from the first.
    pub fn interpolate(
        &self,
        mesh: &Mesh,
        u: &(dyn Fn(Point) -> [f64; 3] + Sync),
    ) -> Result<DiscreteVelocity> {
        let def = self.def()?;
        let mut out = self.zero();
        let mut done_free = vec![false; self.n_scalar_free];
        let mut done_fixed = vec![false; self.n_scalar_fixed];
        for (pos, &t) in self.tets.iter().enumerate() {
            let geom = mesh.tet_geometry(t)?;
            for (j, dof) in def.dofs.iter().enumerate() {
                let (done, target, base, n) = match self.slot(pos, j) {
                    DofSlot::Free(g) => (&mut done_free[g], &mut out.free, g, self.n_scalar_free),
                    DofSlot::Fixed(g) => (&mut done_fixed[g], &mut out.fixed, g, self.n_scalar_fixed),
                };
                if *done {
                    continue;
                }
                *done = true;
                for c in 0..3 {
                    let f = |b: &[f64; 4]| u(geom.point(b))[c];
                    target[c * n + base] = dof.apply_fn(&f, DATA_EXACTNESS)?;
                }
            }
        }
        Ok(out)
    }

    /// Value and gradient (`grad[c][d] = d u_c / d x_d`) at a barycentric point.
    pub fn eval(
        &self,
        mesh: &Mesh,
        v: &DiscreteVelocity,
        pos: usize,
        bary: &[f64],
    ) -> Result<([f64; 3], [[f64; 3]; 3])> {
        if pos >= self.tets.len() {
            return Err(Error::InvalidArgument(format!("tet position {pos} out of range")));
        }
        let def = self.def()?;
        let geom = mesh.tet_geometry(self.tets[pos])?;
        let vals = def.eval_nodal(bary);
        let grads = def.grad_nodal(geom, bary);
        let mut value = [0.0; 3];
        let mut grad = [[0.0; 3]; 3];
        for c in 0..3 {
            let coeffs = self.local_coeffs(pos, c, v);
            for j in 0..coeffs.len() {
                value[c] += coeffs[j] * vals[j];
                for d in 0..3 {
                    grad[c][d] += coeffs[j] * grads[j][d];
                }
            }
        }
        Ok((value, grad))
    }
}

/// Discontinuous pressures of a fixed degree, expanded per tetrahedron in the
/// homogeneous barycentric monomials of that degree.
#[derive(Clone, Debug)]
pub struct PressureSpace {
    pub degree: usize,
    pub tets: Vec<usize>,
    pub basis: Vec<BaryPoly>,
    /// Normalized local mass matrix `(1/|T|) int_T b_i b_j`.
    pub reference_mass: Mat<f64>,
    /// Local coefficients of the constant function one.
    pub constant: Vec<f64>,
}

impl PressureSpace {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        let tets: Vec<usize> = (0..mesh.n_tets()).collect();
        Self::on_tets(&tets, degree)
    }

    pub fn on_tets(tets: &[usize], degree: usize) -> Self {
        let basis: Vec<BaryPoly> = homogeneous_exponents(4, degree)
            .into_iter()
            .map(|e| BaryPoly::monomial(Simplex::Tet, e, 1.0))
            .collect();
        let n = basis.len();
        let reference_mass = Mat::from_fn(n, n, |i, j| (&basis[i] * &basis[j]).mean());
        let constant = BaryPoly::constant(Simplex::Tet, 1.0)
            .homogeneous_coeffs(degree)
            .expect("constants have degree zero");
        Self { degree, tets: tets.to_vec(), basis, reference_mass, constant }
    }

    pub fn local_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.tets.len() * self.local_dim()
    }

    pub fn index(&self, pos: usize, j: usize) -> usize {
        pos * self.local_dim() + j
    }

    pub fn eval(&self, p: &[f64], pos: usize, bary: &[f64]) -> f64 {
        let base = pos * self.local_dim();
        self.basis.iter().enumerate().map(|(j, b)| p[base + j] * b.eval(bary)).sum()
    }

    /// The constant function `c` as a coefficient vector.
    pub fn constant_vector(&self, c: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_dofs());
        for _ in &self.tets {
            v.extend(self.constant.iter().map(|x| x * c));
        }
        v
    }

    /// Row `r` with `r . p = int_Omega p`.
    pub fn mean_row(&self, mesh: &Mesh) -> Vec<f64> {
        let means: Vec<f64> = self.basis.iter().map(BaryPoly::mean).collect();
        let mut row = Vec::with_capacity(self.n_dofs());
        for &t in &self.tets {
            let vol = mesh.geometry[t].volume;
            row.extend(means.iter().map(|m| m * vol));
        }
        row
    }

    pub fn integral(&self, mesh: &Mesh, p: &[f64]) -> f64 {
        linalg::dot(&self.mean_row(mesh), p)
    }

    /// Local `L^2` projection of a scalar field.
    pub fn project(&self, mesh: &Mesh, f: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Vec<f64>> {
        let rule = tet_rule(DATA_EXACTNESS)?;
        let n = self.local_dim();
        let lu = self.reference_mass.partial_piv_lu();
        let mut out = Vec::with_capacity(self.n_dofs());
        for &t in &self.tets {
            let geom = mesh.tet_geometry(t)?;
            let rhs = Mat::from_fn(n, 1, |i, _| {
                rule.integrate(|b| f(geom.point(b)) * self.basis[i].eval(b))
            });
            let sol = faer::linalg::solvers::Solve::solve(&lu, &rhs);
            out.extend((0..n).map(|i| sol[(i, 0)]));
        }
        Ok(out)
    }
}

/// Velocity and pressure spaces of a pair on a mesh.
pub fn build_spaces(mesh: &Mesh, pair: Pair) -> (VelocitySpace, PressureSpace) {
    (VelocitySpace::new(mesh, pair.velocity), PressureSpace::new(mesh, pair.pressure_degree))
}

/// Closed-form degree-of-freedom counts on the `n x n x n` Kuhn mesh with the
/// top face Neumann and the rest Dirichlet: `(velocity unknowns, pressure unknowns)`.
pub fn census_formula(pair: Pair, n: usize) -> (usize, usize) {
    let n3 = n * n * n;
    let free_faces = 12 * n3 - 4 * n * n;
    let per_component = pair.velocity.face_dofs() * free_faces + pair.velocity.interior_dofs() * 6 * n3;
    let p_dim = (pair.pressure_degree + 1) * (pair.pressure_degree + 2) * (pair.pressure_degree + 3) / 6;
    (3 * per_component, 6 * n3 * p_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cube_mesh, BoundaryPartition};

    #[test]
    fn single_cell_counts() {
        let mesh = build_cube_mesh(1, &BoundaryPartition::neumann_top()).unwrap();
        let (v, p) = build_spaces(&mesh, Pair::standard(ElementKind::Nc2));
        assert_eq!(v.n_scalar_free, 24 + 48);
        assert_eq!(v.n_free(), 216);
        assert_eq!(p.n_dofs(), 60);
        let (v, p) = build_spaces(&mesh, Pair::standard(ElementKind::Nc2r));
        assert_eq!(v.n_scalar_free, 30);
        assert_eq!(v.n_free(), 90);
        assert_eq!(p.n_dofs(), 24);
    }

    #[test]
    fn counts_match_formula() {
        for n in 1..=3 {
            let mesh = build_cube_mesh(n, &BoundaryPartition::neumann_top()).unwrap();
            for pair in Pair::all_standard() {
                let (v, p) = build_spaces(&mesh, pair);
                assert_eq!((v.n_free(), p.n_dofs()), census_formula(pair, n), "{pair} n={n}");
            }
        }
    }

    #[test]
    fn constant_vector_is_one() {
        for d in 0..4 {
            let p = PressureSpace::on_tets(&[0, 1], d);
            let c = p.constant_vector(1.0);
            for b in [[0.25; 4], [0.1, 0.2, 0.3, 0.4]] {
                assert!((p.eval(&c, 1, &b) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pair_names() {
        assert_eq!(Pair::standard(ElementKind::Nc3r).pressure_degree, 2);
        assert_eq!(Pair::unstable_control(ElementKind::Nc2).name(), "nc2-p3");
        assert_eq!("nc2r".parse::<Pair>().unwrap(), Pair::standard(ElementKind::Nc2r));
    }
}
