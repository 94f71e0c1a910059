//! Structured tetrahedral meshes of the unit cube.
//!
//! Every cell of an `n x n x n` grid is split into six tetrahedra along its
//! main diagonal (Kuhn/Freudenthal split), so neighbouring cells share
//! conforming faces. Tetrahedra store their vertices in ascending global
//! order; a face's canonical vertex triple is then the ascending restriction
//! of either adjacent tetrahedron, and face barycentrics agree on both sides.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Volumes at or below this are treated as degenerate.
pub const VOLUME_EPS: f64 = 1e-14;

pub type Point = [f64; 3];

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Per-tetrahedron geometric quantities.
#[derive(Clone, Debug)]
pub struct TetGeometry {
    pub vertices: [Point; 4],
    /// Unsigned volume `|T|`.
    pub volume: f64,
    /// Sign of the determinant of `[a1 - a0, a2 - a0, a3 - a0]`.
    pub orientation: f64,
    /// `|F_i|`, face `i` opposite vertex `i`.
    pub face_areas: [f64; 4],
    /// Outward normals `nu_i` of face `i` scaled to length `2 |F_i|`.
    pub scaled_normals: [Point; 4],
    /// `grad lambda_i = -nu_i / (6 |T|)`.
    pub grad_lambda: [Point; 4],
}

impl TetGeometry {
    pub fn from_vertices(vertices: [Point; 4], tet: usize) -> Result<Self> {
        let e1 = sub(vertices[1], vertices[0]);
        let e2 = sub(vertices[2], vertices[0]);
        let e3 = sub(vertices[3], vertices[0]);
        let det = dot(e1, cross(e2, e3));
        let volume = det.abs() / 6.0;
        if volume <= VOLUME_EPS {
            return Err(Error::Geometry { tet, volume });
        }
        // Rows of the inverse Jacobian are the gradients of lambda_1..lambda_3.
        let g1 = cross(e2, e3).map(|c| c / det);
        let g2 = cross(e3, e1).map(|c| c / det);
        let g3 = cross(e1, e2).map(|c| c / det);
        let g0 = [-(g1[0] + g2[0] + g3[0]), -(g1[1] + g2[1] + g3[1]), -(g1[2] + g2[2] + g3[2])];
        let grad_lambda = [g0, g1, g2, g3];
        let scaled_normals = grad_lambda.map(|g| g.map(|c| -6.0 * volume * c));
        let face_areas = scaled_normals.map(|n| norm(n) / 2.0);
        Ok(Self {
            vertices,
            volume,
            orientation: det.signum(),
            face_areas,
            scaled_normals,
            grad_lambda,
        })
    }

    /// Physical point of a barycentric coordinate.
    pub fn point(&self, bary: &[f64]) -> Point {
        let mut p = [0.0; 3];
        for (b, v) in bary.iter().zip(&self.vertices) {
            for c in 0..3 {
                p[c] += b * v[c];
            }
        }
        p
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, x: Point) -> [f64; 4] {
        let d = sub(x, self.vertices[0]);
        let l1 = dot(self.grad_lambda[1], d);
        let l2 = dot(self.grad_lambda[2], d);
        let l3 = dot(self.grad_lambda[3], d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug)]
pub struct FaceRecord {
    /// Global vertex ids, strictly ascending.
    pub vertices: [usize; 3],
    /// `(tet, local face index)` of the one or two adjacent tetrahedra, lower
    /// tet id first.
    pub adjacent: Vec<(usize, usize)>,
    pub tag: BoundaryTag,
    pub area: f64,
    /// Unit normal, outward from the first adjacent tetrahedron.
    pub normal: Point,
}

impl FaceRecord {
    pub fn is_boundary(&self) -> bool {
        self.adjacent.len() == 1
    }

    pub fn centroid(&self, mesh: &Mesh) -> Point {
        let v = self.vertices.map(|i| mesh.vertices[i]);
        [0, 1, 2].map(|c| (v[0][c] + v[1][c] + v[2][c]) / 3.0)
    }
}

type Predicate = Box<dyn Fn(Point) -> bool + Send + Sync>;

/// Splits the boundary of the unit cube into a Dirichlet and a Neumann part.
/// Both predicates are evaluated at face centroids and must partition the
/// boundary faces.
pub struct BoundaryPartition {
    dirichlet: Predicate,
    neumann: Predicate,
    label: String,
}

impl std::fmt::Debug for BoundaryPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryPartition").field("label", &self.label).finish()
    }
}

const PLANE_TOL: f64 = 1e-12;

impl BoundaryPartition {
    pub fn new(
        label: impl Into<String>,
        dirichlet: impl Fn(Point) -> bool + Send + Sync + 'static,
        neumann: impl Fn(Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self { dirichlet: Box::new(dirichlet), neumann: Box::new(neumann), label: label.into() }
    }

    pub fn all_dirichlet() -> Self {
        Self::new("dirichlet", |_| true, |_| false)
    }

    pub fn all_neumann() -> Self {
        Self::new("neumann", |_| false, |_| true)
    }

    /// Neumann on the top face `z = 1`, Dirichlet elsewhere.
    pub fn neumann_top() -> Self {
        Self::new(
            "neumann-top",
            |x| (x[2] - 1.0).abs() > PLANE_TOL,
            |x| (x[2] - 1.0).abs() <= PLANE_TOL,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn classify(&self, centroid: Point) -> Result<BoundaryTag> {
        match ((self.dirichlet)(centroid), (self.neumann)(centroid)) {
            (true, false) => Ok(BoundaryTag::Dirichlet),
            (false, true) => Ok(BoundaryTag::Neumann),
            (true, true) => Err(Error::Configuration(format!(
                "boundary face at {centroid:?} is both Dirichlet and Neumann"
            ))),
            (false, false) => Err(Error::Configuration(format!(
                "boundary face at {centroid:?} is neither Dirichlet nor Neumann"
            ))),
        }
    }
}

/// An immutable tetrahedral mesh with face connectivity.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Vertex ids of each tetrahedron, ascending.
    pub tets: Vec<[usize; 4]>,
    pub faces: Vec<FaceRecord>,
    /// `tet_faces[t][i]` is the face opposite local vertex `i`.
    pub tet_faces: Vec<[usize; 4]>,
    pub geometry: Vec<TetGeometry>,
    /// Grid parameter `n`; the mesh size is `1 / n`.
    pub level: usize,
    face_index: HashMap<[usize; 3], usize>,
}

/// Axis orderings of the six Kuhn tetrahedra of a cell.
const KUHN_PATHS: [[usize; 3]; 6] =
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Builds the Kuhn mesh of `(0,1)^3` with `n` cells per direction.
pub fn build_cube_mesh(n: usize, partition: &BoundaryPartition) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("mesh level n must be at least 1".into()));
    }
    let m = n + 1;
    let h = 1.0 / n as f64;
    let vid = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for path in KUHN_PATHS {
                    let mut c = [i, j, k];
                    let mut tet = [vid(i, j, k); 4];
                    for (step, &axis) in path.iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = vid(c[0], c[1], c[2]);
                    }
                    // each step increases the id, so the path is ascending
                    debug_assert!(tet.windows(2).all(|w| w[0] < w[1]));
                    tets.push(tet);
                }
            }
        }
    }
    Mesh::from_parts(vertices, tets, n, partition)
}

impl Mesh {
    /// Builds connectivity and geometry. Tetrahedron vertex lists are sorted
    /// ascending before use.
    pub fn from_parts(
        vertices: Vec<Point>,
        mut tets: Vec<[usize; 4]>,
        level: usize,
        partition: &BoundaryPartition,
    ) -> Result<Self> {
        for t in &mut tets {
            t.sort_unstable();
        }
        let geometry = tets
            .iter()
            .enumerate()
            .map(|(id, t)| TetGeometry::from_vertices(t.map(|v| vertices[v]), id))
            .collect::<Result<Vec<_>>>()?;

        let mut faces: Vec<FaceRecord> = Vec::new();
        let mut face_index = HashMap::new();
        let mut tet_faces = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter().enumerate() {
            let mut ids = [0; 4];
            for (local, id) in ids.iter_mut().enumerate() {
                let key = local_face_vertices(local).map(|l| tet[l]);
                *id = *face_index.entry(key).or_insert_with(|| {
                    let g = &geometry[t];
                    let nu = g.scaled_normals[local];
                    faces.push(FaceRecord {
                        vertices: key,
                        adjacent: Vec::with_capacity(2),
                        tag: BoundaryTag::Interior,
                        area: g.face_areas[local],
                        normal: nu.map(|c| c / norm(nu)),
                    });
                    faces.len() - 1
                });
                let face = &mut faces[*id];
                if face.adjacent.len() == 2 {
                    return Err(Error::InvalidArgument(format!(
                        "face {key:?} is shared by more than two tetrahedra"
                    )));
                }
                face.adjacent.push((t, local));
            }
            tet_faces.push(ids);
        }
        let mut mesh = Self { vertices, tets, faces, tet_faces, geometry, level, face_index };
        for f in 0..mesh.faces.len() {
            if mesh.faces[f].is_boundary() {
                let c = mesh.faces[f].centroid(&mesh);
                mesh.faces[f].tag = partition.classify(c)?;
            }
        }
        Ok(mesh)
    }

    pub fn tet_geometry(&self, tet: usize) -> Result<&TetGeometry> {
        self.geometry
            .get(tet)
            .ok_or_else(|| Error::InvalidArgument(format!("tet {tet} out of range")))
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn face_id(&self, key: [usize; 3]) -> Option<usize> {
        self.face_index.get(&key).copied()
    }

    pub fn count_faces(&self, tag: BoundaryTag) -> usize {
        self.faces.iter().filter(|f| f.tag == tag).count()
    }

    pub fn has_neumann(&self) -> bool {
        self.count_faces(BoundaryTag::Neumann) > 0
    }

    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    /// Whether no boundary face touches the vertex.
    pub fn is_interior_vertex(&self, v: usize) -> bool {
        v < self.vertices.len()
            && !self.faces.iter().any(|f| f.is_boundary() && f.vertices.contains(&v))
    }

    pub fn vertex_nearest(&self, x: Point) -> usize {
        (0..self.vertices.len())
            .min_by(|&a, &b| {
                norm(sub(self.vertices[a], x)).total_cmp(&norm(sub(self.vertices[b], x)))
            })
            .unwrap_or(0)
    }

    /// The star of tetrahedra around an interior vertex.
    pub fn macro_element(&self, vertex: usize) -> Result<MacroElement> {
        if !self.is_interior_vertex(vertex) {
            return Err(Error::InvalidArgument(format!(
                "vertex {vertex} is not an interior vertex"
            )));
        }
        let tets: Vec<usize> =
            (0..self.tets.len()).filter(|&t| self.tets[t].contains(&vertex)).collect();
        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for &t in &tets {
            for f in self.tet_faces[t] {
                if !seen.insert(f) {
                    continue;
                }
                let inside = self.faces[f].adjacent.iter().filter(|(a, _)| tets.contains(a)).count();
                if inside == 2 {
                    interior_faces.push(f);
                } else {
                    boundary_faces.push(f);
                }
            }
        }
        Ok(MacroElement { vertex, tets, interior_faces, boundary_faces })
    }
}

/// Local vertices of face `i` (opposite local vertex `i`), ascending.
pub fn local_face_vertices(i: usize) -> [usize; 3] {
    match i {
        0 => [1, 2, 3],
        1 => [0, 2, 3],
        2 => [0, 1, 3],
        3 => [0, 1, 2],
        _ => panic!("local face index {i} out of range"),
    }
}

/// The tetrahedra around an interior vertex together with the faces interior
/// to and on the boundary of their union.
#[derive(Clone, Debug)]
pub struct MacroElement {
    pub vertex: usize,
    pub tets: Vec<usize>,
    pub interior_faces: Vec<usize>,
    pub boundary_faces: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(n: usize) -> Mesh {
        build_cube_mesh(n, &BoundaryPartition::neumann_top()).unwrap()
    }

    #[test]
    fn single_cell_counts() {
        let m = cube(1);
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.tets.len(), 6);
        assert_eq!(m.faces.len(), 18);
        assert_eq!(m.faces.iter().filter(|f| f.is_boundary()).count(), 12);
        assert_eq!(m.count_faces(BoundaryTag::Interior), 6);
    }

    #[test]
    fn counting_formulas() {
        for n in 1..=4 {
            let m = cube(n);
            assert_eq!(m.vertices.len(), (n + 1).pow(3));
            assert_eq!(m.tets.len(), 6 * n.pow(3));
            assert_eq!(m.faces.iter().filter(|f| f.is_boundary()).count(), 12 * n * n);
            assert_eq!(m.count_faces(BoundaryTag::Neumann), 2 * n * n);
            assert!((m.total_volume() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_level_is_rejected() {
        assert!(matches!(
            build_cube_mesh(0, &BoundaryPartition::all_dirichlet()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn overlapping_or_gapped_partitions_are_rejected() {
        let overlap = BoundaryPartition::new("overlap", |_| true, |x| x[2] > 0.99);
        assert!(matches!(build_cube_mesh(1, &overlap), Err(Error::Configuration(_))));
        let gap = BoundaryPartition::new("gap", |x| x[0] < 1e-9, |_| false);
        assert!(matches!(build_cube_mesh(1, &gap), Err(Error::Configuration(_))));
    }

    #[test]
    fn reference_tet_geometry() {
        let g = TetGeometry::from_vertices(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            0,
        )
        .unwrap();
        assert!((g.volume - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(g.grad_lambda[0], [-1.0, -1.0, -1.0]);
        assert!((g.face_areas[0] - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_tet_is_a_geometry_error() {
        let flat = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(matches!(TetGeometry::from_vertices(flat, 7), Err(Error::Geometry { tet: 7, .. })));
    }

    #[test]
    fn barycentric_gradients_are_dual_to_edges() {
        let m = cube(2);
        for g in &m.geometry {
            let scale: f64 = g.scaled_normals.iter().map(|n| norm(*n)).fold(0.0, f64::max);
            for c in 0..3 {
                let s: f64 = g.scaled_normals.iter().map(|n| n[c]).sum();
                assert!(s.abs() <= 1e-13 * scale);
            }
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        let e = sub(g.vertices[j], g.vertices[i]);
                        assert!((dot(g.grad_lambda[i], e) + 1.0).abs() < 1e-12);
                    }
                    for k in 0..4 {
                        if i != j && i != k && j != k {
                            let t = sub(g.vertices[j], g.vertices[k]);
                            assert!(dot(g.grad_lambda[i], t).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn interior_faces_have_matching_canonical_triples() {
        let m = cube(2);
        for f in m.faces.iter().filter(|f| !f.is_boundary()) {
            assert!(f.vertices[0] < f.vertices[1] && f.vertices[1] < f.vertices[2]);
            for &(t, local) in &f.adjacent {
                let key = local_face_vertices(local).map(|l| m.tets[t][l]);
                assert_eq!(key, f.vertices);
            }
            assert!(f.adjacent[0].0 < f.adjacent[1].0);
        }
    }

    #[test]
    fn center_macro_element() {
        let m = cube(2);
        let center = m.vertex_nearest([0.5, 0.5, 0.5]);
        let star = m.macro_element(center).unwrap();
        assert_eq!(star.tets.len(), 24);
        for &t in &star.tets {
            assert!(m.tets[t].contains(&center));
        }
        for &f in &star.interior_faces {
            assert_eq!(m.faces[f].adjacent.len(), 2);
        }
        // every face through the center is interior to the star; the star's
        // boundary faces avoid the center
        for f in &m.faces {
            if f.vertices.contains(&center) {
                let id = m.face_id(f.vertices).unwrap();
                assert!(star.interior_faces.contains(&id));
            }
        }
        for &f in &star.boundary_faces {
            assert!(!m.faces[f].vertices.contains(&center));
        }
        assert_eq!(star.interior_faces.len(), 36);
        assert_eq!(star.boundary_faces.len(), 24);
    }

    #[test]
    fn boundary_vertex_has_no_macro_element() {
        let m = cube(2);
        assert!(matches!(m.macro_element(0), Err(Error::InvalidArgument(_))));
    }
}
