//! File export: legacy VTK meshes and Matrix Market matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{self, SparseMat};
use crate::mesh::Mesh;

/// VTK cell type of a linear tetrahedron.
pub const VTK_TETRA: u8 = 10;

/// Per-cell data attached to a VTK export.
#[derive(Clone, Debug)]
pub enum CellField {
    Scalar(String, Vec<f64>),
    Vector(String, Vec<[f64; 3]>),
}

impl CellField {
    fn len(&self) -> usize {
        match self {
            CellField::Scalar(_, v) => v.len(),
            CellField::Vector(_, v) => v.len(),
        }
    }
}

/// Legacy ASCII VTK unstructured grid.
pub fn vtk_string(mesh: &Mesh, fields: &[CellField]) -> Result<String> {
    for f in fields {
        if f.len() != mesh.n_tets() {
            return Err(Error::DimensionMismatch { expected: mesh.n_tets(), found: f.len() });
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "ncstokes mesh level {}", mesh.level);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    let nt = mesh.n_tets();
    let _ = writeln!(s, "CELLS {} {}", nt, 5 * nt);
    for t in &mesh.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "{VTK_TETRA}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
    }
    for f in fields {
        match f {
            CellField::Scalar(name, v) => {
                let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", sanitize(name));
                for x in v {
                    let _ = writeln!(s, "{x}");
                }
            }
            CellField::Vector(name, v) => {
                let _ = writeln!(s, "VECTORS {} double", sanitize(name));
                for x in v {
                    let _ = writeln!(s, "{} {} {}", x[0], x[1], x[2]);
                }
            }
        }
    }
    Ok(s)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

pub fn write_vtk(path: &Path, mesh: &Mesh, fields: &[CellField]) -> Result<()> {
    fs::write(path, vtk_string(mesh, fields)?)?;
    Ok(())
}

/// Matrix Market `coordinate real general` text with 1-based indices.
pub fn matrix_market_string(a: &SparseMat) -> String {
    let (cp, ri, val) = (a.col_ptr(), a.row_idx(), a.val());
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), val.len());
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            let _ = writeln!(s, "{} {} {:e}", ri[p] + 1, j + 1, val[p]);
        }
    }
    s
}

pub fn write_matrix_market(path: &Path, a: &SparseMat) -> Result<()> {
    fs::write(path, matrix_market_string(a))?;
    Ok(())
}

/// Parses `coordinate real general` Matrix Market text.
pub fn parse_matrix_market(text: &str) -> Result<SparseMat> {
    let bad = |m: &str| Error::InvalidArgument(format!("matrix market: {m}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    if !header.to_ascii_lowercase().starts_with("%%matrixmarket matrix coordinate real general") {
        return Err(bad("unsupported header"));
    }
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("missing size line"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("bad size line")))
        .collect::<Result<_>>()?;
    let [nrows, ncols, nnz] = size[..] else { return Err(bad("size line needs three integers")) };
    let mut trip = Vec::with_capacity(nnz);
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(bad("entry line needs three fields"));
        }
        let i: usize = t[0].parse().map_err(|_| bad("bad row index"))?;
        let j: usize = t[1].parse().map_err(|_| bad("bad column index"))?;
        let v: f64 = t[2].parse().map_err(|_| bad("bad value"))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(bad("index out of range"));
        }
        trip.push(faer::sparse::Triplet::new(i - 1, j - 1, v));
    }
    if trip.len() != nnz {
        return Err(bad("entry count does not match the size line"));
    }
    linalg::sparse_from_triplets(nrows, ncols, &trip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cube_mesh, BoundaryPartition};

    #[test]
    fn vtk_layout() {
        let mesh = build_cube_mesh(1, &BoundaryPartition::all_dirichlet()).unwrap();
        let vols: Vec<f64> = mesh.geometry.iter().map(|g| g.volume).collect();
        let s = vtk_string(&mesh, &[CellField::Scalar("volume".into(), vols)]).unwrap();
        assert!(s.contains("POINTS 8 double"));
        assert!(s.contains("CELLS 6 30"));
        assert_eq!(s.lines().filter(|l| *l == "10").count(), 6);
        assert!(s.contains("SCALARS volume double 1"));
        assert!(vtk_string(&mesh, &[CellField::Scalar("x".into(), vec![1.0])]).is_err());
    }

    #[test]
    fn matrix_market_round_trip() {
        let trip = [
            faer::sparse::Triplet::new(0, 0, 2.5),
            faer::sparse::Triplet::new(2, 1, -1e-17),
            faer::sparse::Triplet::new(1, 2, 3.0),
        ];
        let a = linalg::sparse_from_triplets(3, 3, &trip).unwrap();
        let b = parse_matrix_market(&matrix_market_string(&a)).unwrap();
        assert_eq!(linalg::to_dense(&a), linalg::to_dense(&b));
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1\n").is_err());
    }
}
