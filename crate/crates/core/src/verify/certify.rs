//! Reference-element certification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckRow, Expectation, Report};
use crate::element::{
    div_bubble_image, element_def, face_constraint_nullity, face_moments, reduced_bubble,
    reduced_inclusions_hold, direct_sum_rank, reduced_space_bubble_nullity, ElementKind, MAX_CONDITION,
};
use crate::error::Result;
use crate::mesh::TetGeometry;
use crate::polyquad::homogeneous_exponents;

const CHECK: &str = "certify";

/// `count` tetrahedra with vertices drawn uniformly from the unit cube,
/// rejecting near-degenerate draws (volume below `1e-3`).
pub fn random_tets(seed: u64, count: usize) -> Vec<TetGeometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: [[f64; 3]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random::<f64>()));
        if let Ok(g) = TetGeometry::from_vertices(v, out.len()) {
            if g.volume > 1e-3 {
                out.push(g);
            }
        }
    }
    out
}

/// Largest `|DoF_i(phi_j) - delta_ij|` with the nodal basis pushed to a
/// physical tetrahedron and the functionals evaluated at physical points.
fn biorthogonality_defect(kind: ElementKind, geom: &TetGeometry) -> Result<f64> {
    let def = element_def(kind)?;
    let exactness = kind.shape_degree() + kind.order() + 1;
    let mut worst = 0.0f64;
    for (j, phi) in def.nodal.iter().enumerate() {
        let f = |b: &[f64; 4]| phi.eval(&geom.barycentric(geom.point(b)));
        for (i, dof) in def.dofs.iter().enumerate() {
            let v = dof.apply_fn(&f, exactness)?;
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    Ok(worst)
}

/// All element-level checks: bubble dimensions, unisolvence, the reduced
/// bubble, the divergence image of the bubbles, and the direct-sum and
/// inclusion structure of the shape spaces.
pub fn certify_elements(seed: u64) -> Result<Report> {
    let tets = random_tets(seed, 5);
    let mut report = Report::new();
    for k in [2usize, 3] {
        let label = format!("k{k}");
        let bubble_dim = homogeneous_exponents(4, k + 1).len() - 4 * k * (k + 1) / 2;
        for (t, g) in tets.iter().enumerate() {
            report.push(CheckRow::new(
                CHECK,
                label.as_str(),
                None,
                format!("bubble_nullity_P{}_tet{t}", k + 1),
                Expectation::Equals(bubble_dim as f64),
                face_constraint_nullity(g, k, k + 1)? as f64,
            ));
            report.push(CheckRow::new(
                CHECK,
                label.as_str(),
                None,
                format!("reduced_bubble_nullity_P{k}_tet{t}"),
                Expectation::Equals(1.0),
                face_constraint_nullity(g, k, k)? as f64,
            ));
        }
        let b = reduced_bubble(k)?;
        let moment = face_moments(&b, k)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        report.push(CheckRow::new(
            CHECK,
            label.as_str(),
            None,
            "reduced_bubble_face_moments",
            Expectation::AtMost(1e-12),
            moment,
        ));
        report.push(CheckRow::new(
            CHECK,
            label.as_str(),
            None,
            "reduced_space_bubble_nullity",
            Expectation::Equals(1.0),
            reduced_space_bubble_nullity(k)? as f64,
        ));
        let div = div_bubble_image(k)?;
        report.push(CheckRow::new(
            CHECK,
            label.as_str(),
            None,
            "div_bubble_rank",
            Expectation::Equals((div.target_dim - 1) as f64),
            div.rank as f64,
        ));
        report.push(CheckRow::new(
            CHECK,
            label.as_str(),
            None,
            "div_bubble_mean",
            Expectation::AtMost(1e-12),
            div.max_relative_mean,
        ));
        let (rank, len) = direct_sum_rank(k)?;
        report.push(CheckRow::new(
            CHECK,
            label.as_str(),
            None,
            "direct_sum_rank",
            Expectation::Equals(len as f64),
            rank as f64,
        ));
        report.push(CheckRow::new(
            CHECK,
            label.as_str(),
            None,
            "reduced_inclusions",
            Expectation::Equals(1.0),
            f64::from(u8::from(reduced_inclusions_hold(k)?)),
        ));
    }
    for kind in ElementKind::ALL {
        let def = element_def(kind)?;
        report.push(CheckRow::new(
            CHECK,
            kind.name(),
            None,
            "local_dim",
            Expectation::Equals(kind.local_dim() as f64),
            def.dim() as f64,
        ));
        report.push(CheckRow::new(
            CHECK,
            kind.name(),
            None,
            "vandermonde_condition",
            Expectation::Below(MAX_CONDITION),
            def.condition,
        ));
        let worst = tets
            .iter()
            .map(|g| biorthogonality_defect(kind, g))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        report.push(CheckRow::new(
            CHECK,
            kind.name(),
            None,
            "biorthogonality_defect",
            Expectation::AtMost(1e-9),
            worst,
        ));
    }
    Ok(report)
}
