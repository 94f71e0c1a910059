//! Degree-of-freedom counts of the four pairs.

use super::{CheckRow, Expectation, Report};
use crate::element::ElementKind;
use crate::error::Result;
use crate::mesh::{build_cube_mesh, BoundaryPartition};
use crate::space::{build_spaces, census_formula, Pair};

const CHECK: &str = "census";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusEntry {
    pub pair: Pair,
    pub level: usize,
    pub velocity: usize,
    pub pressure: usize,
}

impl CensusEntry {
    pub fn total(&self) -> usize {
        self.velocity + self.pressure
    }
}

/// Counts the unknowns of every standard pair on the benchmark boundary
/// configuration, compares them with the closed-form counts, and checks that
/// each reduced pair is smaller than the full pair of the same order.
pub fn census(levels: &[usize]) -> Result<(Vec<CensusEntry>, Report)> {
    let mut entries = Vec::new();
    let mut report = Report::new();
    for &n in levels {
        let mesh = build_cube_mesh(n, &BoundaryPartition::neumann_top())?;
        for pair in Pair::all_standard() {
            let (v, p) = build_spaces(&mesh, pair);
            let e = CensusEntry { pair, level: n, velocity: v.n_free(), pressure: p.n_dofs() };
            let (fu, fp) = census_formula(pair, n);
            let name = pair.name();
            report.push(CheckRow::new(CHECK, name.as_str(), Some(n), "velocity_dofs", Expectation::Equals(fu as f64), e.velocity as f64));
            report.push(CheckRow::new(CHECK, name.as_str(), Some(n), "pressure_dofs", Expectation::Equals(fp as f64), e.pressure as f64));
            entries.push(e);
        }
        for (full, reduced) in [(ElementKind::Nc2, ElementKind::Nc2r), (ElementKind::Nc3, ElementKind::Nc3r)] {
            let find = |k| entries.iter().find(|e| e.level == n && e.pair == Pair::standard(k)).map(|e| e.total());
            if let (Some(f), Some(r)) = (find(full), find(reduced)) {
                report.push(CheckRow::new(
                    CHECK,
                    reduced.name(),
                    Some(n),
                    format!("total_dofs_vs_{}", full.name()),
                    Expectation::Below(f as f64),
                    r as f64,
                ));
            }
        }
    }
    Ok((entries, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_census() {
        let (entries, report) = census(&[1, 2]).unwrap();
        assert!(report.all_pass());
        let nc2 = entries.iter().find(|e| e.level == 1 && e.pair == Pair::standard(ElementKind::Nc2)).unwrap();
        assert_eq!((nc2.velocity, nc2.pressure), (216, 60));
        let nc2r = entries.iter().find(|e| e.level == 1 && e.pair == Pair::standard(ElementKind::Nc2r)).unwrap();
        assert_eq!((nc2r.velocity, nc2r.pressure), (90, 24));
    }
}
