//! Incompressibility of discrete velocities.

use super::convergence::solve_exact;
use super::{CheckRow, Expectation, Report};
use crate::assembly::element_divergence_norms;
use crate::error::Result;
use crate::linalg;
use crate::mesh::BoundaryPartition;
use crate::problem::ExactSolution;
use crate::solver::SolveOptions;
use crate::space::Pair;

/// How incompressibility was measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivergenceMeasure {
    /// `max_T ||div u_h||_{0,T}`; full pairs, whose divergence lies in the
    /// pressure space.
    Elementwise(f64),
    /// `max_i |(B u_h - g)_i|`; reduced pairs, which are only weakly
    /// incompressible. Carries the pointwise maximum for reference.
    WeakResidual { residual: f64, elementwise: f64 },
}

impl DivergenceMeasure {
    pub fn tag(&self) -> &'static str {
        match self {
            DivergenceMeasure::Elementwise(_) => "elementwise_div_max",
            DivergenceMeasure::WeakResidual { .. } => "weak_div_residual_max",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            DivergenceMeasure::Elementwise(v) => v,
            DivergenceMeasure::WeakResidual { residual, .. } => residual,
        }
    }

    pub fn to_report(&self, pair: Pair, level: usize) -> Report {
        let name = pair.name();
        let mut r = Report::new();
        match *self {
            DivergenceMeasure::Elementwise(v) => {
                r.push(CheckRow::new("divfree", name.as_str(), Some(level), self.tag(), Expectation::AtMost(1e-9), v));
            }
            DivergenceMeasure::WeakResidual { residual, elementwise } => {
                r.push(CheckRow::new("divfree", name.as_str(), Some(level), self.tag(), Expectation::AtMost(1e-10), residual));
                r.push(CheckRow::new("divfree", name.as_str(), Some(level), "elementwise_div_max", Expectation::Info, elementwise));
            }
        }
        r
    }
}

/// Solves the cube benchmark on level `n` and measures the divergence of the
/// discrete velocity.
pub fn divfree_check(pair: Pair, n: usize, mu: f64, options: &SolveOptions) -> Result<DivergenceMeasure> {
    let exact = ExactSolution::cube_benchmark(mu);
    let s = solve_exact(&exact, pair, n, &BoundaryPartition::neumann_top(), options)?;
    let elementwise = element_divergence_norms(&s.mesh, &s.vspace, &s.velocity)?.into_iter().fold(0.0, f64::max);
    if pair.is_standard() && !pair.velocity.is_reduced() {
        return Ok(DivergenceMeasure::Elementwise(elementwise));
    }
    let bu = linalg::spmv(&s.system.b, &s.velocity.free);
    let residual = bu.iter().zip(&s.system.g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(DivergenceMeasure::WeakResidual { residual, elementwise })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementKind;

    #[test]
    fn full_pair_is_pointwise_solenoidal() {
        let m = divfree_check(Pair::standard(ElementKind::Nc2), 1, 1.0, &SolveOptions::default()).unwrap();
        assert_eq!(m.tag(), "elementwise_div_max");
        assert!(m.value() <= 1e-9);
    }

    #[test]
    fn reduced_pair_reports_weak_residual() {
        let m = divfree_check(Pair::standard(ElementKind::Nc2r), 1, 1.0, &SolveOptions::default()).unwrap();
        let DivergenceMeasure::WeakResidual { residual, elementwise } = m else { panic!("{m:?}") };
        assert!(residual <= 1e-10);
        assert!(elementwise > 1e-6);
    }
}
