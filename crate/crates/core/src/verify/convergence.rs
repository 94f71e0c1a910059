//! Convergence study on the cube benchmark and the polynomial patch test.

use super::{observed_rate, CheckRow, Expectation, Report};
use crate::assembly::{
    assemble, energy_seminorm, pressure_error, velocity_errors, AssemblyOptions, LoadData, SaddleSystem,
};
use crate::error::{Error, Result};
use crate::mesh::{build_cube_mesh, BoundaryPartition, Mesh, Point};
use crate::problem::ExactSolution;
use crate::solver::{solve, SolveOptions, SolveReport};
use crate::space::{build_spaces, DiscreteVelocity, Pair, PressureSpace, VelocitySpace};

/// Tolerance on observed rates.
pub const RATE_TOL: f64 = 0.3;

/// Everything produced by one discrete solve against an exact solution.
pub(crate) struct Solved {
    pub mesh: Mesh,
    pub vspace: VelocitySpace,
    pub pspace: PressureSpace,
    pub system: SaddleSystem,
    pub report: SolveReport,
    pub velocity: DiscreteVelocity,
}

pub(crate) fn solve_exact(
    exact: &ExactSolution,
    pair: Pair,
    n: usize,
    partition: &BoundaryPartition,
    options: &SolveOptions,
) -> Result<Solved> {
    let mesh = build_cube_mesh(n, partition)?;
    let (vspace, pspace) = build_spaces(&mesh, pair);
    let f = |x: Point| exact.body_force(x);
    let t = |x: Point, nrm: Point| exact.traction(x, nrm);
    let d = |x: Point| exact.velocity(x);
    let data = LoadData { body_force: Some(&f), traction: Some(&t), dirichlet: Some(&d) };
    let system = assemble(&mesh, &vspace, &pspace, AssemblyOptions::new(exact.mu), &data)?;
    let report = solve(&system, options)?;
    let velocity = report.discrete_velocity(&system);
    Ok(Solved { mesh, vspace, pspace, system, report, velocity })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceLevel {
    pub level: usize,
    pub h: f64,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
    /// `|u - u_h|_{1,h}`.
    pub energy: f64,
    /// `||u - u_h||_0`.
    pub velocity_l2: f64,
    /// `||p - p_h||_0`.
    pub pressure_l2: f64,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub pair: Pair,
    pub levels: Vec<ConvergenceLevel>,
    /// Set when a level failed; the levels before it are kept.
    pub failure: Option<String>,
}

impl ConvergenceReport {
    /// Observed `(energy, velocity L2, pressure L2)` rates between consecutive levels.
    pub fn rates(&self) -> Vec<(usize, [f64; 3])> {
        self.levels
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0], &w[1]);
                let r = |x: f64, y: f64| observed_rate(x, y, a.level, b.level);
                (b.level, [r(a.energy, b.energy), r(a.velocity_l2, b.velocity_l2), r(a.pressure_l2, b.pressure_l2)])
            })
            .collect()
    }

    /// Rates between the two finest levels.
    pub fn final_rates(&self) -> Option<[f64; 3]> {
        self.rates().last().map(|r| r.1)
    }

    /// Expected `(energy, velocity L2, pressure L2)` orders.
    pub fn expected_rates(&self) -> [f64; 3] {
        let k = self.pair.order() as f64;
        [k, k + 1.0, k]
    }

    /// Per-level errors as informational rows; only the rate between the two
    /// finest levels is asserted.
    pub fn to_report(&self) -> Report {
        let name = self.pair.name();
        let mut report = Report::new();
        for l in &self.levels {
            for (metric, v) in [
                ("velocity_dofs", l.velocity_dofs as f64),
                ("pressure_dofs", l.pressure_dofs as f64),
                ("energy_error", l.energy),
                ("velocity_l2_error", l.velocity_l2),
                ("pressure_l2_error", l.pressure_l2),
            ] {
                report.push(CheckRow::new("rates", name.as_str(), Some(l.level), metric, Expectation::Info, v));
            }
        }
        let rates = self.rates();
        let expected = self.expected_rates();
        for (i, (level, r)) in rates.iter().enumerate() {
            let last = i + 1 == rates.len();
            for (j, metric) in ["energy_rate", "velocity_l2_rate", "pressure_l2_rate"].iter().enumerate() {
                let exp = if last {
                    Expectation::Within { target: expected[j], tol: RATE_TOL }
                } else {
                    Expectation::Info
                };
                report.push(CheckRow::new("rates", name.as_str(), Some(*level), *metric, exp, r[j]));
            }
        }
        if let Some(msg) = &self.failure {
            let mut row = CheckRow::new("rates", name.as_str(), None, "completed", Expectation::Equals(1.0), 0.0);
            row.metric = format!("completed ({})", msg.replace(',', ";"));
            report.push(row);
        }
        report
    }
}

/// Solves the cube benchmark (top face traction-free, other faces no-slip)
/// on each level and measures the errors with exactness-12 quadrature.
pub fn convergence_study(pair: Pair, levels: &[usize], mu: f64, options: &SolveOptions) -> Result<ConvergenceReport> {
    if levels.windows(2).any(|w| w[0] >= w[1]) || levels.is_empty() {
        return Err(Error::InvalidArgument(format!("levels must be strictly increasing, got {levels:?}")));
    }
    let exact = ExactSolution::cube_benchmark(mu);
    let mut out = ConvergenceReport { pair, levels: Vec::new(), failure: None };
    for &n in levels {
        match measure_level(&exact, pair, n, options) {
            Ok(l) => out.levels.push(l),
            Err(e) => {
                out.failure = Some(format!("level {n}: {e}"));
                break;
            }
        }
    }
    Ok(out)
}

fn measure_level(exact: &ExactSolution, pair: Pair, n: usize, options: &SolveOptions) -> Result<ConvergenceLevel> {
    let s = solve_exact(exact, pair, n, &BoundaryPartition::neumann_top(), options)?;
    let u = |x: Point| exact.velocity(x);
    let gu = |x: Point| exact.velocity_gradient(x);
    let ve = velocity_errors(&s.mesh, &s.vspace, &s.velocity, &u, &gu)?;
    let pe = pressure_error(&s.mesh, &s.pspace, &s.report.pressure, &|x| exact.pressure(x), s.system.mean_constraint)?;
    Ok(ConvergenceLevel {
        level: n,
        h: 1.0 / n as f64,
        velocity_dofs: s.system.n_u(),
        pressure_dofs: s.system.n_p(),
        energy: ve.h1_seminorm,
        velocity_l2: ve.l2,
        pressure_l2: pe,
        relative_residual: s.report.relative_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchResult {
    /// `|u_h - Pi u*|_{1,h}`.
    pub velocity: f64,
    /// `||p_h - p*||_0`.
    pub pressure: f64,
}

/// Solves with a divergence-free polynomial velocity of degree `k` and a
/// pressure of degree `k - 1`, for which the discrete solution is exact.
pub fn patch_test(pair: Pair, n: usize, mu: f64, partition: &BoundaryPartition, options: &SolveOptions) -> Result<PatchResult> {
    let exact = ExactSolution::polynomial_patch(pair.order(), mu);
    let s = solve_exact(&exact, pair, n, partition, options)?;
    let interp = s.vspace.interpolate(&s.mesh, &|x| exact.velocity(x))?;
    let diff = DiscreteVelocity {
        free: s.velocity.free.iter().zip(&interp.free).map(|(a, b)| a - b).collect(),
        fixed: s.velocity.fixed.iter().zip(&interp.fixed).map(|(a, b)| a - b).collect(),
    };
    let velocity = energy_seminorm(&s.mesh, &s.vspace, &diff)?;
    let pressure = pressure_error(&s.mesh, &s.pspace, &s.report.pressure, &|x| exact.pressure(x), s.system.mean_constraint)?;
    Ok(PatchResult { velocity, pressure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementKind;

    #[test]
    fn patch_test_is_exact_for_reduced_order_two() {
        let r = patch_test(
            Pair::standard(ElementKind::Nc2r),
            1,
            1.0,
            &BoundaryPartition::neumann_top(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(r.velocity < 1e-8 && r.pressure < 1e-8, "{r:?}");
    }

    #[test]
    fn study_rejects_unordered_levels() {
        let p = Pair::standard(ElementKind::Nc2r);
        assert!(convergence_study(p, &[2, 1], 1.0, &SolveOptions::default()).is_err());
    }

    #[test]
    fn coarse_study_reports_decreasing_errors() {
        let p = Pair::standard(ElementKind::Nc2r);
        let r = convergence_study(p, &[1, 2], 1.0, &SolveOptions::default()).unwrap();
        assert!(r.failure.is_none());
        assert_eq!(r.levels.len(), 2);
        assert!(r.levels[1].energy < r.levels[0].energy);
        let rows = r.to_report().rows;
        assert_eq!(rows.iter().filter(|x| x.metric.ends_with("_rate")).count(), 3);
    }
}
