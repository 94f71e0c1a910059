//! Numerical certifications.
//!
//! Every check appends [`CheckRow`]s to a [`Report`], which serializes to a
//! CSV with the columns `check,pair,level,metric,expected,computed,pass`.
//! All computations are deterministic for a fixed thread count, so two runs
//! of the same checks produce byte-identical CSV.

mod census;
mod certify;
mod convergence;
mod divfree;
mod infsup;
mod korn;
mod macro_element;
mod suite;

use std::fmt::Write as _;
use std::path::Path;

pub use census::{census, CensusEntry};
pub use certify::{certify_elements, random_tets};
pub use convergence::{convergence_study, patch_test, ConvergenceLevel, ConvergenceReport, PatchResult};
pub use divfree::{divfree_check, DivergenceMeasure};
pub use infsup::{infsup_constant, infsup_report, InfSupResult};
pub use korn::{korn_coercivity, korn_report, KornResult};
pub use suite::{default_levels, run_suite, Check, SuiteConfig, CERTIFY_SEED};
pub use macro_element::{macro_nullspace, macro_report, midedge_spread, MacroResult};

use crate::error::Result;

/// A pass/fail criterion attached to a measured value.
#[derive(Clone, Debug, PartialEq)]
pub enum Expectation {
    Equals(f64),
    AtMost(f64),
    Below(f64),
    Above(f64),
    AtLeast(f64),
    Within { target: f64, tol: f64 },
    /// Recorded without an assertion.
    Info,
}

impl Expectation {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Expectation::Equals(v) => x == v,
            Expectation::AtMost(v) => x <= v,
            Expectation::Below(v) => x < v,
            Expectation::Above(v) => x > v,
            Expectation::AtLeast(v) => x >= v,
            Expectation::Within { target, tol } => (x - target).abs() <= tol,
            Expectation::Info => true,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Expectation::Equals(v) => format!("={v}"),
            Expectation::AtMost(v) => format!("<={v:e}"),
            Expectation::Below(v) => format!("<{v:e}"),
            Expectation::Above(v) => format!(">{v}"),
            Expectation::AtLeast(v) => format!(">={v}"),
            Expectation::Within { target, tol } => format!("{target}+-{tol}"),
            Expectation::Info => "-".to_string(),
        }
    }
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub pair: String,
    pub level: Option<usize>,
    pub metric: String,
    pub expected: Expectation,
    pub computed: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(
        check: &str,
        pair: impl Into<String>,
        level: Option<usize>,
        metric: impl Into<String>,
        expected: Expectation,
        computed: f64,
    ) -> Self {
        let pass = expected.holds(computed);
        Self { check: check.into(), pair: pair.into(), level, metric: metric.into(), expected, computed, pass }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<CheckRow>,
}

pub const CSV_HEADER: &str = "check,pair,level,metric,expected,computed,pass";

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let level = r.level.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:e},{}",
                r.check,
                r.pair,
                level,
                r.metric,
                r.expected.describe(),
                r.computed,
                r.pass
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Observed convergence order between two levels `n0 < n1` of the cube mesh.
pub fn observed_rate(e0: f64, e1: f64, n0: usize, n1: usize) -> f64 {
    (e0 / e1).ln() / (n1 as f64 / n0 as f64).ln()
}
