//! Runs a selection of checks in a fixed order and collects one report.

use std::fmt;
use std::str::FromStr;

use super::{
    census, certify_elements, convergence_study, divfree_check, infsup_report, korn_report, macro_report, patch_test,
    CheckRow, Expectation, Report,
};
use crate::error::{Error, Result};
use crate::mesh::BoundaryPartition;
use crate::solver::SolveOptions;
use crate::space::Pair;

/// Seed of the random tetrahedra used by the element certification.
pub const CERTIFY_SEED: u64 = 20_240_517;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Certify,
    Census,
    Macro,
    InfSup,
    Korn,
    Patch,
    DivFree,
    Rates,
}

impl Check {
    /// Execution order: element checks first, then algebraic checks, then solves.
    pub const ALL: [Check; 8] =
        [Check::Certify, Check::Census, Check::Macro, Check::InfSup, Check::Korn, Check::Patch, Check::DivFree, Check::Rates];

    pub fn name(self) -> &'static str {
        match self {
            Check::Certify => "certify",
            Check::Census => "census",
            Check::Macro => "macro",
            Check::InfSup => "infsup",
            Check::Korn => "korn",
            Check::Patch => "patch",
            Check::DivFree => "divfree",
            Check::Rates => "rates",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Check::ALL
            .into_iter()
            .find(|c| c.name() == t)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown check '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub pairs: Vec<Pair>,
    /// Mesh levels for the level-based checks; `None` selects per-check defaults.
    pub levels: Option<Vec<usize>>,
    pub mu: f64,
    pub checks: Vec<Check>,
    pub solve: SolveOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            pairs: Pair::all_standard().to_vec(),
            levels: None,
            mu: 1.0,
            checks: Check::ALL.to_vec(),
            solve: SolveOptions::default(),
        }
    }
}

/// Default levels: 1..3 for the algebraic checks, 1..4 (order two) or 1..3
/// (order three) for the convergence study, 2 for the divergence check.
pub fn default_levels(check: Check, pair: Pair) -> Vec<usize> {
    match check {
        Check::Rates if pair.order() == 2 => vec![1, 2, 3, 4],
        Check::Census => vec![1, 2, 3, 4],
        Check::DivFree => vec![2],
        Check::Patch | Check::Certify | Check::Macro => vec![1],
        _ => vec![1, 2, 3],
    }
}

impl SuiteConfig {
    fn levels_for(&self, check: Check, pair: Pair) -> Vec<usize> {
        self.levels.clone().unwrap_or_else(|| default_levels(check, pair))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {}", self.mu)));
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidArgument("no pair selected".into()));
        }
        if let Some(l) = &self.levels {
            if l.is_empty() || l.contains(&0) || l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "levels must be positive and strictly increasing, got {l:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Runs the configured checks. A check that errors is recorded as a failing
/// row and the remaining checks still run.
pub fn run_suite(config: &SuiteConfig) -> Result<Report> {
    config.validate()?;
    let mut checks = config.checks.clone();
    checks.sort();
    checks.dedup();
    let mut report = Report::new();
    for check in checks {
        match check {
            Check::Certify => record(&mut report, check, "all", certify_elements(CERTIFY_SEED)),
            Check::Census => {
                let levels = config.levels_for(check, config.pairs[0]);
                record(&mut report, check, "all", census(&levels).map(|r| r.1));
            }
            Check::Macro => record(&mut report, check, "all", macro_report(&config.pairs).map(|r| r.1)),
            Check::InfSup => {
                for &pair in &config.pairs {
                    let levels = config.levels_for(check, pair);
                    record(&mut report, check, &pair.name(), infsup_report(pair, &levels).map(|r| r.1));
                    if pair.is_standard() {
                        let control = Pair::unstable_control(pair.velocity);
                        record(&mut report, check, &control.name(), infsup_report(control, &levels[..1]).map(|r| r.1));
                    }
                }
            }
            Check::Korn => {
                for &pair in &config.pairs {
                    let levels = config.levels_for(check, pair);
                    record(&mut report, check, &pair.name(), korn_report(pair.velocity, &levels).map(|r| r.1));
                }
            }
            Check::Patch => {
                for &pair in &config.pairs {
                    let name = pair.name();
                    for partition in [BoundaryPartition::all_dirichlet(), BoundaryPartition::neumann_top()] {
                        let res = patch_test(pair, 1, config.mu, &partition, &config.solve).map(|r| {
                            let mut rep = Report::new();
                            let tag = partition.label();
                            rep.push(CheckRow::new("patch", name.as_str(), Some(1), format!("velocity_error_{tag}"), Expectation::AtMost(1e-8), r.velocity));
                            rep.push(CheckRow::new("patch", name.as_str(), Some(1), format!("pressure_error_{tag}"), Expectation::AtMost(1e-8), r.pressure));
                            rep
                        });
                        record(&mut report, check, &name, res);
                    }
                }
            }
            Check::DivFree => {
                for &pair in &config.pairs {
                    for n in config.levels_for(check, pair) {
                        let res = divfree_check(pair, n, config.mu, &config.solve).map(|m| m.to_report(pair, n));
                        record(&mut report, check, &pair.name(), res);
                    }
                }
            }
            Check::Rates => {
                for &pair in &config.pairs {
                    let levels = config.levels_for(check, pair);
                    let res = convergence_study(pair, &levels, config.mu, &config.solve).map(|r| r.to_report());
                    record(&mut report, check, &pair.name(), res);
                }
            }
        }
    }
    Ok(report)
}

fn record(report: &mut Report, check: Check, pair: &str, result: Result<Report>) {
    match result {
        Ok(r) => report.extend(r),
        Err(e) => {
            let mut row = CheckRow::new(check.name(), pair, None, "error", Expectation::Equals(0.0), 1.0);
            row.metric = format!("error ({})", e.to_string().replace(',', ";"));
            report.push(row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert!("speed".parse::<Check>().is_err());
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let mut c = SuiteConfig { mu: 0.0, ..SuiteConfig::default() };
        assert!(run_suite(&c).is_err());
        c.mu = 1.0;
        c.levels = Some(vec![2, 1]);
        assert!(run_suite(&c).is_err());
    }

    #[test]
    fn census_only_suite() {
        let c = SuiteConfig { checks: vec![Check::Census], levels: Some(vec![1, 2]), ..SuiteConfig::default() };
        let r = run_suite(&c).unwrap();
        assert!(r.all_pass());
        assert!(r.rows.iter().all(|x| x.check == "census"));
    }
}
