//! `ncstokes`: runs the verification suite and writes `report.csv`.
//!
//! Exit status: 0 when every assertion holds, 1 when some assertion fails,
//! 2 for usage or configuration errors, 3 for I/O and numerical failures.

mod config;
mod export;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use ncstokes::verify::default_levels;
use ncstokes::{run_suite, Check, Report};

use config::{ConfigError, RawSettings, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "ncstokes", version, about = "Verification suite for nonconforming tetrahedral Stokes elements")]
struct Cli {
    /// `key = value` configuration file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Pairs to run: comma-separated from nc2, nc3, nc2r, nc3r, or `all`.
    #[arg(long, value_name = "LIST")]
    pair: Option<String>,
    /// Mesh levels, e.g. `1,2,3` or `1..4`. Defaults depend on the check.
    #[arg(long, value_name = "LIST")]
    levels: Option<String>,
    /// Viscosity.
    #[arg(long, value_name = "FLOAT")]
    mu: Option<String>,
    /// Checks: certify, census, macro, infsup, korn, patch, divfree, rates, or `all`.
    #[arg(long, value_name = "LIST")]
    checks: Option<String>,
    /// Output directory for report.csv and exported artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Linear solver: direct or iter.
    #[arg(long, value_name = "MODE")]
    solver: Option<String>,
    /// Worker threads (1 gives bit-reproducible output).
    #[arg(long, value_name = "N")]
    threads: Option<String>,
    /// Also write VTK and Matrix Market files of the benchmark solve.
    #[arg(long)]
    export: bool,
}

impl Cli {
    fn settings(&self) -> Result<RawSettings, ConfigError> {
        let file = match &self.config {
            Some(path) => RawSettings::from_file(path)?,
            None => RawSettings::default(),
        };
        let flags = RawSettings {
            pair: self.pair.clone(),
            levels: self.levels.clone(),
            mu: self.mu.clone(),
            checks: self.checks.clone(),
            out: self.out.clone(),
            solver: self.solver.clone(),
            threads: self.threads.clone(),
            export: self.export.then(|| "true".to_string()),
        };
        Ok(file.overridden_by(flags))
    }
}

fn summarize(report: &Report, checks: &[Check]) {
    for check in checks {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.check == check.name()).collect();
        let failed = rows.iter().filter(|r| !r.pass).count();
        println!("{:<8} {:>4} rows, {failed} failed", check.name(), rows.len());
    }
    for r in report.failures() {
        let level = r.level.map(|l| format!(" n={l}")).unwrap_or_default();
        println!(
            "  FAIL {} {}{} {}: computed {:e}, expected {}",
            r.check,
            r.pair,
            level,
            r.metric,
            r.computed,
            r.expected.describe()
        );
    }
}

fn run(config: &RunConfig) -> Result<bool, String> {
    std::fs::create_dir_all(&config.out).map_err(|e| format!("cannot create {}: {e}", config.out.display()))?;
    let start = Instant::now();
    let report = run_suite(&config.suite).map_err(|e| e.to_string())?;
    let csv = config.out.join("report.csv");
    report.write_csv(&csv).map_err(|e| e.to_string())?;
    summarize(&report, &config.suite.checks);
    println!("wrote {} ({:.1} s)", csv.display(), start.elapsed().as_secs_f64());

    if config.export {
        for &pair in &config.suite.pairs {
            let n = config
                .suite
                .levels
                .as_ref()
                .and_then(|l| l.last().copied())
                .unwrap_or_else(|| default_levels(Check::DivFree, pair)[0]);
            let paths = export::export_benchmark(&config.out, pair, n, config.suite.mu, &config.suite.solve)
                .map_err(|e| format!("export of {} failed: {e}", pair.name()))?;
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.settings().and_then(|raw| RunConfig::from_raw(&raw)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(3);
        }
    }
    match run(&config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
