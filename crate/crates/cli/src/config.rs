//! Run configuration: a `key = value` file merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use ncstokes::solver::SolveOptions;
use ncstokes::{Check, Pair, SolverMode, SuiteConfig};

/// A configuration problem. Reported with exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Settings as they appear in a file or on the command line, all optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawSettings {
    pub pair: Option<String>,
    pub levels: Option<String>,
    pub mu: Option<String>,
    pub checks: Option<String>,
    pub out: Option<String>,
    pub solver: Option<String>,
    pub threads: Option<String>,
    pub export: Option<String>,
}

pub const KEYS: [&str; 8] = ["pair", "levels", "mu", "checks", "out", "solver", "threads", "export"];

impl RawSettings {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key {
            "pair" => &mut self.pair,
            "levels" => &mut self.levels,
            "mu" => &mut self.mu,
            "checks" => &mut self.checks,
            "out" => &mut self.out,
            "solver" => &mut self.solver,
            "threads" => &mut self.threads,
            "export" => &mut self.export,
            _ => return None,
        })
    }

    /// Parses `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut s = RawSettings::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`, got `{line}`", no + 1));
            };
            let key = key.trim().to_ascii_lowercase();
            let Some(slot) = s.slot(&key) else {
                return err(format!("line {}: unknown key `{key}` (known: {})", no + 1, KEYS.join(", ")));
            };
            if slot.is_some() {
                return err(format!("line {}: duplicate key `{key}`", no + 1));
            }
            *slot = Some(value.trim().to_string());
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Values of `other` take precedence.
    pub fn overridden_by(mut self, other: RawSettings) -> Self {
        for key in KEYS {
            let mut other = other.clone();
            if let Some(v) = other.slot(key).and_then(Option::take) {
                *self.slot(key).expect("known key") = Some(v);
            }
        }
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub suite: SuiteConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub export: bool,
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_pairs(value: &str) -> Result<Vec<Pair>, ConfigError> {
    if value.trim().eq_ignore_ascii_case("all") {
        return Ok(Pair::all_standard().to_vec());
    }
    let mut pairs = Vec::new();
    for name in list(value) {
        let pair: Pair = name
            .parse()
            .map_err(|_| ConfigError(format!("unknown pair `{name}` (expected nc2, nc3, nc2r, nc3r or all)")))?;
        if !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    if pairs.is_empty() {
        return err("no pair given");
    }
    Ok(pairs)
}

fn parse_levels(value: &str) -> Result<Vec<usize>, ConfigError> {
    let mut levels = Vec::new();
    for item in list(value) {
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| ConfigError(format!("bad level range `{item}`")))?;
            let b: usize = b.trim().parse().map_err(|_| ConfigError(format!("bad level range `{item}`")))?;
            levels.extend(a..=b);
        } else {
            levels.push(item.parse().map_err(|_| ConfigError(format!("bad level `{item}`")))?);
        }
    }
    if levels.is_empty() {
        return err("no level given");
    }
    Ok(levels)
}

fn parse_checks(value: &str) -> Result<Vec<Check>, ConfigError> {
    if value.trim().eq_ignore_ascii_case("all") {
        return Ok(Check::ALL.to_vec());
    }
    let mut checks: Vec<Check> = list(value)
        .map(|c| c.parse().map_err(|_| ConfigError(format!("unknown check `{c}`"))))
        .collect::<Result<_, _>>()?;
    if checks.is_empty() {
        return err("no check given");
    }
    checks.sort();
    checks.dedup();
    Ok(checks)
}

fn parse_solver(value: &str) -> Result<SolverMode, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "direct" => Ok(SolverMode::Direct),
        "iter" | "iterative" | "minres" => Ok(SolverMode::Iterative),
        other => err(format!("unknown solver `{other}` (expected direct or iter)")),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => err(format!("{key}: expected a boolean, got `{other}`")),
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawSettings) -> Result<Self, ConfigError> {
        let mut suite = SuiteConfig::default();
        if let Some(v) = &raw.pair {
            suite.pairs = parse_pairs(v)?;
        }
        if let Some(v) = &raw.levels {
            suite.levels = Some(parse_levels(v)?);
        }
        if let Some(v) = &raw.mu {
            suite.mu = v.trim().parse().map_err(|_| ConfigError(format!("mu: not a number: `{v}`")))?;
        }
        if let Some(v) = &raw.checks {
            suite.checks = parse_checks(v)?;
        }
        if let Some(v) = &raw.solver {
            suite.solve = SolveOptions::with_mode(parse_solver(v)?);
        }
        let threads = match &raw.threads {
            Some(v) => match v.trim().parse::<usize>() {
                Ok(0) | Err(_) => return err(format!("threads: expected a positive integer, got `{v}`")),
                Ok(n) => Some(n),
            },
            None => None,
        };
        let export = raw.export.as_deref().map(|v| parse_bool("export", v)).transpose()?.unwrap_or(false);
        suite.validate().map_err(|e| ConfigError(e.to_string()))?;
        let out = PathBuf::from(raw.out.clone().unwrap_or_else(|| "ncstokes-out".to_string()));
        Ok(RunConfig { suite, out, threads, export })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncstokes::ElementKind;

    #[test]
    fn file_syntax() {
        let raw = RawSettings::parse("# comment\npair = nc2r, nc3\n\nlevels=1..3\nmu = 0.5\n").unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.suite.pairs, vec![Pair::standard(ElementKind::Nc2r), Pair::standard(ElementKind::Nc3)]);
        assert_eq!(cfg.suite.levels, Some(vec![1, 2, 3]));
        assert_eq!(cfg.suite.mu, 0.5);
        assert!(!cfg.export);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        assert!(RawSettings::parse("colour = blue").unwrap_err().0.contains("unknown key"));
        assert!(RawSettings::parse("mu = 1\nmu = 2").unwrap_err().0.contains("duplicate"));
        assert!(RawSettings::parse("just words").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = RawSettings::parse("mu = 2\nsolver = iter\nchecks = census").unwrap();
        let flags = RawSettings { mu: Some("3".into()), ..Default::default() };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.mu.as_deref(), Some("3"));
        assert_eq!(merged.solver.as_deref(), Some("iter"));
        let cfg = RunConfig::from_raw(&merged).unwrap();
        assert_eq!(cfg.suite.solve.mode, SolverMode::Iterative);
        assert_eq!(cfg.suite.checks, vec![Check::Census]);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = |raw: RawSettings| RunConfig::from_raw(&raw).unwrap_err();
        bad(RawSettings { pair: Some("nc4".into()), ..Default::default() });
        bad(RawSettings { levels: Some("3,2".into()), ..Default::default() });
        bad(RawSettings { mu: Some("-1".into()), ..Default::default() });
        bad(RawSettings { threads: Some("0".into()), ..Default::default() });
        bad(RawSettings { solver: Some("cg".into()), ..Default::default() });
        bad(RawSettings { checks: Some("rates,plots".into()), ..Default::default() });
    }
}
