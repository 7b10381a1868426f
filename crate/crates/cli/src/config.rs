//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and text after `#` are ignored. Keys are case-sensitive.
//! Command-line flags are applied as extra entries after the file, so they
//! override it and go through the same validation.

use std::fmt;
use std::path::PathBuf;

use eigenprofile::datacube::parse_band_ranges;
use eigenprofile::experiment::{FeatureMode, FilterSource};
use eigenprofile::filters::FilterSelection;

/// Where an entry came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Line(usize),
    Flag(&'static str),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Line(n) => write!(f, "line {n}"),
            Source::Flag(name) => write!(f, "flag {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub source: Option<Source>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Some(s) => write!(f, "{s}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
        write!(f, "invalid configuration:\n  {}", lines.join("\n  "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub cube: PathBuf,
    /// `None`: the header next to the cube file.
    pub header: Option<PathBuf>,
    pub labels: PathBuf,
    /// 0-based, ascending.
    pub removed_bands: Vec<usize>,
    pub variance_fraction: f64,
    pub window_c: usize,
    pub filter_selection: FilterSelection,
    pub filter_source: FilterSource,
    pub features: FeatureMode,
    pub degree: u32,
    /// `None`: `1 / feature count`.
    pub gamma: Option<f64>,
    pub coef0: f64,
    pub penalty_c: f64,
    pub tolerance: f64,
    pub cache_mb: usize,
    pub proportion: f64,
    pub min_per_class: usize,
    pub runs: usize,
    pub seed: u64,
    /// `0`: all cores.
    pub threads: usize,
    pub out: PathBuf,
    pub write_profile: bool,
}

/// Raw entries before validation, in application order.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, Source)>,
}

const KEYS: &[&str] = &[
    "cube",
    "header",
    "labels",
    "removed_bands",
    "variance_fraction",
    "window_c",
    "num_filters",
    "energy_fraction",
    "min_filters",
    "max_filters",
    "filter_source",
    "features",
    "degree",
    "gamma",
    "coef0",
    "C",
    "tolerance",
    "cache_mb",
    "scheme",
    "min_per_class",
    "runs",
    "seed",
    "threads",
    "out",
    "write_profile",
];

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut issues = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let source = Source::Line(i + 1);
            match line.split_once('=') {
                Some((k, v)) => raw.entries.push((k.trim().to_string(), unquote(v.trim()).to_string(), source)),
                None => issues.push(ConfigIssue {
                    source: Some(source),
                    key: line.to_string(),
                    message: "expected key = value".into(),
                }),
            }
        }
        if issues.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigError { issues })
        }
    }

    /// Adds an override; later entries win.
    pub fn set(&mut self, key: &str, value: impl Into<String>, flag: &'static str) {
        self.entries.push((key.to_string(), value.into(), Source::Flag(flag)));
    }

    fn last(&self, key: &str) -> Option<(&str, &Source)> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, s)| (v.as_str(), s))
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
}

/// Training proportion from a scheme letter (`a`–`d`), a fraction, or a percentage.
pub fn parse_scheme(value: &str) -> Result<f64, String> {
    let p = match value.to_ascii_lowercase().as_str() {
        "a" => 0.01,
        "b" => 0.05,
        "c" => 0.10,
        "d" => 0.125,
        v => match v.strip_suffix('%') {
            Some(pct) => pct.trim().parse::<f64>().map_err(|e| e.to_string())? / 100.0,
            None => v.parse::<f64>().map_err(|e| e.to_string())?,
        },
    };
    if p > 0.0 && p <= 1.0 {
        Ok(p)
    } else {
        Err(format!("training proportion must lie in (0, 1], got {p}"))
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

struct Validator<'a> {
    raw: &'a RawConfig,
    issues: Vec<ConfigIssue>,
}

impl Validator<'_> {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let source = self.raw.last(key).map(|(_, s)| s.clone());
        self.issues.push(ConfigIssue {
            source,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn get<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> T {
        match self.raw.last(key) {
            None => default,
            Some((v, _)) => match parse(v) {
                Ok(x) => x,
                Err(e) => {
                    self.fail(key, e);
                    default
                }
            },
        }
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: fmt::Display,
    {
        self.get(key, default, |v| v.parse::<T>().map_err(|e| format!("{v:?}: {e}")))
    }
}

/// Validates and normalizes: defaults filled, band ranges expanded to 0-based
/// indices, contradictions rejected. All issues are reported together.
pub fn validate(raw: &RawConfig) -> Result<PipelineConfig, ConfigError> {
    let mut v = Validator { raw, issues: Vec::new() };
    for (k, _, s) in &raw.entries {
        if !KEYS.contains(&k.as_str()) {
            v.issues.push(ConfigIssue {
                source: Some(s.clone()),
                key: k.clone(),
                message: "unknown key".into(),
            });
        }
    }

    let path = |v: &mut Validator, key: &str| -> Option<PathBuf> {
        match v.raw.last(key) {
            Some((p, _)) if !p.is_empty() => Some(PathBuf::from(p)),
            _ => None,
        }
    };
    let cube = path(&mut v, "cube");
    if cube.is_none() {
        v.fail("cube", "required");
    }
    let labels = path(&mut v, "labels");
    if labels.is_none() {
        v.fail("labels", "required");
    }
    let header = path(&mut v, "header");

    let removed_bands = v.get("removed_bands", Vec::new(), |s| {
        if s.trim().is_empty() {
            Ok(Vec::new())
        } else {
            parse_band_ranges(s).map_err(|e| e.to_string())
        }
    });

    let variance_fraction = v.number("variance_fraction", 0.90);
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        v.fail("variance_fraction", "must lie in (0, 1]");
    }
    let window_c: usize = v.number("window_c", 35);
    if window_c % 2 == 0 {
        v.fail("window_c", "window_c must be odd");
    }

    let energy_fraction = v.number("energy_fraction", 0.99);
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        v.fail("energy_fraction", "must lie in (0, 1]");
    }
    let min_filters: usize = v.number("min_filters", 3);
    let max_filters: usize = v.number("max_filters", 50);
    if min_filters == 0 || min_filters > max_filters {
        v.fail("min_filters", "need 1 <= min_filters <= max_filters");
    }
    let num_filters = v.get("num_filters", None, |s| match s {
        "auto" => Ok(None),
        n => n.parse::<usize>().map(Some).map_err(|e| format!("{n:?}: {e}")),
    });
    let filter_selection = match num_filters {
        Some(n) => {
            if n == 0 || n > window_c * window_c {
                v.fail("num_filters", format!("must lie in 1..={}", window_c * window_c));
            }
            FilterSelection::Count(n)
        }
        None => FilterSelection::EnergyFraction {
            fraction: energy_fraction,
            min: min_filters,
            max: max_filters,
        },
    };
    let filter_source = v.get("filter_source", FilterSource::FirstComponent, |s| match s {
        "first_component" | "pc1" => Ok(FilterSource::FirstComponent),
        "per_component" => Ok(FilterSource::PerComponent),
        _ => Err(format!("expected first_component or per_component, got {s:?}")),
    });
    let features = v.get("features", FeatureMode::Energy, |s| match s {
        "energy" => Ok(FeatureMode::Energy),
        "pca" => Ok(FeatureMode::Pca),
        "energy+pca" => Ok(FeatureMode::EnergyAndPca),
        _ => Err(format!("expected energy, pca or energy+pca, got {s:?}")),
    });

    let degree: u32 = v.number("degree", 3);
    if degree == 0 {
        v.fail("degree", "must be at least 1");
    }
    let gamma = v.get("gamma", None, |s| match s {
        "auto" => Ok(None),
        g => g.parse::<f64>().map(Some).map_err(|e| format!("{g:?}: {e}")),
    });
    if gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
        v.fail("gamma", "must be positive");
    }
    let coef0: f64 = v.number("coef0", 0.0);
    if !coef0.is_finite() {
        v.fail("coef0", "must be finite");
    }
    let penalty_c: f64 = v.number("C", 1.0);
    if !(penalty_c > 0.0 && penalty_c.is_finite()) {
        v.fail("C", "must be positive");
    }
    let tolerance: f64 = v.number("tolerance", 1e-3);
    if !(tolerance > 0.0) {
        v.fail("tolerance", "must be positive");
    }
    let cache_mb = v.number("cache_mb", 200);

    let proportion = v.get("scheme", 0.10, parse_scheme);
    let min_per_class: usize = v.number("min_per_class", 3);
    if min_per_class == 0 {
        v.fail("min_per_class", "must be at least 1");
    }
    let runs: usize = v.number("runs", 50);
    if runs == 0 {
        v.fail("runs", "must be at least 1");
    }
    let seed = v.number("seed", 0u64);
    let threads = v.number("threads", 0usize);
    let out = path(&mut v, "out").unwrap_or_else(|| PathBuf::from("out"));
    let write_profile = v.get("write_profile", false, parse_bool);

    if !v.issues.is_empty() {
        return Err(ConfigError { issues: v.issues });
    }
    Ok(PipelineConfig {
        cube: cube.unwrap_or_default(),
        header,
        labels: labels.unwrap_or_default(),
        removed_bands,
        variance_fraction,
        window_c,
        filter_selection,
        filter_source,
        features,
        degree,
        gamma,
        coef0,
        penalty_c,
        tolerance,
        cache_mb,
        proportion,
        min_per_class,
        runs,
        seed,
        threads,
        out,
        write_profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(text: &str) -> Result<PipelineConfig, ConfigError> {
        validate(&RawConfig::parse(text).unwrap())
    }

    #[test]
    fn empty_file_only_misses_paths() {
        let err = check("").unwrap_err();
        let keys: Vec<&str> = err.issues.iter().map(|i| i.key.as_str()).collect();
        assert_eq!(keys, vec!["cube", "labels"]);
    }

    #[test]
    fn defaults() {
        let c = check("cube = a.raw\nlabels = b.raw # gt\n").unwrap();
        assert_eq!(c.window_c, 35);
        assert_eq!(c.variance_fraction, 0.90);
        assert_eq!(c.runs, 50);
        assert_eq!(c.min_per_class, 3);
        assert_eq!(c.degree, 3);
        assert_eq!(c.gamma, None);
        assert_eq!(c.coef0, 0.0);
        assert_eq!(c.penalty_c, 1.0);
        assert_eq!(c.filter_selection, FilterSelection::default());
        assert_eq!(c.cube, PathBuf::from("a.raw"));
    }

    #[test]
    fn even_window_is_rejected_with_line() {
        let err = check("cube=a\nlabels=b\nwindow_c=34\n").unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].to_string(), "line 3: window_c: window_c must be odd");
    }

    #[test]
    fn band_ranges_expand() {
        let c = check("cube=a\nlabels=b\nremoved_bands=\"104-108,150-163,220\"\n").unwrap();
        assert_eq!(c.removed_bands.len(), 20);
        assert_eq!(c.removed_bands[0], 103);
        assert_eq!(*c.removed_bands.last().unwrap(), 219);
    }

    #[test]
    fn schemes() {
        assert_eq!(parse_scheme("a"), Ok(0.01));
        assert_eq!(parse_scheme("D"), Ok(0.125));
        assert_eq!(parse_scheme("5%"), Ok(0.05));
        assert_eq!(parse_scheme("0.1"), Ok(0.1));
        assert!(parse_scheme("1.5").is_err());
        let err = check("cube=a\nlabels=b\nscheme=1.5\n").unwrap_err();
        assert_eq!(err.issues[0].key, "scheme");
    }

    #[test]
    fn issues_are_collected_and_flags_override() {
        let err = check("cube=a\nlabels=b\nwindow_c=4\nruns=0\nbogus=1\nC=-1\n").unwrap_err();
        let keys: Vec<&str> = err.issues.iter().map(|i| i.key.as_str()).collect();
        assert_eq!(keys, vec!["bogus", "window_c", "C", "runs"]);

        let mut raw = RawConfig::parse("cube=a\nlabels=b\nwindow_c=4\n").unwrap();
        raw.set("window_c", "7", "--window");
        assert_eq!(validate(&raw).unwrap().window_c, 7);
        raw.set("runs", "x", "--runs");
        let err = validate(&raw).unwrap_err();
        assert!(err.issues[0].to_string().starts_with("flag --runs: runs:"));
    }

    #[test]
    fn malformed_line() {
        let err = RawConfig::parse("cube=a\njust words\n").unwrap_err();
        assert_eq!(err.issues[0].source, Some(Source::Line(2)));
    }
}
