//! Sweep configuration: a TOML key/value file, overridden by flags.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}:{line}: field `{field}`: {message}")]
    Field { path: String, line: usize, field: String, message: String },
}

pub const SUITES: [&str; 7] = ["symbols", "roots", "positivity", "fundsol", "identity", "green", "counterexample"];

/// Inclusive integer range; an empty list or `lo > hi` is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Range(pub Vec<u32>);

impl Range {
    pub fn new(lo: u32, hi: u32) -> Self {
        Range(vec![lo, hi])
    }

    pub fn values(&self) -> Vec<u32> {
        match self.0.as_slice() {
            [lo, hi] => (*lo..=*hi).collect(),
            _ => vec![],
        }
    }

    pub fn contains(&self, v: u32) -> bool {
        match self.0.as_slice() {
            [lo, hi] => (*lo..=*hi).contains(&v),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub m: Range,
    pub n: Range,
    /// Restricts the positivity exponents; all admissible ones when absent.
    pub p: Option<Range>,
    /// Mode cap for symbol identities and lower-bound sweeps; per-case defaults when absent.
    pub q_max: Option<u32>,
    pub gamma_window: f64,
    pub gamma_step: f64,
    pub suites: Vec<String>,
    pub shell_ratios: Vec<f64>,
    pub negative_control: bool,
    pub tolerance_scale: f64,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            m: Range::new(1, 3),
            n: Range::new(2, 7),
            p: None,
            q_max: None,
            gamma_window: 60.0,
            gamma_step: 1.0 / 64.0,
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            shell_ratios: vec![4.0, 16.0],
            negative_control: false,
            tolerance_scale: 1.0,
            jobs: None,
            seed: 0,
            json: None,
            csv: None,
            plot_data: None,
        }
    }
}

fn line_of(text: &str, field: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(field).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: name.clone(), source })?;
        Self::parse(&text, &name)
    }

    pub fn parse(text: &str, name: &str) -> Result<Self, ConfigError> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| {
                    let before = &text[..s.start.min(text.len())];
                    (before.matches('\n').count() + 1, s.start - before.rfind('\n').map_or(0, |i| i + 1) + 1)
                })
                .unwrap_or((0, 0));
            ConfigError::Parse { path: name.into(), line, column, message: e.message().to_string() }
        })?;
        cfg.validate().map_err(|(field, message)| ConfigError::Field {
            path: name.into(),
            line: line_of(text, field),
            field: field.into(),
            message,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        for (field, r) in [("m", Some(&self.m)), ("n", Some(&self.n)), ("p", self.p.as_ref())] {
            if let Some(r) = r {
                if !(r.0.is_empty() || r.0.len() == 2) {
                    return Err((field, format!("expected [lo, hi] or [], got {} values", r.0.len())));
                }
            }
        }
        if self.m.values().contains(&0) {
            return Err(("m", "orders start at 1".into()));
        }
        if !(self.tolerance_scale > 0.0 && self.tolerance_scale.is_finite()) {
            return Err(("tolerance_scale", format!("must be positive, got {}", self.tolerance_scale)));
        }
        if !(self.gamma_window > 0.0 && self.gamma_step > 0.0) {
            return Err(("gamma_step", "grid parameters must be positive".into()));
        }
        if let Some(r) = self.shell_ratios.iter().find(|r| !(**r > 1.0)) {
            return Err(("shell_ratios", format!("ratios must exceed 1, got {r}")));
        }
        if let Some(s) = self.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
            return Err(("suites", format!("unknown suite {s:?}; known: {}", SUITES.join(", "))));
        }
        if self.jobs == Some(0) {
            return Err(("jobs", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Dimensions valid for `m`: `2 <= n <= 2m+1`, odd ones from 3.
    pub fn dimensions(&self, m: u32) -> Vec<u32> {
        self.n.values().into_iter().filter(|&n| n >= 2 && n <= 2 * m + 1).collect()
    }

    pub fn runs(&self, suite: &str) -> bool {
        self.suites.iter().any(|s| s == suite)
    }
}

/// Flag values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance_scale: Option<f64>,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub negative_control: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SweepConfig) {
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tolerance_scale {
            cfg.tolerance_scale = t;
        }
        for (slot, v) in [(&mut cfg.json, &self.json), (&mut cfg.csv, &self.csv), (&mut cfg.plot_data, &self.plot_data)] {
            if v.is_some() {
                *slot = v.clone();
            }
        }
        cfg.negative_control |= self.negative_control;
    }
}
