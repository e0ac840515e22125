//! Flat `key = value` configuration files.
//!
//! Lists are comma-separated; lists of vectors separate vectors with `;`.
//! Everything after `#` on a line is ignored.

use std::collections::BTreeMap;
use std::path::Path;

use hyperbin::{ClassModel, CountMode, SearchConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::validation(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::validation(format!("config line {}: empty key", i + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::validation(format!("config line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Rejects keys the command does not understand.
    pub fn expect_keys(&self, allowed: &[&str]) -> CliResult<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::validation(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, raw: &str) -> CliResult<T> {
        raw.trim()
            .parse()
            .map_err(|_| CliError::validation(format!("config key `{key}`: cannot parse `{raw}`")))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.str(key) {
            Some(raw) => self.parsed(key, raw),
            None => Ok(default),
        }
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> CliResult<Vec<T>> {
        match self.str(key) {
            Some(raw) => raw
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| self.parsed(key, t))
                .collect(),
            None => Ok(default),
        }
    }

    pub fn vectors(&self, key: &str) -> CliResult<Option<Vec<Vec<f64>>>> {
        let Some(raw) = self.str(key) else {
            return Ok(None);
        };
        raw.split(';')
            .filter(|v| !v.trim().is_empty())
            .map(|v| v.split(',').map(|t| self.parsed(key, t)).collect())
            .collect::<CliResult<Vec<Vec<f64>>>>()
            .map(Some)
    }

    /// Class model from `dimension`, `means`, `covariance` (row-major,
    /// identity when absent) and `counts` (all 1 when absent).
    pub fn class_model(&self, default: impl FnOnce() -> ClassModel) -> CliResult<ClassModel> {
        let Some(means) = self.vectors("means")? else {
            if ["dimension", "covariance", "counts"].iter().any(|k| self.contains(k)) {
                return Err(CliError::validation("class model keys given without `means`"));
            }
            return Ok(default());
        };
        let dimension: usize = self.get("dimension", means.first().map_or(0, Vec::len))?;
        if means.iter().any(|m| m.len() != dimension) {
            return Err(CliError::validation(format!("every mean must have {dimension} coordinates")));
        }
        let identity: Vec<f64> = (0..dimension * dimension)
            .map(|i| if i % (dimension + 1) == 0 { 1.0 } else { 0.0 })
            .collect();
        let covariance = self.list("covariance", identity)?;
        let counts = self.list("counts", vec![1.0; means.len()])?;
        Ok(ClassModel::new(means, covariance, counts)?)
    }

    pub fn count_mode(&self, default: CountMode) -> CliResult<CountMode> {
        match self.str("mode") {
            Some(raw) => Ok(raw.parse()?),
            None => Ok(default),
        }
    }

    pub fn search(&self, seed: u64) -> CliResult<SearchConfig> {
        let d = SearchConfig::default();
        Ok(SearchConfig {
            restarts: self.get("restarts", d.restarts)?,
            max_iterations: self.get("max_iterations", d.max_iterations)?,
            step_shrink: self.get("step_shrink", d.step_shrink)?,
            initial_step: self.get("initial_step", d.initial_step)?,
            offset_step: self.get("offset_step", d.offset_step)?,
            convergence_tol: self.get("convergence_tol", d.convergence_tol)?,
            mc_samples: self.get("mc_samples", d.mc_samples)?,
            seed,
        })
    }
}

pub const MODEL_KEYS: &[&str] = &["dimension", "means", "covariance", "counts"];
pub const SEARCH_KEYS: &[&str] = &[
    "restarts",
    "max_iterations",
    "step_shrink",
    "initial_step",
    "offset_step",
    "convergence_tol",
    "mc_samples",
    "mode",
];
