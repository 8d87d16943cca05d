//! Session settings from a `key = value` file, overridden by flags.

use std::path::Path;

use serde::Serialize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionConfig {
    /// Basis declarations `label=value`; the rational unit is implicit.
    pub basis: Vec<String>,
    /// Generators of Σ. `None` uses the basis labels themselves.
    pub gens: Option<String>,
    pub degree: usize,
    pub grid_step: Option<f64>,
    pub strip_width: Option<f64>,
    pub tail_height: Option<f64>,
    pub max_grid_points: usize,
    pub tol: f64,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            basis: Vec::new(),
            gens: None,
            degree: 32,
            grid_step: None,
            strip_width: None,
            tail_height: None,
            max_grid_points: 4_000_000,
            tol: 1e-9,
            format: OutputFormat::Json,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError { line, message: format!("bad value `{value}` for `{key}`") })
}

impl SessionConfig {
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        match key {
            "basis" => self.basis.push(value.to_string()),
            "gens" => self.gens = Some(value.to_string()),
            "degree" => self.degree = num(key, value, line)?,
            "grid_step" => self.grid_step = Some(num(key, value, line)?),
            "strip_width" => self.strip_width = Some(num(key, value, line)?),
            "tail_height" => self.tail_height = Some(num(key, value, line)?),
            "max_grid_points" => self.max_grid_points = num(key, value, line)?,
            "tol" => self.tol = num(key, value, line)?,
            "seed" => self.seed = num(key, value, line)?,
            "format" => {
                self.format = match value {
                    "json" => OutputFormat::Json,
                    "text" => OutputFormat::Text,
                    _ => return Err(ConfigError { line, message: format!("unknown format `{value}`") }),
                }
            }
            _ => return Err(ConfigError { line, message: format!("unknown key `{key}`") }),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError { line: i + 1, message: format!("expected `key = value`, got `{line}`") })?;
            self.set(key.trim(), value.trim(), i + 1)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { line: 0, message: format!("cannot read {}: {e}", path.display()) })?;
        let mut cfg = SessionConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |message: String| Err(ConfigError { line: 0, message });
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if let Some(h) = self.grid_step {
            if !(h > 0.0) || !h.is_finite() {
                return bad(format!("grid step must be positive, got {h}"));
            }
        }
        for (name, v) in [("strip width", self.strip_width), ("tail height", self.tail_height)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.degree == 0 {
            return bad("truncation degree must be at least 1".into());
        }
        Ok(())
    }
}
