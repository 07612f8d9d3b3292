//! Optional TOML configuration; command-line flags take precedence.

use std::path::Path;

use anyhow::{bail, Context, Result};
use confmetric::Scenario;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dimension: Option<usize>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    /// Step of the finite-difference grid for `m_β`.
    pub grid_h: Option<f64>,
    pub delta: Option<f64>,
    pub scenario: Option<Scenario>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = toml::from_str(&text)
            .map_err(|e| anyhow::Error::new(InputError(format!("config {}: {e}", path.display()))))?;
        if let Some(s) = &cfg.scenario {
            s.validate().map_err(anyhow::Error::new)?;
        }
        if let Some(h) = cfg.grid_h {
            if !(h > 0.0 && h <= 0.01) {
                bail!(InputError(format!("grid_h = {h} must lie in (0, 0.01]")));
            }
        }
        Ok(cfg)
    }
}

/// Any problem with the user's input; mapped to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}
