//! Run configuration: a JSON document whose fields can each be overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hexholo::transport::QuadratureSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub order: usize,
    /// Strictly decreasing, inside `(0, 1/4]`.
    pub eps_grid: Vec<f64>,
    pub rel_tol: f64,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { order: 2, eps_grid: vec![1e-1, 3e-2, 1e-2], rel_tol: 1e-8, output: None, seed: 0 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_grid.is_empty() {
            bail!("eps grid is empty");
        }
        for e in &self.eps_grid {
            if !(*e > 0.0 && *e <= 0.25) {
                bail!("eps {e} outside (0, 1/4]");
            }
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            bail!("eps grid must be strictly decreasing");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-2) {
            bail!("quadrature tolerance {} outside (0, 1e-2)", self.rel_tol);
        }
        Ok(())
    }

    pub fn quad(&self) -> Result<QuadratureSpec> {
        Ok(QuadratureSpec::new(self.rel_tol, self.rel_tol * 1e-2)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_grids() {
        let mut c = RunConfig::default();
        c.eps_grid = vec![1e-2, 1e-1];
        assert!(c.validate().is_err());
        c.eps_grid = vec![];
        assert!(c.validate().is_err());
        c.eps_grid = vec![0.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json() {
        let c: RunConfig = serde_json::from_str(r#"{"order": 3}"#).unwrap();
        assert_eq!(c.order, 3);
        assert_eq!(c.eps_grid.len(), 3);
        assert!(serde_json::from_str::<RunConfig>(r#"{"ordr": 3}"#).is_err());
    }
}
