//! Experiment configuration files (TOML, or JSON by extension).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use driftgap::OperatorSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Operator to discretize; experiments fall back to their own default.
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    /// Name of a built-in operator, used when `operator` is absent.
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub diameter: Option<f64>,
    #[serde(default)]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// Grid spacings, coarsest first.
    #[serde(default)]
    pub grids: Option<Vec<f64>>,
    #[serde(default)]
    pub modes: Option<usize>,
    #[serde(default)]
    pub pairs: Option<usize>,
    #[serde(default, alias = "seeds")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: ExperimentConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(grids) = &self.grids {
            if grids.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                bail!("grid spacings must be positive, got {grids:?}");
            }
            if grids.windows(2).any(|w| w[1] >= w[0]) {
                bail!("grid spacings must be sorted in descending order, got {grids:?}");
            }
        }
        if let Some(op) = &self.operator {
            op.validate()?;
        }
        Ok(())
    }

    /// Grids for a convergence study: at least two, descending.
    pub fn convergence_grids(&self, default: &[f64]) -> Result<Vec<f64>> {
        let grids = self.grids.clone().unwrap_or_else(|| default.to_vec());
        if grids.len() < 2 {
            bail!("convergence experiments need at least two grids, got {grids:?}");
        }
        Ok(grids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_operator() {
        let text = r#"
            name = "certify"
            grids = [0.03125, 0.015625]
            seed = 3
            [operator]
            domain = { kind = "disk", radius = 1.0 }
            drift = { kind = "cutoff_rotational", omega = 2.0, cutoff = 0.8 }
        "#;
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        config.validate().unwrap();
        let op = config.operator.unwrap();
        assert_eq!(op.diameter(), 2.0);
        assert_eq!(config.seed, Some(3));
    }

    #[test]
    fn rejects_ascending_grids() {
        let config = ExperimentConfig { grids: Some(vec![0.01, 0.02]), ..Default::default() };
        assert!(config.validate().is_err());
        let single = ExperimentConfig { grids: Some(vec![0.01]), ..Default::default() };
        assert!(single.convergence_grids(&[0.1, 0.05]).is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<ExperimentConfig>("gridz = [0.1]").is_err());
    }
}
