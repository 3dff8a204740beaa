//! Pipeline configuration: a TOML file with one section per stage plus
//! input-class mapping; every field has the documented default, so an empty
//! file is a valid config.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ClassMap;
use crate::lines::LineConfig;
use crate::lod::LodConfig;
use crate::partition::energy::EnergyConfig;
use crate::planes::DetectConfig;
use crate::tiling::TilingConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct InputConfig {
    /// Class code mapped to ground points.
    pub ground_class: u32,
    /// Class code mapped to building points.
    pub building_class: u32,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self { ground_class: 2, building_class: 6 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub detection: DetectConfig,
    pub lines: LineConfig,
    pub optimization: EnergyConfig,
    pub lod: LodConfig,
    pub tiling: TilingConfig,
    /// Worker threads; 0 or absent means one worker.
    pub worker_count: usize,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.detection.validate().map_err(ConfigError::Invalid)?;
        self.lines.validate().map_err(ConfigError::Invalid)?;
        self.optimization.validate().map_err(ConfigError::Invalid)?;
        self.lod.validate().map_err(ConfigError::Invalid)?;
        self.tiling.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    pub fn class_map(&self) -> ClassMap {
        ClassMap {
            ground: self.input.ground_class,
            building: self.input.building_class,
        }
    }

    pub fn workers(&self) -> usize {
        self.worker_count.max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_defaults() {
        let cfg = PipelineConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.detection.min_points, 15);
        assert_eq!(cfg.lines.alpha, 0.5);
        assert_eq!(cfg.optimization.lambda, 1.0);
        assert_eq!(cfg.lod.merge_threshold, 3.0);
        assert_eq!(cfg.tiling.max_per_leaf, 3500);
        assert_eq!(cfg.input.ground_class, 2);
        assert_eq!(cfg.workers(), 1);
    }

    #[test]
    fn sections_override() {
        let text = r#"
worker_count = 8

[detection]
min_points = 20
dist_epsilon = 0.2

[lines]
alpha = 1.0

[optimization]
lambda = 2.5
unassigned_penalty = 0.5

[lod]
merge_threshold = 2.0

[tiling]
max_per_leaf = 100

[input]
ground_class = 9
"#;
        let cfg = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.detection.min_points, 20);
        assert_eq!(cfg.lines.alpha, 1.0);
        assert_eq!(cfg.optimization.lambda, 2.5);
        assert_eq!(cfg.optimization.unassigned_penalty, Some(0.5));
        assert_eq!(cfg.lod.merge_threshold, 2.0);
        assert_eq!(cfg.tiling.max_per_leaf, 100);
        assert_eq!(cfg.input.ground_class, 9);
        assert_eq!(cfg.workers(), 8);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_toml_str("[detection]\nmin_points = 1\n").is_err());
        assert!(PipelineConfig::from_toml_str("[lines]\nalpha = -1.0\n").is_err());
        assert!(PipelineConfig::from_toml_str("[tiling]\nmax_per_leaf = 0\n").is_err());
        assert!(PipelineConfig::from_toml_str("not toml at all [").is_err());
        assert!(PipelineConfig::from_toml_str("[nonsense]\nx = 1\n").is_err());
    }
}
