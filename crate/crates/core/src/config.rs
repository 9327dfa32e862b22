//! TOML configuration file. Every table and key is optional; missing values
//! take the library defaults, and command-line flags override both.
//!
//! ```toml
//! [arena]
//! attack_range = 5.0
//!
//! [reward]
//! punishment_mode = "paper"
//!
//! [train]
//! total_episodes = 5000
//!
//! [detection]
//! split_threshold = 0.25
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{ArenaConfig, GridMap};
use crate::dqn::TrainConfig;
use crate::lidar::DetectionConfig;
use crate::rewards::RewardConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Toml { path: String, source: toml::de::Error },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub arena: ArenaConfig,
    /// Absent means "derive from the map and arena" ([`RewardConfig::for_arena`]).
    pub reward: Option<RewardConfig>,
    pub train: TrainConfig,
    pub detection: DetectionConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(|source| ConfigError::Toml { path: path.display().to_string(), source })
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn reward_for(&self, map: &GridMap) -> RewardConfig {
        self.reward.unwrap_or_else(|| RewardConfig::for_arena(map, &self.arena))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::ModelVariant;
    use crate::rewards::PunishmentMode;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(FileConfig::parse("").unwrap(), FileConfig::default());
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = FileConfig::parse(
            "[arena]\nattack_range = 4.0\n[reward]\npunishment_mode = \"paper\"\n[train]\nvariant = \"model3\"\n[detection]\nmin_points_per_segment = 3\n",
        )
        .unwrap();
        assert_eq!(c.arena.attack_range, 4.0);
        assert_eq!(c.arena.safe_distance, ArenaConfig::default().safe_distance);
        assert_eq!(c.reward.unwrap().punishment_mode, PunishmentMode::Paper);
        assert_eq!(c.reward.unwrap().beta, RewardConfig::default().beta);
        assert_eq!(c.train.variant, ModelVariant::Model3);
        assert_eq!(c.detection.min_points_per_segment, 3);
    }

    #[test]
    fn reward_defaults_follow_map() {
        let c = FileConfig::parse("[arena]\nattack_range = 2.0\n").unwrap();
        let r = c.reward_for(&GridMap::empty(8, 8).unwrap());
        assert_eq!((r.beta, r.attack_range), (16.0, 2.0));
    }

    #[test]
    fn unknown_table_rejected() {
        assert!(FileConfig::parse("[arenna]\nx = 1\n").is_err());
    }

    #[test]
    fn missing_file_reports_path() {
        let e = FileConfig::load(Path::new("/nonexistent/cfg.toml")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/cfg.toml"));
    }
}
