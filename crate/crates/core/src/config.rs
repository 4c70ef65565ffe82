//! The single JSON run configuration shared by training, evaluation and the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, RewardConfig};
use crate::nn::PolicyConfig;
use crate::pseudolaser::{NoiseParams, SensingConfig, SensingMode};
use crate::trainer::TrainerConfig;
use crate::worldsim::CameraModel;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { n_trials: 100, seed: 1000 }
    }
}

/// Every tunable in one place. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub trainer: TrainerConfig,
    /// `d_laser` and `max_range` are overwritten from `camera`.
    pub policy: PolicyConfig,
    pub camera: CameraModel,
    pub reward: RewardConfig,
    pub noise: NoiseParams,
    pub sensing: SensingMode,
    pub sensing_params: SensingConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.camera.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.policy_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.trainer.validate().map_err(ConfigError::Invalid)?;
        self.noise.validate().map_err(ConfigError::Invalid)?;
        if self.eval.n_trials == 0 {
            return Err(ConfigError::Invalid("eval.n_trials must be positive".into()));
        }
        Ok(())
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig { d_laser: self.camera.width, max_range: self.camera.max_range, ..self.policy.clone() }
    }

    /// Environment settings; augmentation only when `training` and enabled.
    pub fn env_config(&self, training: bool) -> EnvConfig {
        EnvConfig {
            camera: self.camera.clone(),
            sensing: self.sensing,
            sensing_params: self.sensing_params.clone(),
            reward: self.reward.clone(),
            max_episode_steps: self.trainer.max_episode_steps,
            augmentation: (training && self.noise.enabled).then(|| self.noise.clone()),
        }
    }
}
