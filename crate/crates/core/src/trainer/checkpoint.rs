use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrainError;
use crate::nn::{Adam, PolicyConfig};
use crate::worldsim::CameraModel;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub adam: Adam,
    pub stage: usize,
    pub episodes_done: u64,
    pub updates: u64,
    pub scene_counter: u64,
}

/// Policy parameters plus everything needed to interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub policy: PolicyConfig,
    pub camera: CameraModel,
    pub params: Vec<f64>,
    #[serde(default)]
    pub trainer: Option<TrainerState>,
}

/// SHA-256 over the network and camera settings that give parameters meaning.
pub fn config_hash(policy: &PolicyConfig, camera: &CameraModel) -> String {
    let text = serde_json::to_string(&(policy, camera)).expect("configs serialise");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl Checkpoint {
    pub fn new(policy: PolicyConfig, camera: CameraModel, params: Vec<f64>) -> Self {
        Self { version: CHECKPOINT_VERSION, config_hash: config_hash(&policy, &camera), policy, camera, params, trainer: None }
    }

    /// Refuse when the expected configuration differs from the stored one.
    pub fn check_compatible(&self, policy: &PolicyConfig, camera: &CameraModel) -> Result<(), String> {
        if self.version != CHECKPOINT_VERSION {
            return Err(format!("checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})", self.version));
        }
        let stored = config_hash(&self.policy, &self.camera);
        if stored != self.config_hash {
            return Err("checkpoint config hash does not match its own contents (file edited or corrupted)".into());
        }
        let want = config_hash(policy, camera);
        if want != self.config_hash {
            let mut diffs = Vec::new();
            if &self.policy != policy {
                diffs.push(format!("policy: checkpoint {:?} vs requested {:?}", self.policy, policy));
            }
            if &self.camera != camera {
                diffs.push(format!("camera: checkpoint {:?} vs requested {:?}", self.camera, camera));
            }
            return Err(format!("config hash mismatch ({} vs {}): {}", self.config_hash, want, diffs.join("; ")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        serde_json::from_str(text).map_err(|e| TrainError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_json()).map_err(|e| TrainError::Checkpoint(format!("writing {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(|e| TrainError::Checkpoint(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
