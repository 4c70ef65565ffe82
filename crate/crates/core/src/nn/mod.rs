//! Reverse-mode building blocks and the actor-critic policy.

pub mod adam;
pub mod distribution;
pub mod gemm;
pub mod layers;
pub mod policy;

use std::path::PathBuf;

pub use adam::{clip_grad_norm, Adam};
pub use distribution::{log_jacobian, squash, ActionDist, ActionSample};
pub use policy::{build_feg_input, normalize_observation, Architecture, ForwardCache, HiddenState, Policy, PolicyConfig, PolicyInput, FEG_CHANNELS, STATE_DIM};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network config: {0}")]
    Config(String),
    #[error("non-finite values in {stage}; parameters dumped to {}", dump.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<dump failed>".into()))]
    NonFinite { stage: String, dump: Option<PathBuf> },
}

impl NnError {
    /// Write the offending parameters next to other temp files and build the error.
    pub fn non_finite(stage: &str, policy: &Policy, params: &[f64]) -> Self {
        let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
        let path = std::env::temp_dir().join(format!("mononav-nonfinite-{}-{stamp}.json", std::process::id()));
        let body = serde_json::json!({
            "stage": stage,
            "config": policy.config(),
            // NaN/inf are not JSON numbers; keep them readable as strings
            "params": params.iter().map(|v| if v.is_finite() { serde_json::json!(v) } else { serde_json::json!(v.to_string()) }).collect::<Vec<_>>(),
        });
        let dump = std::fs::write(&path, body.to_string()).ok().map(|_| path);
        if let Some(p) = &dump {
            log::error!("non-finite values in {stage}; parameters written to {}", p.display());
        }
        NnError::NonFinite { stage: stage.to_string(), dump }
    }
}
