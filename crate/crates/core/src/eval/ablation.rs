use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{run_trials, EvalError, Metrics, PolicyController};
use crate::config::RunConfig;
use crate::nn::Architecture;
use crate::pseudolaser::SensingMode;
use crate::trainer::Checkpoint;
use crate::worldsim::SceneDescription;

/// One model configuration in a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub architecture: Architecture,
    pub fov_deg: f64,
    pub sensing: SensingMode,
    pub augmentation: bool,
}

impl AblationSpec {
    pub fn label(&self) -> String {
        format!("{}-{}deg-{}{}", self.architecture, self.fov_deg, self.sensing, if self.augmentation { "-aug" } else { "" })
    }
}

/// A spec with the checkpoint it is evaluated from. Sensing variants of one
/// trained policy share a checkpoint.
#[derive(Debug, Clone)]
pub struct AblationEntry {
    pub spec: AblationSpec,
    pub checkpoint: Option<Checkpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub spec: String,
    pub scenario: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("spec,scenario,success_rate,average_time,n_trials,n_success,n_collision,n_timeout\n");
        for r in &self.rows {
            let m = &r.metrics;
            let t = m.average_time.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{},{},{},{}", r.spec, r.scenario, m.success_rate, t, m.n_trials, m.n_success, m.n_collision, m.n_timeout);
        }
        s
    }

    /// Column-aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let header = ["spec", "scenario", "success", "avg_time", "trials", "collide", "timeout"];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                let m = &r.metrics;
                [
                    r.spec.clone(),
                    r.scenario.clone(),
                    format!("{:.3}", m.success_rate),
                    m.average_time.map(|t| format!("{t:.2}")).unwrap_or_else(|| "-".into()),
                    m.n_trials.to_string(),
                    m.n_collision.to_string(),
                    m.n_timeout.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut s = String::new();
        let line = |cells: Vec<&str>, s: &mut String| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(s, "{}", parts.join("  ").trim_end());
        };
        line(header.to_vec(), &mut s);
        for row in &body {
            line(row.iter().map(String::as_str).collect(), &mut s);
        }
        s
    }

    pub fn get(&self, spec: &str, scenario: &str) -> Option<&Metrics> {
        self.rows.iter().find(|r| r.spec == spec && r.scenario == scenario).map(|r| &r.metrics)
    }
}

/// Cross product of specs and scenes. Each spec evaluates its checkpoint
/// with the spec's sensing variant; the checkpoint must match the spec's
/// architecture and field of view.
pub fn run_ablation(entries: &[AblationEntry], scenes: &[SceneDescription], n_trials: usize, seed: u64, base: &RunConfig) -> Result<AblationTable, EvalError> {
    let mut table = AblationTable::default();
    for e in entries {
        let label = e.spec.label();
        let ckpt = e.checkpoint.as_ref().ok_or_else(|| EvalError::MissingCheckpoint(label.clone()))?;
        if ckpt.policy.architecture != e.spec.architecture {
            return Err(EvalError::Checkpoint(format!("{label}: checkpoint architecture is {}", ckpt.policy.architecture)));
        }
        let fov = ckpt.camera.horizontal_fov.to_degrees();
        if (fov - e.spec.fov_deg).abs() > 1e-6 {
            return Err(EvalError::Checkpoint(format!("{label}: checkpoint field of view is {fov} degrees")));
        }
        let run = RunConfig { camera: ckpt.camera.clone(), policy: ckpt.policy.clone(), sensing: e.spec.sensing, ..base.clone() };
        let mut ctl = PolicyController::from_checkpoint(ckpt)?;
        let env_cfg = run.env_config(false);
        for desc in scenes {
            let (metrics, _) = run_trials(&env_cfg, desc, n_trials, seed, &mut ctl)?;
            table.rows.push(AblationRow { spec: label.clone(), scenario: desc.name.clone(), metrics });
        }
    }
    Ok(table)
}
