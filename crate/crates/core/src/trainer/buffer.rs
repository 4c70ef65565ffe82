//! Episode storage, unroll chunks and advantage estimation.

use serde::{Deserialize, Serialize};

use crate::env::{EpisodeStatus, Observation, RewardBreakdown};
use crate::nn::HiddenState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Observation,
    /// Pre-squash action.
    pub u: [f64; 2],
    pub log_prob: f64,
    pub value: f64,
    /// Behaviour-policy mean, kept for the KL term.
    pub old_mean: [f64; 2],
    pub reward: RewardBreakdown,
    pub done: bool,
    pub advantage: f64,
    pub ret: f64,
}

/// One agent's complete episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub scene: String,
    pub agent: usize,
    pub transitions: Vec<Transition>,
    pub status: EpisodeStatus,
    /// `V(s_T)` for time-limit truncation, otherwise 0.
    pub bootstrap_value: f64,
    /// Recurrent state at the start of each unroll chunk.
    pub chunk_states: Vec<HiddenState>,
}

impl Episode {
    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward.total).sum()
    }

    pub fn success(&self) -> bool {
        self.status == EpisodeStatus::Arrived
    }
}

/// A contiguous run of at most `unroll` steps inside one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub episode: usize,
    pub start: usize,
    pub len: usize,
    /// Index into the episode's `chunk_states`.
    pub state: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutBuffer {
    pub episodes: Vec<Episode>,
    /// Behaviour-policy log-std at collection time.
    pub old_log_std: [f64; 2],
    pub unroll: usize,
}

impl RolloutBuffer {
    pub fn new(unroll: usize, old_log_std: [f64; 2]) -> Self {
        Self { episodes: Vec::new(), old_log_std, unroll }
    }

    pub fn len(&self) -> usize {
        self.episodes.iter().map(|e| e.transitions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn chunks(&self) -> Vec<Chunk> {
        let mut out = Vec::new();
        for (e, ep) in self.episodes.iter().enumerate() {
            let n = ep.transitions.len();
            let mut start = 0;
            let mut k = 0;
            while start < n {
                let len = self.unroll.min(n - start);
                out.push(Chunk { episode: e, start, len, state: k });
                start += len;
                k += 1;
            }
        }
        out
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.episodes.iter().flat_map(|e| e.transitions.iter())
    }
}

/// GAE(γ, λ) over one episode. `terminal_value` is the bootstrap for the
/// state after the last step (0 for true terminals).
pub fn gae(rewards: &[f64], values: &[f64], terminal_value: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_v = if t + 1 < n { values[t + 1] } else { terminal_value };
        let delta = rewards[t] + gamma * next_v - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        adv[t] = next_adv;
    }
    adv
}

/// Fill advantages and returns for every episode. When `normalize` is set
/// the advantages are then shifted and scaled to zero mean, unit variance
/// over the whole buffer (returns keep the raw advantages).
pub fn compute_advantages(buffer: &mut RolloutBuffer, gamma: f64, lambda: f64, normalize: bool) {
    for ep in &mut buffer.episodes {
        let rewards: Vec<f64> = ep.transitions.iter().map(|t| t.reward.total).collect();
        let values: Vec<f64> = ep.transitions.iter().map(|t| t.value).collect();
        let adv = gae(&rewards, &values, ep.bootstrap_value, gamma, lambda);
        for (t, a) in ep.transitions.iter_mut().zip(adv) {
            t.advantage = a;
            t.ret = a + t.value;
        }
    }
    if normalize {
        normalize_advantages(buffer);
    }
}

pub fn normalize_advantages(buffer: &mut RolloutBuffer) {
    let n = buffer.len();
    if n < 2 {
        return;
    }
    let mean = buffer.transitions().map(|t| t.advantage).sum::<f64>() / n as f64;
    let var = buffer.transitions().map(|t| (t.advantage - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std == 0.0 {
        for ep in &mut buffer.episodes {
            ep.transitions.iter_mut().for_each(|t| t.advantage = 0.0);
        }
        return;
    }
    for ep in &mut buffer.episodes {
        for t in &mut ep.transitions {
            t.advantage = (t.advantage - mean) / std;
        }
    }
    // second pass removes the rounding residue of the first
    let mean2 = buffer.transitions().map(|t| t.advantage).sum::<f64>() / n as f64;
    for ep in &mut buffer.episodes {
        ep.transitions.iter_mut().for_each(|t| t.advantage -= mean2);
    }
}
