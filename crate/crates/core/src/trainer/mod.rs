//! PPO training with recurrent unrolls and a staged scene curriculum.

mod buffer;
mod checkpoint;
mod ppo;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use buffer::{compute_advantages, gae, normalize_advantages, Chunk, Episode, RolloutBuffer, Transition};
pub use checkpoint::{config_hash, Checkpoint, TrainerState, CHECKPOINT_VERSION};
pub use ppo::{assemble_chunks, buffer_kl, buffer_value_loss, ppo_update, ChunkBatch, UpdateStats};

use crate::config::RunConfig;
use crate::env::{EnvConfig, EnvError, EpisodeStatus, NavEnv, Observation};
use crate::nn::{Adam, HiddenState, NnError, Policy, PolicyInput};
use crate::worldsim::{SceneDescription, SceneSpec, SimError};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("scene: {0}")]
    Scene(#[from] SimError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("non-finite loss ({loss}) in epoch {epoch}; update aborted and parameters restored")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error("invalid trainer config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    /// Scenes alternated episode by episode within the stage.
    pub scenes: Vec<SceneSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    pub stages: Vec<Stage>,
    pub promotion_threshold: f64,
    pub window: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        let named = |s: &[&str]| s.iter().map(|n| SceneSpec::Named(n.to_string())).collect();
        Self {
            stages: vec![
                Stage { name: "stage1".into(), scenes: named(&["stage1_open:4"]) },
                Stage { name: "stage2".into(), scenes: named(&["stage2_crossing:6", "stage1_open:4"]) },
                Stage { name: "stage3".into(), scenes: named(&["stage3_corridor:4", "stage2_crossing:6", "stage1_open:4"]) },
            ],
            promotion_threshold: 0.9,
            window: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub batch_size: usize,
    pub max_episode_steps: usize,
    /// Budget in per-agent episodes.
    pub total_episodes: u64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub lstm_unroll: usize,
    /// 0 disables the KL term.
    pub kl_penalty_coeff: f64,
    /// 0 disables clipping.
    pub clip_epsilon: f64,
    pub gae_lambda: f64,
    pub epochs_per_batch: usize,
    pub minibatches: usize,
    pub entropy_coeff: f64,
    pub value_coeff: f64,
    pub max_grad_norm: f64,
    /// Accepted for compatibility with published settings; PPO has no target network.
    pub target_update_ratio: f64,
    pub normalize_advantages: bool,
    /// Environments stepped in lockstep during collection.
    pub num_envs: usize,
    pub seed: u64,
    pub curriculum: CurriculumConfig,
    /// Stop once the rolling success rate of the final stage reaches this.
    pub stop_at_success: Option<f64>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            batch_size: 1024,
            max_episode_steps: 150,
            total_episodes: 30_000,
            gamma: 0.99,
            learning_rate: 5e-5,
            lstm_unroll: 20,
            kl_penalty_coeff: 15e-4,
            clip_epsilon: 0.2,
            gae_lambda: 0.95,
            epochs_per_batch: 4,
            minibatches: 16,
            entropy_coeff: 0.005,
            value_coeff: 0.5,
            max_grad_norm: 0.5,
            target_update_ratio: 0.01,
            normalize_advantages: true,
            num_envs: 4,
            seed: 0,
            curriculum: CurriculumConfig::default(),
            stop_at_success: None,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err("gae_lambda must lie in [0, 1]".into());
        }
        if !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) {
            return Err("learning_rate and max_grad_norm must be positive".into());
        }
        for (name, v) in [
            ("kl_penalty_coeff", self.kl_penalty_coeff),
            ("clip_epsilon", self.clip_epsilon),
            ("entropy_coeff", self.entropy_coeff),
            ("value_coeff", self.value_coeff),
        ] {
            if !(v >= 0.0) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        if self.batch_size == 0
            || self.max_episode_steps == 0
            || self.lstm_unroll == 0
            || self.epochs_per_batch == 0
            || self.minibatches == 0
            || self.num_envs == 0
        {
            return Err("batch_size, max_episode_steps, lstm_unroll, epochs_per_batch, minibatches and num_envs must be positive".into());
        }
        if self.curriculum.stages.is_empty() || self.curriculum.stages.iter().any(|s| s.scenes.is_empty()) {
            return Err("curriculum needs at least one stage and every stage a scene".into());
        }
        if self.curriculum.window == 0 {
            return Err("curriculum window must be positive".into());
        }
        Ok(())
    }
}

/// Next stage index: promote when the last `window` episodes of the current
/// stage reach `threshold` success; never move backwards or past the end.
pub fn curriculum_advance(stage_successes: &[bool], stage: usize, n_stages: usize, threshold: f64, window: usize) -> usize {
    if stage + 1 >= n_stages || stage_successes.len() < window {
        return stage;
    }
    let recent = &stage_successes[stage_successes.len() - window..];
    let rate = recent.iter().filter(|s| **s).count() as f64 / window as f64;
    if rate >= threshold {
        stage + 1
    } else {
        stage
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub stage: usize,
    pub scene: String,
    pub reward: f64,
    pub steps: usize,
    pub status: EpisodeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub update: u64,
    pub stage: usize,
    pub episodes: u64,
    pub batch_episodes: usize,
    pub transitions: usize,
    pub mean_episode_reward: f64,
    pub success_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub kl: f64,
    pub entropy: f64,
    pub wall_clock_s: f64,
}

fn mix_seed(a: u64, b: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct AgentSlot {
    obs: Observation,
    hidden: HiddenState,
    episode: Episode,
}

struct EnvSlot {
    env: NavEnv,
    scene: String,
    agents: Vec<Option<AgentSlot>>,
    active: bool,
}

pub struct Trainer {
    pub cfg: TrainerConfig,
    pub env_cfg: EnvConfig,
    pub policy: Policy,
    pub params: Vec<f64>,
    pub adam: Adam,
    pub stage: usize,
    pub episodes_done: u64,
    pub updates: u64,
    pub history: Vec<EpisodeSummary>,
    stage_successes: Vec<bool>,
    scene_counter: u64,
    stage_scenes: Vec<Vec<SceneDescription>>,
}

impl Trainer {
    pub fn new(run: &RunConfig) -> Result<Self, TrainError> {
        run.validate().map_err(|e| TrainError::Config(e.to_string()))?;
        let cfg = run.trainer.clone();
        let policy = Policy::new(run.policy_config())?;
        let params = policy.init_params(mix_seed(cfg.seed, 0xA11CE));
        let adam = Adam::new(params.len(), cfg.learning_rate);
        let stage_scenes =
            cfg.curriculum.stages.iter().map(|s| s.scenes.iter().map(|sc| sc.description()).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
        if cfg.target_update_ratio != 0.0 {
            log::info!("target_update_ratio={} is accepted but has no effect under PPO", cfg.target_update_ratio);
        }
        Ok(Self {
            env_cfg: run.env_config(true),
            cfg,
            policy,
            params,
            adam,
            stage: 0,
            episodes_done: 0,
            updates: 0,
            history: Vec::new(),
            stage_successes: Vec::new(),
            scene_counter: 0,
            stage_scenes,
        })
    }

    /// Continue from a checkpoint written by [`Trainer::checkpoint`].
    pub fn resume(run: &RunConfig, ckpt: &Checkpoint) -> Result<Self, TrainError> {
        let mut t = Self::new(run)?;
        ckpt.check_compatible(t.policy.config(), &run.camera).map_err(TrainError::Checkpoint)?;
        t.params = ckpt.params.clone();
        if let Some(s) = &ckpt.trainer {
            t.adam = s.adam.clone();
            t.stage = s.stage.min(t.stage_scenes.len() - 1);
            t.episodes_done = s.episodes_done;
            t.updates = s.updates;
            t.scene_counter = s.scene_counter;
        }
        Ok(t)
    }

    pub fn checkpoint(&self, camera: &crate::worldsim::CameraModel) -> Checkpoint {
        let mut c = Checkpoint::new(self.policy.config().clone(), camera.clone(), self.params.clone());
        c.trainer = Some(TrainerState {
            adam: self.adam.clone(),
            stage: self.stage,
            episodes_done: self.episodes_done,
            updates: self.updates,
            scene_counter: self.scene_counter,
        });
        c
    }

    pub fn n_stages(&self) -> usize {
        self.stage_scenes.len()
    }

    fn next_scene(&mut self) -> (SceneDescription, u64) {
        let scenes = &self.stage_scenes[self.stage];
        let desc = scenes[(self.scene_counter % scenes.len() as u64) as usize].clone();
        let seed = mix_seed(self.cfg.seed, self.scene_counter.wrapping_add(1));
        self.scene_counter += 1;
        (desc, seed)
    }

    fn start_episode(&mut self, slot: &mut EnvSlot) -> Result<(), TrainError> {
        let (desc, seed) = self.next_scene();
        let obs = slot.env.reset_description(&desc, seed)?;
        let hs = self.policy.config().state_size();
        slot.scene = desc.name.clone();
        slot.agents = obs
            .into_iter()
            .map(|o| {
                Some(AgentSlot {
                    obs: o.observation,
                    hidden: HiddenState::zeros(hs),
                    episode: Episode {
                        scene: desc.name.clone(),
                        agent: o.agent,
                        transitions: Vec::new(),
                        status: EpisodeStatus::Running,
                        bootstrap_value: 0.0,
                        chunk_states: Vec::new(),
                    },
                })
            })
            .collect();
        slot.active = true;
        Ok(())
    }

    /// Run the current policy until at least `batch_size` transitions of
    /// complete episodes are gathered.
    pub fn collect_rollouts(&mut self) -> Result<RolloutBuffer, TrainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.cfg.seed, 0x5EED_0000 + self.updates));
        let mut buffer = RolloutBuffer::new(self.cfg.lstm_unroll, self.policy.log_std(&self.params));
        let mut slots: Vec<EnvSlot> = (0..self.cfg.num_envs)
            .map(|_| EnvSlot { env: NavEnv::new(self.env_cfg.clone()), scene: String::new(), agents: Vec::new(), active: false })
            .collect();
        for slot in &mut slots {
            self.start_episode(slot)?;
        }
        let hs = self.policy.config().state_size();
        let unroll = self.cfg.lstm_unroll;
        let mut in_progress = 0usize;
        loop {
            let mut rows: Vec<(usize, usize)> = Vec::new();
            for (k, slot) in slots.iter().enumerate() {
                if slot.active {
                    for (i, a) in slot.agents.iter().enumerate() {
                        if a.is_some() {
                            rows.push((k, i));
                        }
                    }
                }
            }
            if rows.is_empty() {
                break;
            }
            let mut input = PolicyInput::with_capacity(rows.len(), self.policy.config().d_laser);
            let mut h0 = HiddenState { h: Vec::with_capacity(rows.len() * hs), c: Vec::with_capacity(rows.len() * hs) };
            for &(k, i) in &rows {
                let a = slots[k].agents[i].as_ref().expect("listed as running");
                input.push(&a.obs, self.policy.config());
                h0.h.extend_from_slice(&a.hidden.h);
                h0.c.extend_from_slice(&a.hidden.c);
            }
            let out = self.policy.forward(&self.params, &input, 1, rows.len(), &h0)?;
            let mut actions: Vec<Vec<crate::worldsim::Action>> = vec![Vec::new(); slots.len()];
            for (r, &(k, i)) in rows.iter().enumerate() {
                let dist = self.policy.dist(&self.params, &out, r);
                let s = dist.sample(&mut rng);
                let a = slots[k].agents[i].as_mut().expect("listed as running");
                if a.episode.transitions.len() % unroll == 0 {
                    a.episode.chunk_states.push(a.hidden.clone());
                }
                a.episode.transitions.push(Transition {
                    observation: a.obs.clone(),
                    u: s.u,
                    log_prob: s.log_prob,
                    value: out.values[r],
                    old_mean: dist.mean,
                    reward: Default::default(),
                    done: false,
                    advantage: 0.0,
                    ret: 0.0,
                });
                if hs > 0 {
                    a.hidden = HiddenState { h: out.hidden.h[r * hs..(r + 1) * hs].to_vec(), c: out.hidden.c[r * hs..(r + 1) * hs].to_vec() };
                }
                actions[k].push(s.action);
                in_progress += 1;
            }
            let mut truncated: Vec<(usize, usize)> = Vec::new();
            let mut finished: Vec<(usize, usize)> = Vec::new();
            for (k, slot) in slots.iter_mut().enumerate() {
                if actions[k].is_empty() {
                    continue;
                }
                let steps = slot.env.step(&actions[k])?;
                for st in steps {
                    let a = slot.agents[st.agent].as_mut().expect("env reports running agents only");
                    let tr = a.episode.transitions.last_mut().expect("just pushed");
                    tr.reward = st.reward;
                    tr.done = st.status.is_done();
                    a.obs = st.observation;
                    if st.status.is_done() {
                        a.episode.status = st.status;
                        if st.status == EpisodeStatus::Timeout {
                            truncated.push((k, st.agent));
                        }
                        finished.push((k, st.agent));
                    }
                }
            }
            if !truncated.is_empty() {
                let mut input = PolicyInput::with_capacity(truncated.len(), self.policy.config().d_laser);
                let mut h = HiddenState { h: Vec::new(), c: Vec::new() };
                for &(k, i) in &truncated {
                    let a = slots[k].agents[i].as_ref().expect("finished this step");
                    input.push(&a.obs, self.policy.config());
                    h.h.extend_from_slice(&a.hidden.h);
                    h.c.extend_from_slice(&a.hidden.c);
                }
                let out = self.policy.forward(&self.params, &input, 1, truncated.len(), &h)?;
                for (r, &(k, i)) in truncated.iter().enumerate() {
                    slots[k].agents[i].as_mut().expect("finished this step").episode.bootstrap_value = out.values[r];
                }
            }
            for (k, i) in finished {
                let a = slots[k].agents[i].take().expect("finished this step");
                in_progress -= a.episode.transitions.len();
                self.record_episode(&a.episode);
                buffer.episodes.push(a.episode);
            }
            for k in 0..slots.len() {
                if slots[k].active && slots[k].agents.iter().all(|a| a.is_none()) {
                    slots[k].active = false;
                    if buffer.len() + in_progress < self.cfg.batch_size {
                        let mut slot = std::mem::replace(
                            &mut slots[k],
                            EnvSlot { env: NavEnv::new(self.env_cfg.clone()), scene: String::new(), agents: Vec::new(), active: false },
                        );
                        self.start_episode(&mut slot)?;
                        slots[k] = slot;
                    }
                }
            }
        }
        Ok(buffer)
    }

    fn record_episode(&mut self, ep: &Episode) {
        self.episodes_done += 1;
        self.stage_successes.push(ep.success());
        self.history.push(EpisodeSummary {
            stage: self.stage,
            scene: ep.scene.clone(),
            reward: ep.total_reward(),
            steps: ep.transitions.len(),
            status: ep.status,
        });
    }

    /// Rolling success rate over the last `window` episodes of the current stage.
    pub fn stage_success_rate(&self) -> Option<f64> {
        let w = self.cfg.curriculum.window;
        (self.stage_successes.len() >= w).then(|| self.stage_successes[self.stage_successes.len() - w..].iter().filter(|s| **s).count() as f64 / w as f64)
    }

    /// One collect → advantage → update cycle.
    pub fn iteration(&mut self) -> Result<(RolloutBuffer, TrainStats), TrainError> {
        let t0 = Instant::now();
        let mut buffer = self.collect_rollouts()?;
        compute_advantages(&mut buffer, self.cfg.gamma, self.cfg.gae_lambda, self.cfg.normalize_advantages);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.cfg.seed, 0xB00B_0000 + self.updates));
        let upd = ppo_update(&self.policy, &mut self.params, &mut self.adam, &buffer, &self.cfg, &mut rng)?;
        self.updates += 1;
        let n_ep = buffer.episodes.len();
        let stats = TrainStats {
            update: self.updates,
            stage: self.stage,
            episodes: self.episodes_done,
            batch_episodes: n_ep,
            transitions: buffer.len(),
            mean_episode_reward: buffer.episodes.iter().map(|e| e.total_reward()).sum::<f64>() / n_ep.max(1) as f64,
            success_rate: buffer.episodes.iter().filter(|e| e.success()).count() as f64 / n_ep.max(1) as f64,
            policy_loss: upd.policy_loss,
            value_loss: upd.value_loss,
            kl: upd.kl,
            entropy: upd.entropy,
            wall_clock_s: t0.elapsed().as_secs_f64(),
        };
        let next = curriculum_advance(&self.stage_successes, self.stage, self.n_stages(), self.cfg.curriculum.promotion_threshold, self.cfg.curriculum.window);
        if next != self.stage {
            log::info!("promoting from stage {} to {} after {} episodes", self.stage, next, self.episodes_done);
            self.stage = next;
            self.stage_successes.clear();
        }
        Ok((buffer, stats))
    }

    /// Train until the episode budget is spent (or the early-stop rate is hit),
    /// calling `on_update` after every update.
    pub fn train(&mut self, mut on_update: impl FnMut(&Trainer, &TrainStats)) -> Result<(), TrainError> {
        while self.episodes_done < self.cfg.total_episodes {
            let (_, stats) = self.iteration()?;
            on_update(self, &stats);
            if let (Some(target), Some(rate)) = (self.cfg.stop_at_success, self.stage_success_rate()) {
                if self.stage + 1 == self.n_stages() && rate >= target {
                    log::info!("rolling success {rate:.3} reached target {target} after {} episodes", self.episodes_done);
                    break;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promotion_rule() {
        assert_eq!(curriculum_advance(&[true; 200], 0, 3, 0.9, 200), 1);
        assert_eq!(curriculum_advance(&[true; 199], 0, 3, 0.9, 200), 0);
        let half: Vec<bool> = (0..400).map(|i| i % 2 == 0).collect();
        assert_eq!(curriculum_advance(&half, 1, 3, 0.9, 200), 1);
        assert_eq!(curriculum_advance(&[true; 300], 2, 3, 0.9, 200), 2);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(mix_seed(0, 1), mix_seed(0, 2));
        assert_ne!(mix_seed(1, 1), mix_seed(2, 1));
    }
}
