//! Multi-agent navigation episodes over a [`WorldState`].
//!
//! All agents share one policy. Each step moves every running agent, checks
//! collisions, scores the transition and renders a fresh pseudo-laser frame.
//! Agents that arrive, collide or time out are removed from the scene and
//! drop out of subsequent step results.

mod observation;
mod reward;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use observation::{assemble_observation, Frame, FrameHistory, Observation, STACK};
pub use reward::{arrived, compute_reward, RewardBreakdown, RewardConfig};

use crate::pseudolaser::{augment_noise, sense, NoiseParams, SensingConfig, SensingMode};
use crate::worldsim::{
    check_collision, spawn_from_description, step_kinematics, Action, AgentState, CameraModel, CollisionReport, ScenarioId, SceneDescription, SimError,
    WorldState, MAX_ANGULAR_VEL,
};

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("expected {expected} actions (one per running agent), got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("frame history is empty")]
    EmptyHistory,
    #[error("environment has not been reset")]
    NotReset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    Arrived,
    Collided,
    Timeout,
}

impl EpisodeStatus {
    pub fn is_done(self) -> bool {
        self != EpisodeStatus::Running
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub camera: CameraModel,
    pub sensing: SensingMode,
    pub sensing_params: SensingConfig,
    pub reward: RewardConfig,
    pub max_episode_steps: usize,
    /// Augmentation applied to every rendered laser frame; training only.
    pub augmentation: Option<NoiseParams>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            sensing: SensingMode::DepthMinpoolSemantic,
            sensing_params: SensingConfig::default(),
            reward: RewardConfig::default(),
            max_episode_steps: 150,
            augmentation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentObservation {
    pub agent: usize,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentStep {
    pub agent: usize,
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub status: EpisodeStatus,
    pub collision: CollisionReport,
}

pub struct NavEnv {
    cfg: EnvConfig,
    world: Option<WorldState>,
    histories: Vec<FrameHistory>,
    status: Vec<EpisodeStatus>,
    steps: usize,
    noise_rng: ChaCha8Rng,
}

impl NavEnv {
    pub fn new(cfg: EnvConfig) -> Self {
        Self { cfg, world: None, histories: Vec::new(), status: Vec::new(), steps: 0, noise_rng: ChaCha8Rng::seed_from_u64(0) }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn status(&self) -> &[EpisodeStatus] {
        &self.status
    }

    /// Ids of agents still running, ascending.
    pub fn running_agents(&self) -> Vec<usize> {
        self.status.iter().enumerate().filter(|(_, s)| !s.is_done()).map(|(i, _)| i).collect()
    }

    pub fn is_finished(&self) -> bool {
        self.world.is_some() && self.status.iter().all(|s| s.is_done())
    }

    pub fn reset(&mut self, scenario: &ScenarioId, seed: u64) -> Result<Vec<AgentObservation>, EnvError> {
        self.reset_description(&scenario.description(), seed)
    }

    pub fn reset_description(&mut self, desc: &SceneDescription, seed: u64) -> Result<Vec<AgentObservation>, EnvError> {
        let world = spawn_from_description(desc, seed)?;
        self.reset_world(world, seed)
    }

    /// Start an episode from an explicit world.
    pub fn reset_world(&mut self, world: WorldState, seed: u64) -> Result<Vec<AgentObservation>, EnvError> {
        self.cfg.camera.validate()?;
        let n = world.agents.len();
        self.world = Some(world);
        self.histories = vec![FrameHistory::new(); n];
        self.status = vec![EpisodeStatus::Running; n];
        self.steps = 0;
        self.noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let frame = self.sense_frame(i, [0.0, 0.0])?;
            self.histories[i].push(frame);
            out.push(AgentObservation { agent: i, observation: assemble_observation(&self.histories[i])? });
        }
        Ok(out)
    }

    fn sense_frame(&mut self, i: usize, velocity: [f64; 2]) -> Result<Frame, EnvError> {
        let world = self.world.as_ref().ok_or(EnvError::NotReset)?;
        let mut laser = sense(world, i, &self.cfg.camera, self.cfg.sensing, &self.cfg.sensing_params)?;
        if let Some(noise) = &self.cfg.augmentation {
            laser = augment_noise(&laser, noise, &mut self.noise_rng);
        }
        let (d, b) = world.agents[i].goal_polar();
        Ok(Frame { laser: laser.ranges, goal: [d, b], velocity })
    }

    /// Advance one control step. `actions` holds one action per running agent,
    /// in ascending agent order; actions are clamped to the valid box.
    pub fn step(&mut self, actions: &[Action]) -> Result<Vec<AgentStep>, EnvError> {
        let world = self.world.as_mut().ok_or(EnvError::NotReset)?;
        let running: Vec<usize> = self.status.iter().enumerate().filter(|(_, s)| !s.is_done()).map(|(i, _)| i).collect();
        if running.is_empty() {
            return Err(EnvError::EpisodeFinished);
        }
        if actions.len() != running.len() {
            return Err(EnvError::ActionCount { expected: running.len(), got: actions.len() });
        }
        for a in actions {
            if !a.v.is_finite() || !a.w_normalized.is_finite() {
                return Err(SimError::InvalidAction(format!("non-finite action ({}, {})", a.v, a.w_normalized)).into());
            }
        }
        let dt = world.dt;
        let mut prev: Vec<AgentState> = Vec::with_capacity(running.len());
        for (&i, a) in running.iter().zip(actions) {
            prev.push(world.agents[i].clone());
            world.agents[i] = step_kinematics(&world.agents[i], a.clamped(), dt)?;
        }
        world.time += dt;
        self.steps += 1;
        let timed_out = self.steps >= self.cfg.max_episode_steps;
        let mut results = Vec::with_capacity(running.len());
        for (k, &i) in running.iter().enumerate() {
            let world = self.world.as_ref().expect("checked above");
            let collision = check_collision(world, i)?;
            let curr = &world.agents[i];
            let reward = compute_reward(&prev[k], curr, &collision, &self.cfg.reward);
            let status = if collision.collided {
                EpisodeStatus::Collided
            } else if arrived(curr, &self.cfg.reward) {
                EpisodeStatus::Arrived
            } else if timed_out {
                EpisodeStatus::Timeout
            } else {
                EpisodeStatus::Running
            };
            let velocity = [curr.linear_vel, curr.angular_vel / MAX_ANGULAR_VEL];
            results.push((i, reward, status, collision, velocity));
        }
        let mut out = Vec::with_capacity(results.len());
        for &(i, reward, status, collision, velocity) in &results {
            let frame = self.sense_frame(i, velocity)?;
            self.histories[i].push(frame);
            out.push(AgentStep { agent: i, observation: assemble_observation(&self.histories[i])?, reward, status, collision });
        }
        let world = self.world.as_mut().expect("checked above");
        for &(i, _, status, _, _) in &results {
            self.status[i] = status;
            if status.is_done() {
                world.deactivate(i);
            }
        }
        Ok(out)
    }
}
