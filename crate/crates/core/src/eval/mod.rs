//! Evaluation: success rate and time-to-goal over seeded trials, ablation
//! tables, the wall-occupancy sweep and trajectory export.

mod ablation;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use ablation::{run_ablation, AblationEntry, AblationRow, AblationSpec, AblationTable};
pub use trajectory::{export_trajectories, replay_positions, TrajectoryRecord, TrajectoryRow};

use crate::config::RunConfig;
use crate::env::{EnvConfig, EnvError, EpisodeStatus, NavEnv, Observation};
use crate::nn::{HiddenState, NnError, Policy, PolicyInput};
use crate::trainer::Checkpoint;
use crate::worldsim::{Action, ScenarioId, SceneDescription, SimError, Vec2, WorldState};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("scene: {0}")]
    Scene(#[from] SimError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint refused: {0}")]
    Checkpoint(String),
    #[error("no checkpoint for ablation spec {0}")]
    MissingCheckpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub success_rate: f64,
    /// Mean simulated seconds over successful trials; absent with no successes.
    pub average_time: Option<f64>,
    pub n_trials: usize,
    pub n_success: usize,
    pub n_collision: usize,
    pub n_timeout: usize,
}

impl Metrics {
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let n = outcomes.len();
        let succ: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.status == EpisodeStatus::Arrived).collect();
        let n_collision = outcomes.iter().filter(|o| o.status == EpisodeStatus::Collided).count();
        let n_timeout = outcomes.iter().filter(|o| o.status == EpisodeStatus::Timeout).count();
        Metrics {
            success_rate: if n == 0 { 0.0 } else { succ.len() as f64 / n as f64 },
            average_time: (!succ.is_empty()).then(|| succ.iter().map(|o| o.time).sum::<f64>() / succ.len() as f64),
            n_trials: n,
            n_success: succ.len(),
            n_collision,
            n_timeout,
        }
    }
}

/// Result of one agent in one evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub agent: usize,
    pub status: EpisodeStatus,
    pub steps: usize,
    /// Simulated seconds until the episode ended for this agent.
    pub time: f64,
}

/// Anything that maps observations to actions for the running agents.
pub trait Controller {
    fn begin_episode(&mut self, world: &WorldState);
    /// `agents` ascending; returns one action per entry.
    fn act(&mut self, world: &WorldState, agents: &[usize], obs: &[&Observation]) -> Result<Vec<Action>, EvalError>;
}

/// Deterministic policy: acts at the distribution mean.
pub struct PolicyController {
    pub policy: Policy,
    pub params: Vec<f64>,
    hidden: Vec<HiddenState>,
}

impl PolicyController {
    pub fn new(policy: Policy, params: Vec<f64>) -> Self {
        Self { policy, params, hidden: Vec::new() }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, EvalError> {
        let policy = Policy::new(ckpt.policy.clone())?;
        if policy.num_params() != ckpt.params.len() {
            return Err(EvalError::Checkpoint(format!("expected {} parameters, checkpoint has {}", policy.num_params(), ckpt.params.len())));
        }
        Ok(Self::new(policy, ckpt.params.clone()))
    }
}

impl Controller for PolicyController {
    fn begin_episode(&mut self, world: &WorldState) {
        self.hidden = vec![HiddenState::zeros(self.policy.config().state_size()); world.agents.len()];
    }

    fn act(&mut self, _world: &WorldState, agents: &[usize], obs: &[&Observation]) -> Result<Vec<Action>, EvalError> {
        let hs = self.policy.config().state_size();
        let input = PolicyInput::from_observations(obs.iter().copied(), self.policy.config());
        let mut h0 = HiddenState { h: Vec::with_capacity(agents.len() * hs), c: Vec::with_capacity(agents.len() * hs) };
        for &a in agents {
            h0.h.extend_from_slice(&self.hidden[a].h);
            h0.c.extend_from_slice(&self.hidden[a].c);
        }
        let out = self.policy.forward(&self.params, &input, 1, agents.len(), &h0)?;
        let mut actions = Vec::with_capacity(agents.len());
        for (r, &a) in agents.iter().enumerate() {
            actions.push(self.policy.dist(&self.params, &out, r).mode());
            if hs > 0 {
                self.hidden[a] = HiddenState { h: out.hidden.h[r * hs..(r + 1) * hs].to_vec(), c: out.hidden.c[r * hs..(r + 1) * hs].to_vec() };
            }
        }
        Ok(actions)
    }
}

/// Steers straight at the goal using privileged state; ignores obstacles.
#[derive(Debug, Clone, Default)]
pub struct GoalSeeker;

impl Controller for GoalSeeker {
    fn begin_episode(&mut self, _world: &WorldState) {}

    fn act(&mut self, world: &WorldState, agents: &[usize], _obs: &[&Observation]) -> Result<Vec<Action>, EvalError> {
        Ok(agents
            .iter()
            .map(|&i| {
                let (d, bearing) = world.agents[i].goal_polar();
                let w = (bearing / (world.dt * crate::worldsim::MAX_ANGULAR_VEL)).clamp(-1.0, 1.0);
                let v = if bearing.abs() > 0.5 { 0.0 } else { (d / world.dt).min(1.0) };
                Action::new(v, w)
            })
            .collect())
    }
}

/// Replays a fixed action regardless of input.
#[derive(Debug, Clone)]
pub struct ConstantController(pub Action);

impl Controller for ConstantController {
    fn begin_episode(&mut self, _world: &WorldState) {}

    fn act(&mut self, _world: &WorldState, agents: &[usize], _obs: &[&Observation]) -> Result<Vec<Action>, EvalError> {
        Ok(vec![self.0; agents.len()])
    }
}

/// Everything one evaluation episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scene: String,
    pub seed: u64,
    pub initial_world: WorldState,
    pub outcomes: Vec<TrialOutcome>,
    pub trajectories: Vec<TrajectoryRecord>,
}

fn initial_row(a: &crate::worldsim::AgentState) -> TrajectoryRow {
    TrajectoryRow {
        t: 0.0,
        x: a.position.x,
        y: a.position.y,
        heading: a.heading,
        v: 0.0,
        w: 0.0,
        r_goal: 0.0,
        r_collision: 0.0,
        r_rotational: 0.0,
        reward: 0.0,
        done: false,
    }
}

/// Run one episode of `desc` to completion.
pub fn run_episode(env_cfg: &EnvConfig, desc: &SceneDescription, seed: u64, trial: usize, ctl: &mut dyn Controller) -> Result<EpisodeLog, EvalError> {
    let mut env = NavEnv::new(env_cfg.clone());
    let first = env.reset_description(desc, seed)?;
    let world0 = env.world().expect("just reset").clone();
    ctl.begin_episode(&world0);
    let n = world0.agents.len();
    let mut obs: Vec<Option<Observation>> = vec![None; n];
    for o in first {
        obs[o.agent] = Some(o.observation);
    }
    let mut traj: Vec<TrajectoryRecord> =
        world0.agents.iter().enumerate().map(|(i, a)| TrajectoryRecord { scene: desc.name.clone(), seed, agent: i, rows: vec![initial_row(a)] }).collect();
    let mut outcomes = Vec::new();
    while !env.is_finished() {
        let running = env.running_agents();
        let views: Vec<&Observation> = running.iter().map(|&i| obs[i].as_ref().expect("running agents have observations")).collect();
        let actions = ctl.act(env.world().expect("reset"), &running, &views)?;
        let steps = env.step(&actions)?;
        let world = env.world().expect("reset");
        for (st, act) in steps.into_iter().zip(&actions) {
            let a = &world.agents[st.agent];
            let clamped = act.clamped();
            traj[st.agent].rows.push(TrajectoryRow {
                t: world.time,
                x: a.position.x,
                y: a.position.y,
                heading: a.heading,
                v: clamped.v,
                w: clamped.w_normalized,
                r_goal: st.reward.r_goal,
                r_collision: st.reward.r_collision,
                r_rotational: st.reward.r_rotational,
                reward: st.reward.total,
                done: st.status.is_done(),
            });
            if st.status.is_done() {
                outcomes.push(TrialOutcome { trial, seed, agent: st.agent, status: st.status, steps: env.steps(), time: env.steps() as f64 * world.dt });
            }
            obs[st.agent] = Some(st.observation);
        }
    }
    outcomes.sort_by_key(|o| o.agent);
    Ok(EpisodeLog { scene: desc.name.clone(), seed, initial_world: world0, outcomes, trajectories: traj })
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(trial as u64)
}

/// `n_trials` seeded episodes; every agent of every episode is one outcome.
pub fn run_trials(
    env_cfg: &EnvConfig,
    desc: &SceneDescription,
    n_trials: usize,
    seed: u64,
    ctl: &mut dyn Controller,
) -> Result<(Metrics, Vec<EpisodeLog>), EvalError> {
    let mut logs = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let log = run_episode(env_cfg, desc, trial_seed(seed, trial), trial, ctl)?;
        for o in &log.outcomes {
            log::debug!("trial {} seed {} agent {}: {:?} after {} steps", o.trial, o.seed, o.agent, o.status, o.steps);
        }
        logs.push(log);
    }
    let outcomes: Vec<TrialOutcome> = logs.iter().flat_map(|l| l.outcomes.iter().cloned()).collect();
    Ok((Metrics::from_outcomes(&outcomes), logs))
}

/// Evaluate a checkpoint without augmentation at the policy mean. The run
/// configuration's network and camera must match the checkpoint.
pub fn run_eval(ckpt: &Checkpoint, scenario: &SceneDescription, n_trials: usize, seed: u64, run: &RunConfig) -> Result<Metrics, EvalError> {
    Ok(run_eval_logged(ckpt, scenario, n_trials, seed, run)?.0)
}

pub fn run_eval_logged(
    ckpt: &Checkpoint,
    scenario: &SceneDescription,
    n_trials: usize,
    seed: u64,
    run: &RunConfig,
) -> Result<(Metrics, Vec<EpisodeLog>), EvalError> {
    ckpt.check_compatible(&run.policy_config(), &run.camera).map_err(EvalError::Checkpoint)?;
    let mut ctl = PolicyController::from_checkpoint(ckpt)?;
    run_trials(&run.env_config(false), scenario, n_trials, seed, &mut ctl)
}

/// One cell of the occupancy sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitationCell {
    pub wall_width: f64,
    pub distance: f64,
    /// Fraction of the horizontal field of view the wall spans from the start.
    pub occupancy: f64,
    /// Distance over the camera's maximum range.
    pub normalized_distance: f64,
    pub success_rate: f64,
    pub n_trials: usize,
}

/// Angular share of the field of view covered by a centred wall of `width`
/// whose near face is `distance` ahead.
pub fn wall_occupancy(width: f64, distance: f64, hfov: f64) -> f64 {
    (2.0 * (width / (2.0 * distance)).atan() / hfov).min(1.0)
}

/// Wall width that spans `occupancy` of the field of view at `distance`.
pub fn width_for_occupancy(occupancy: f64, distance: f64, hfov: f64) -> f64 {
    2.0 * distance * (occupancy * hfov / 2.0).tan()
}

pub fn normalized_distance(distance: f64, max_range: f64) -> f64 {
    distance / max_range
}

pub fn run_limitation_sweep(
    widths: &[f64],
    distances: &[f64],
    n_trials: usize,
    seed: u64,
    env_cfg: &EnvConfig,
    ctl: &mut dyn Controller,
) -> Result<Vec<LimitationCell>, EvalError> {
    let mut cells = Vec::new();
    for &d in distances {
        for &w in widths {
            let desc = ScenarioId::LimitationWall { width: w, distance: d }.description();
            let (m, _) = run_trials(env_cfg, &desc, n_trials, seed, ctl)?;
            cells.push(LimitationCell {
                wall_width: w,
                distance: d,
                occupancy: wall_occupancy(w, d, env_cfg.camera.horizontal_fov),
                normalized_distance: normalized_distance(d, env_cfg.camera.max_range),
                success_rate: m.success_rate,
                n_trials: m.n_trials,
            });
        }
    }
    Ok(cells)
}

pub fn limitation_csv(cells: &[LimitationCell]) -> String {
    let mut s = String::from("wall_width,distance,occupancy,normalized_distance,success_rate,n_trials\n");
    for c in cells {
        s.push_str(&format!("{},{},{},{},{},{}\n", c.wall_width, c.distance, c.occupancy, c.normalized_distance, c.success_rate, c.n_trials));
    }
    s
}

/// Positions of the agents at the start, for overlays.
pub fn start_positions(world: &WorldState) -> Vec<Vec2> {
    world.agents.iter().map(|a| a.position).collect()
}
