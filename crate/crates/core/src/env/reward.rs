use serde::{Deserialize, Serialize};

use crate::worldsim::{AgentState, CollisionReport, MAX_ANGULAR_VEL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub r_arrival: f64,
    pub omega_g: f64,
    pub r_collision: f64,
    pub omega_w: f64,
    /// Arrival radius around the goal (m).
    pub goal_radius: f64,
    /// Normalised angular speed above which rotation is penalised.
    pub w_penalty_threshold: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { r_arrival: 15.0, omega_g: 2.5, r_collision: -15.0, omega_w: -0.1, goal_radius: 0.1, w_penalty_threshold: 0.7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_goal: f64,
    pub r_collision: f64,
    pub r_rotational: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(r_goal: f64, r_collision: f64, r_rotational: f64) -> Self {
        Self { r_goal, r_collision, r_rotational, total: r_goal + r_collision + r_rotational }
    }
}

pub fn arrived(state: &AgentState, cfg: &RewardConfig) -> bool {
    state.goal_distance() < cfg.goal_radius
}

/// Goal progress (or arrival bonus), collision penalty and rotation penalty
/// for the transition `prev → curr`.
pub fn compute_reward(prev: &AgentState, curr: &AgentState, events: &CollisionReport, cfg: &RewardConfig) -> RewardBreakdown {
    let r_goal = if arrived(curr, cfg) { cfg.r_arrival } else { cfg.omega_g * (prev.goal_distance() - curr.goal_distance()) };
    let r_collision = if events.collided { cfg.r_collision } else { 0.0 };
    let w = (curr.angular_vel / MAX_ANGULAR_VEL).abs();
    let r_rotational = if w > cfg.w_penalty_threshold { cfg.omega_w * w } else { 0.0 };
    RewardBreakdown::new(r_goal, r_collision, r_rotational)
}
