//! Deterministic 2.5D world: obstacles with vertical extent, unicycle agents,
//! collision checks and a ray-cast camera producing depth and traversability.

mod collision;
pub mod geometry;
mod kinematics;
mod render;
pub mod scenario;

use serde::{Deserialize, Serialize};

pub use collision::{check_collision, CollisionReport, CollisionWith};
pub use geometry::{Aabb, Footprint, Vec2};
pub use kinematics::{step_kinematics, Action, MAX_ANGULAR_VEL};
pub use render::{
    cast_planar_laser, column_bearing, pixel_ray, render, render_depth, render_hits, render_traversability, HitImage, PixelHit, RenderOutput, SurfaceKind,
};
pub use scenario::{spawn_from_description, spawn_scenario, ScenarioId, SceneDescription, SceneSpec};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid obstacle: {0}")]
    InvalidObstacle(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("spawn failed for {scenario}: {reason}")]
    Spawn { scenario: String, reason: String },
    #[error("scene file: {0}")]
    SceneFile(String),
    #[error("agent index {0} out of range")]
    AgentIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleCategory {
    Solid,
    /// Raised slab; `z_lo > 0` leaves free space underneath.
    TableTop,
    /// Radius tapers linearly from the footprint radius at `z_lo` to zero at `z_hi`.
    Cone,
    /// Floor-level patch that looks like floor in depth but blocks travel.
    SpecialFloor,
    /// Traversable ramp; floor height rises from `z_lo` to `z_hi` along the slope direction.
    Slope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub footprint: Footprint,
    pub height_interval: [f64; 2],
    pub category: ObstacleCategory,
    /// Uphill direction in radians; only meaningful for slopes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_direction: Option<f64>,
}

impl Obstacle {
    pub fn solid(footprint: Footprint, height: f64) -> Self {
        Self { footprint, height_interval: [0.0, height], category: ObstacleCategory::Solid, slope_direction: None }
    }

    pub fn table_top(footprint: Footprint, z_lo: f64, z_hi: f64) -> Self {
        Self { footprint, height_interval: [z_lo, z_hi], category: ObstacleCategory::TableTop, slope_direction: None }
    }

    pub fn cone(center: Vec2, base_radius: f64, height: f64) -> Self {
        Self {
            footprint: Footprint::Circle { center, radius: base_radius },
            height_interval: [0.0, height],
            category: ObstacleCategory::Cone,
            slope_direction: None,
        }
    }

    pub fn special_floor(footprint: Footprint) -> Self {
        Self { footprint, height_interval: [0.0, 0.0], category: ObstacleCategory::SpecialFloor, slope_direction: None }
    }

    pub fn slope(footprint: Footprint, z_lo: f64, z_hi: f64, direction: f64) -> Self {
        Self { footprint, height_interval: [z_lo, z_hi], category: ObstacleCategory::Slope, slope_direction: Some(direction) }
    }

    /// Whether the obstacle blocks travel (everything except slopes).
    pub fn blocks_travel(&self) -> bool {
        self.category != ObstacleCategory::Slope
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.footprint.validate().map_err(SimError::InvalidObstacle)?;
        let [lo, hi] = self.height_interval;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 {
            return Err(SimError::InvalidObstacle(format!("bad height interval [{lo}, {hi}]")));
        }
        match self.category {
            ObstacleCategory::SpecialFloor if lo != 0.0 || hi != 0.0 => Err(SimError::InvalidObstacle("special_floor must have height interval [0, 0]".into())),
            ObstacleCategory::TableTop if lo <= 0.0 => Err(SimError::InvalidObstacle("table_top needs z_lo > 0".into())),
            ObstacleCategory::Cone if !matches!(self.footprint, Footprint::Circle { .. }) || hi <= lo => {
                Err(SimError::InvalidObstacle("cone needs a circular footprint and positive height".into()))
            }
            ObstacleCategory::Slope if self.slope_direction.is_none() => Err(SimError::InvalidObstacle("slope needs a slope_direction".into())),
            ObstacleCategory::Solid if hi <= lo => Err(SimError::InvalidObstacle("solid obstacle needs positive height".into())),
            _ => Ok(()),
        }
    }

    /// Floor height of a slope at `p` (assumes `p` inside the footprint).
    pub(crate) fn slope_height(&self, p: Vec2) -> f64 {
        let dir = Vec2::from_angle(self.slope_direction.unwrap_or(0.0));
        let (lo, hi) = footprint_extent(&self.footprint, dir);
        let s = if hi > lo { ((p.dot(dir) - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        self.height_interval[0] + s * (self.height_interval[1] - self.height_interval[0])
    }
}

/// Extent of a footprint projected onto a unit direction.
pub(crate) fn footprint_extent(fp: &Footprint, dir: Vec2) -> (f64, f64) {
    match fp {
        Footprint::Circle { center, radius } => {
            let c = center.dot(dir);
            (c - radius, c + radius)
        }
        Footprint::Polygon { vertices } => vertices.iter().map(|v| v.dot(dir)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec2,
    pub heading: f64,
    pub linear_vel: f64,
    pub angular_vel: f64,
    pub radius: f64,
    pub goal: Vec2,
    pub camera_height: f64,
}

impl AgentState {
    pub fn at(position: Vec2, heading: f64, goal: Vec2) -> Self {
        Self { position, heading, linear_vel: 0.0, angular_vel: 0.0, radius: 0.3, goal, camera_height: 0.3 }
    }

    pub fn goal_distance(&self) -> f64 {
        self.position.dist(self.goal)
    }

    /// Goal in the agent frame as (distance, bearing), bearing positive to the left.
    pub fn goal_polar(&self) -> (f64, f64) {
        let d = self.goal - self.position;
        let (s, c) = self.heading.sin_cos();
        let local_x = c * d.x + s * d.y;
        let local_y = -s * d.x + c * d.y;
        (local_x.hypot(local_y), local_y.atan2(local_x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub height: usize,
    pub width: usize,
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self { horizontal_fov: std::f64::consts::FRAC_PI_2, vertical_fov: std::f64::consts::FRAC_PI_3, height: 48, width: 96, max_range: 6.0 }
    }
}

impl CameraModel {
    pub fn with_size(height: usize, width: usize) -> Self {
        Self { height, width, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        use std::f64::consts::PI;
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov <= PI) {
            return Err(SimError::InvalidCamera(format!("horizontal_fov {} outside (0, π]", self.horizontal_fov)));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < PI) {
            return Err(SimError::InvalidCamera(format!("vertical_fov {} outside (0, π)", self.vertical_fov)));
        }
        if self.height < 8 || self.width < 8 {
            return Err(SimError::InvalidCamera(format!("image {}x{} smaller than 8x8", self.height, self.width)));
        }
        if self.height % 2 != 0 {
            return Err(SimError::InvalidCamera("image height must be even".into()));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(SimError::InvalidCamera("max_range must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub obstacles: Vec<Obstacle>,
    pub agents: Vec<AgentState>,
    pub bounds: Aabb,
    pub time: f64,
    pub dt: f64,
    /// Body height of agents as seen by other agents' sensors.
    pub agent_height: f64,
    /// Agents removed from the scene after finishing; skipped by sensing and collisions.
    pub inactive: Vec<bool>,
}

impl WorldState {
    pub fn new(bounds: Aabb) -> Self {
        Self { obstacles: Vec::new(), agents: Vec::new(), bounds, time: 0.0, dt: 0.1, agent_height: 0.5, inactive: Vec::new() }
    }

    pub fn add_agent(&mut self, agent: AgentState) -> usize {
        self.agents.push(agent);
        self.inactive.push(false);
        self.agents.len() - 1
    }

    pub fn is_active(&self, i: usize) -> bool {
        !self.inactive.get(i).copied().unwrap_or(false)
    }

    pub fn deactivate(&mut self, i: usize) {
        if let Some(f) = self.inactive.get_mut(i) {
            *f = true;
        }
    }
}
