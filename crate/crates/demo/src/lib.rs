//! Browser demo over the simulator and sensing pipeline.
//!
//! Three operations: drive an agent around a scene and watch its depth,
//! mask and pseudo-laser update; switch between sensing variants; apply the
//! junction-aware noise augmentation to the current scan.

use mononav::pseudolaser::{augment_noise_seeded, sense, NoiseParams, PseudoLaser, SensingConfig, SensingMode};
use mononav::worldsim::{check_collision, render_hits, spawn_scenario, step_kinematics, Action, CameraModel, Footprint, ScenarioId, WorldState};
use wasm_bindgen::prelude::*;

/// Plain-Rust core of the demo; the wasm wrapper only converts errors.
#[derive(Debug, Clone)]
pub struct Session {
    pub world: WorldState,
    pub camera: CameraModel,
    pub agent: usize,
    pub sensing: SensingMode,
}

impl Session {
    pub fn new(scenario: &str, seed: u64, height: usize, width: usize) -> Result<Self, String> {
        let id: ScenarioId = scenario.parse().map_err(|e| format!("{e}"))?;
        let world = spawn_scenario(&id, seed).map_err(|e| e.to_string())?;
        let camera = CameraModel::with_size(height, width);
        camera.validate().map_err(|e| e.to_string())?;
        Ok(Self { world, camera, agent: 0, sensing: SensingMode::default() })
    }

    pub fn set_sensing(&mut self, name: &str) -> Result<(), String> {
        self.sensing = name.parse()?;
        Ok(())
    }

    /// One control step for the viewed agent; returns whether it collided.
    pub fn drive(&mut self, v: f64, w: f64) -> Result<bool, String> {
        let a = &self.world.agents[self.agent];
        let next = step_kinematics(a, Action::new(v, w).clamped(), self.world.dt).map_err(|e| e.to_string())?;
        let prev = std::mem::replace(&mut self.world.agents[self.agent], next);
        let hit = check_collision(&self.world, self.agent).map_err(|e| e.to_string())?;
        if hit.collided {
            // stay put so the view never ends up inside geometry
            self.world.agents[self.agent] = prev;
        }
        Ok(hit.collided)
    }

    pub fn depth(&self) -> Result<Vec<f64>, String> {
        Ok(render_hits(&self.world, self.agent, &self.camera).map_err(|e| e.to_string())?.depth().values().to_vec())
    }

    pub fn mask(&self) -> Result<Vec<u8>, String> {
        Ok(render_hits(&self.world, self.agent, &self.camera).map_err(|e| e.to_string())?.traversability().values().to_vec())
    }

    pub fn laser(&self) -> Result<Vec<f64>, String> {
        let l = sense(&self.world, self.agent, &self.camera, self.sensing, &SensingConfig::default()).map_err(|e| e.to_string())?;
        Ok(l.ranges)
    }

    /// Top-down geometry for drawing: obstacles as polygons or circles, agents, goals.
    pub fn scene_json(&self) -> String {
        let obstacles: Vec<serde_json::Value> = self
            .world
            .obstacles
            .iter()
            .map(|o| {
                let shape = match &o.footprint {
                    Footprint::Circle { center, radius } => serde_json::json!({"circle": [center.x, center.y, radius]}),
                    Footprint::Polygon { vertices } => serde_json::json!({"polygon": vertices.iter().map(|v| [v.x, v.y]).collect::<Vec<_>>()}),
                };
                serde_json::json!({"shape": shape, "category": o.category, "z": o.height_interval})
            })
            .collect();
        let agents: Vec<serde_json::Value> = self
            .world
            .agents
            .iter()
            .map(|a| serde_json::json!({"x": a.position.x, "y": a.position.y, "heading": a.heading, "radius": a.radius, "goal": [a.goal.x, a.goal.y]}))
            .collect();
        let b = &self.world.bounds;
        serde_json::json!({
            "bounds": [b.min.x, b.min.y, b.max.x, b.max.y],
            "obstacles": obstacles,
            "agents": agents,
            "viewer": self.agent,
            "hfov": self.camera.horizontal_fov,
            "max_range": self.camera.max_range,
        })
        .to_string()
    }
}

pub fn augment_scan(ranges: Vec<f64>, max_range: f64, seed: u64) -> Result<Vec<f64>, String> {
    let laser = PseudoLaser::new(ranges, max_range).map_err(|e| e.to_string())?;
    Ok(augment_noise_seeded(&laser, &NoiseParams::default(), seed).ranges)
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub struct Demo {
    inner: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, seed: u64, height: usize, width: usize) -> Result<Demo, JsError> {
        Session::new(scenario, seed, height, width).map(|inner| Demo { inner }).map_err(js)
    }

    pub fn width(&self) -> usize {
        self.inner.camera.width
    }

    pub fn height(&self) -> usize {
        self.inner.camera.height
    }

    pub fn max_range(&self) -> f64 {
        self.inner.camera.max_range
    }

    pub fn set_sensing(&mut self, name: &str) -> Result<(), JsError> {
        self.inner.set_sensing(name).map_err(js)
    }

    pub fn drive(&mut self, v: f64, w: f64) -> Result<bool, JsError> {
        self.inner.drive(v, w).map_err(js)
    }

    pub fn depth(&self) -> Result<Vec<f64>, JsError> {
        self.inner.depth().map_err(js)
    }

    pub fn mask(&self) -> Result<Vec<u8>, JsError> {
        self.inner.mask().map_err(js)
    }

    pub fn laser(&self) -> Result<Vec<f64>, JsError> {
        self.inner.laser().map_err(js)
    }

    pub fn scene_json(&self) -> String {
        self.inner.scene_json()
    }
}

#[wasm_bindgen]
pub fn augment(ranges: Vec<f64>, max_range: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    augment_scan(ranges, max_range, seed).map_err(js)
}

#[wasm_bindgen]
pub fn sensing_modes() -> Vec<String> {
    SensingMode::ALL.iter().map(|m| m.name().to_string()).collect()
}
