use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EpisodeLog, EvalError};
use crate::worldsim::{step_kinematics, Action, AgentState, SimError, WorldState};

/// State after each step; row 0 is the initial state at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Action executed to reach this row (0 on the first row).
    pub v: f64,
    pub w: f64,
    pub r_goal: f64,
    pub r_collision: f64,
    pub r_rotational: f64,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub scene: String,
    pub seed: u64,
    pub agent: usize,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,heading,v,w,r_goal,r_collision,r_rotational,reward,done\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.t, r.x, r.y, r.heading, r.v, r.w, r.r_goal, r.r_collision, r.r_rotational, r.reward, r.done as u8
            );
        }
        s
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

/// One CSV per agent per episode plus a `…_scene.json` with the episode's
/// initial world. Returns the paths written.
pub fn export_trajectories(logs: &[EpisodeLog], dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let mut written = Vec::new();
    if logs.is_empty() {
        return Ok(written);
    }
    std::fs::create_dir_all(dir)?;
    for (e, log) in logs.iter().enumerate() {
        let stem = format!("ep{e:04}_{}", sanitize(&log.scene));
        let scene = dir.join(format!("{stem}_scene.json"));
        std::fs::write(&scene, serde_json::to_string_pretty(&log.initial_world).expect("world serialises"))?;
        written.push(scene);
        for rec in &log.trajectories {
            let p = dir.join(format!("{stem}_agent{}.csv", rec.agent));
            std::fs::write(&p, rec.to_csv())?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Integrate the recorded actions from the initial state of `agent`,
/// returning the position after each step.
pub fn replay_positions(world: &WorldState, agent: usize, rows: &[TrajectoryRow]) -> Result<Vec<(f64, f64)>, SimError> {
    let mut a: AgentState = world.agents.get(agent).ok_or(SimError::AgentIndex(agent))?.clone();
    let mut out = vec![(a.position.x, a.position.y)];
    for r in rows.iter().skip(1) {
        a = step_kinematics(&a, Action::new(r.v, r.w), world.dt)?;
        out.push((a.position.x, a.position.y));
    }
    Ok(out)
}
