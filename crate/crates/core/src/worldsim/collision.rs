use serde::{Deserialize, Serialize};

use super::{SimError, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionWith {
    Agent,
    Obstacle,
    Bounds,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub collided: bool,
    pub with: CollisionWith,
}

impl CollisionReport {
    pub const NONE: CollisionReport = CollisionReport { collided: false, with: CollisionWith::None };

    fn hit(with: CollisionWith) -> Self {
        Self { collided: true, with }
    }
}

/// Agent-agent contact below `2R`, obstacle footprint closer than `R`
/// (slopes excepted), or centre outside the world bounds.
pub fn check_collision(world: &WorldState, agent_index: usize) -> Result<CollisionReport, SimError> {
    let me = world.agents.get(agent_index).ok_or(SimError::AgentIndex(agent_index))?;
    let p = me.position;
    for (j, other) in world.agents.iter().enumerate() {
        if j == agent_index || !world.is_active(j) {
            continue;
        }
        if p.dist(other.position) < me.radius + other.radius {
            return Ok(CollisionReport::hit(CollisionWith::Agent));
        }
    }
    for ob in world.obstacles.iter().filter(|o| o.blocks_travel()) {
        if ob.footprint.distance(p) < me.radius {
            return Ok(CollisionReport::hit(CollisionWith::Obstacle));
        }
    }
    if !world.bounds.contains(p) {
        return Ok(CollisionReport::hit(CollisionWith::Bounds));
    }
    Ok(CollisionReport::NONE)
}
