//! Built-in scenes and the JSON scene-description format.
//!
//! Every built-in scenario is a [`SceneDescription`]; spawning samples agent
//! start/goal pairs from the spawn regions and then any randomised obstacles,
//! rejecting overlapping placements. Spawning is a pure function of
//! `(description, seed)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{Aabb, Footprint, Vec2};
use super::{AgentState, Obstacle, SimError, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnPair {
    pub start: Aabb,
    pub goal: Aabb,
}

/// Parametric obstacle shapes for randomised placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObstacleTemplate {
    Cylinder { radius: [f64; 2], height: f64 },
    Box { half_extent: [f64; 2], height: f64 },
    Table { half_x: f64, half_y: f64, z: [f64; 2] },
    Cone { radius: f64, height: f64 },
    SpecialFloorPatch { half_x: f64, half_y: f64 },
    Ramp { half_x: f64, half_y: f64, rise: f64 },
}

impl ObstacleTemplate {
    fn instantiate(&self, center: Vec2, rng: &mut ChaCha8Rng) -> Obstacle {
        match *self {
            ObstacleTemplate::Cylinder { radius, height } => {
                let r = uniform(rng, radius[0], radius[1]);
                Obstacle::solid(Footprint::Circle { center, radius: r }, height)
            }
            ObstacleTemplate::Box { half_extent, height } => {
                let hx = uniform(rng, half_extent[0], half_extent[1]);
                let hy = uniform(rng, half_extent[0], half_extent[1]);
                let yaw = rng.random_range(0.0..PI);
                Obstacle::solid(Footprint::oriented_rect(center, 2.0 * hx, 2.0 * hy, yaw), height)
            }
            ObstacleTemplate::Table { half_x, half_y, z } => Obstacle::table_top(Footprint::rect(center, half_x, half_y), z[0], z[1]),
            ObstacleTemplate::Cone { radius, height } => Obstacle::cone(center, radius, height),
            ObstacleTemplate::SpecialFloorPatch { half_x, half_y } => Obstacle::special_floor(Footprint::rect(center, half_x, half_y)),
            ObstacleTemplate::Ramp { half_x, half_y, rise } => Obstacle::slope(Footprint::rect(center, half_x, half_y), 0.0, rise, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomObstacles {
    pub count: usize,
    pub region: Aabb,
    pub templates: Vec<ObstacleTemplate>,
    /// Free margin kept between these obstacles and every start and goal disk.
    #[serde(default = "default_clearance")]
    pub clearance: f64,
}

fn default_clearance() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub name: String,
    pub bounds: Aabb,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub random_obstacles: Vec<RandomObstacles>,
    pub spawns: Vec<SpawnPair>,
    /// Initial heading is the bearing to the goal plus uniform noise in ±this.
    #[serde(default)]
    pub heading_jitter: f64,
    #[serde(default = "default_radius")]
    pub agent_radius: f64,
    #[serde(default = "default_camera_height")]
    pub camera_height: f64,
    #[serde(default = "default_agent_height")]
    pub agent_height: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Minimum start-to-goal distance for each agent.
    #[serde(default)]
    pub min_goal_distance: f64,
}

fn default_radius() -> f64 {
    0.3
}
fn default_camera_height() -> f64 {
    0.3
}
fn default_agent_height() -> f64 {
    0.5
}
fn default_dt() -> f64 {
    0.1
}

impl SceneDescription {
    fn new(name: impl Into<String>, bounds: Aabb) -> Self {
        Self {
            name: name.into(),
            bounds,
            obstacles: Vec::new(),
            random_obstacles: Vec::new(),
            spawns: Vec::new(),
            heading_jitter: 0.0,
            agent_radius: default_radius(),
            camera_height: default_camera_height(),
            agent_height: default_agent_height(),
            dt: default_dt(),
            min_goal_distance: 0.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let d: SceneDescription = serde_json::from_str(text).map_err(|e| SimError::SceneFile(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene description serialises")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for ob in &self.obstacles {
            ob.validate()?;
        }
        if self.spawns.is_empty() {
            return Err(SimError::SceneFile("scene needs at least one spawn pair".into()));
        }
        if !(self.dt > 0.0) || !(self.agent_radius > 0.0) {
            return Err(SimError::SceneFile("dt and agent_radius must be positive".into()));
        }
        if self.bounds.width() <= 0.0 || self.bounds.height() <= 0.0 {
            return Err(SimError::SceneFile("empty bounds".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn sample_in(rng: &mut ChaCha8Rng, r: &Aabb) -> Vec2 {
    Vec2::new(uniform(rng, r.min.x, r.max.x), uniform(rng, r.min.y, r.max.y))
}

fn square(c: Vec2, half: f64) -> Aabb {
    Aabb::new(Vec2::new(c.x - half, c.y - half), Vec2::new(c.x + half, c.y + half))
}

const MAX_ATTEMPTS: usize = 2000;

/// Sample a world from a description. Deterministic in `(desc, seed)`.
pub fn spawn_from_description(desc: &SceneDescription, seed: u64) -> Result<WorldState, SimError> {
    desc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fail = |reason: String| SimError::Spawn { scenario: desc.name.clone(), reason };
    let r = desc.agent_radius;
    let mut starts: Vec<Vec2> = Vec::new();
    let mut goals: Vec<Vec2> = Vec::new();
    let blocked = |p: Vec2, margin: f64| desc.obstacles.iter().any(|o| o.blocks_travel() && o.footprint.distance(p) < r + margin);
    for pair in &desc.spawns {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let s = sample_in(&mut rng, &pair.start);
            let g = sample_in(&mut rng, &pair.goal);
            let ok = desc.bounds.contains(s)
                && desc.bounds.contains(g)
                && s.dist(g) >= desc.min_goal_distance
                && !blocked(s, 0.05)
                && !blocked(g, 0.0)
                && starts.iter().all(|o| o.dist(s) >= 2.0 * r + 0.1)
                && goals.iter().all(|o| o.dist(g) >= 2.0 * r + 0.1);
            if ok {
                starts.push(s);
                goals.push(g);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(fail(format!("could not place agent {}", starts.len())));
        }
    }
    let mut obstacles = desc.obstacles.clone();
    for gen in &desc.random_obstacles {
        if gen.templates.is_empty() {
            return Err(fail("random obstacle generator without templates".into()));
        }
        for _ in 0..gen.count {
            let mut placed = false;
            for _ in 0..MAX_ATTEMPTS {
                let c = sample_in(&mut rng, &gen.region);
                let t = &gen.templates[rng.random_range(0..gen.templates.len())];
                let ob = t.instantiate(c, &mut rng);
                let keep = r + gen.clearance;
                if starts.iter().chain(goals.iter()).all(|p| ob.footprint.distance(*p) >= keep) {
                    obstacles.push(ob);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(fail("could not place random obstacle".into()));
            }
        }
    }
    for ob in &obstacles {
        ob.validate()?;
    }
    let mut world = WorldState::new(desc.bounds);
    world.dt = desc.dt;
    world.agent_height = desc.agent_height;
    world.obstacles = obstacles;
    for (s, g) in starts.into_iter().zip(goals) {
        let d = g - s;
        let jitter = if desc.heading_jitter > 0.0 { rng.random_range(-desc.heading_jitter..desc.heading_jitter) } else { 0.0 };
        let heading = super::geometry::wrap_angle(d.y.atan2(d.x) + jitter);
        let mut a = AgentState::at(s, heading, g);
        a.radius = r;
        a.camera_height = desc.camera_height;
        world.add_agent(a);
    }
    Ok(world)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    CoffeeTable,
    Table,
    FireHydrant,
    Cone,
}

impl ObstacleKind {
    pub const ALL: [ObstacleKind; 4] = [ObstacleKind::CoffeeTable, ObstacleKind::Table, ObstacleKind::FireHydrant, ObstacleKind::Cone];

    pub fn name(self) -> &'static str {
        match self {
            ObstacleKind::CoffeeTable => "coffee_table",
            ObstacleKind::Table => "table",
            ObstacleKind::FireHydrant => "fire_hydrant",
            ObstacleKind::Cone => "cone",
        }
    }

    fn obstacle(self) -> Obstacle {
        let c = Vec2::new(0.0, 0.0);
        match self {
            ObstacleKind::CoffeeTable => Obstacle::table_top(Footprint::rect(c, 0.25, 0.45), 0.08, 0.16),
            ObstacleKind::Table => Obstacle::table_top(Footprint::rect(c, 0.35, 0.6), 0.1, 0.2),
            ObstacleKind::FireHydrant => Obstacle::solid(Footprint::Circle { center: c, radius: 0.15 }, 0.5),
            ObstacleKind::Cone => Obstacle::cone(c, 0.25, 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundKind {
    SpecialFloor,
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ScenarioId {
    Empty {
        agents: usize,
    },
    Stage1Open {
        agents: usize,
    },
    /// Shrunken `Stage1Open` used for quick training runs.
    Stage1Small {
        agents: usize,
    },
    Stage2Crossing {
        agents: usize,
    },
    Stage3Corridor {
        agents: usize,
    },
    TestCrossing {
        agents: usize,
    },
    TestWalls {
        agents: usize,
    },
    TestRandom {
        agents: usize,
    },
    SingleObstacle {
        kind: ObstacleKind,
    },
    ComplexGround {
        kind: GroundKind,
    },
    /// Wall of `width` m whose near face is `distance` m ahead of the start.
    LimitationWall {
        width: f64,
        distance: f64,
    },
}

impl ScenarioId {
    pub fn description(&self) -> SceneDescription {
        match *self {
            ScenarioId::Empty { agents } => open_scene("empty", agents, 8.0, 0),
            ScenarioId::Stage1Open { agents } => open_scene("stage1_open", agents, 4.0, 3),
            ScenarioId::Stage1Small { agents } => small_scene(agents),
            ScenarioId::Stage2Crossing { agents } => crossing_scene("stage2_crossing", agents, 3.0),
            ScenarioId::Stage3Corridor { agents } => corridor_scene(agents),
            ScenarioId::TestCrossing { agents } => crossing_scene("test_crossing", agents, 3.5),
            ScenarioId::TestWalls { agents } => walls_scene(agents),
            ScenarioId::TestRandom { agents } => open_scene("test_random", agents, 4.5, 6),
            ScenarioId::SingleObstacle { kind } => single_obstacle_scene(kind),
            ScenarioId::ComplexGround { kind } => complex_ground_scene(kind),
            ScenarioId::LimitationWall { width, distance } => limitation_scene(width, distance),
        }
    }

    pub fn agent_count(&self) -> usize {
        self.description().spawns.len()
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::Empty { agents } => write!(f, "empty:{agents}"),
            ScenarioId::Stage1Open { agents } => write!(f, "stage1_open:{agents}"),
            ScenarioId::Stage1Small { agents } => write!(f, "stage1_small:{agents}"),
            ScenarioId::Stage2Crossing { agents } => write!(f, "stage2_crossing:{agents}"),
            ScenarioId::Stage3Corridor { agents } => write!(f, "stage3_corridor:{agents}"),
            ScenarioId::TestCrossing { agents } => write!(f, "test_crossing:{agents}"),
            ScenarioId::TestWalls { agents } => write!(f, "test_walls:{agents}"),
            ScenarioId::TestRandom { agents } => write!(f, "test_random:{agents}"),
            ScenarioId::SingleObstacle { kind } => write!(f, "single_obstacle:{}", kind.name()),
            ScenarioId::ComplexGround { kind } => write!(
                f,
                "complex_ground:{}",
                match kind {
                    GroundKind::SpecialFloor => "special_floor",
                    GroundKind::Slope => "slope",
                }
            ),
            ScenarioId::LimitationWall { width, distance } => write!(f, "limitation_wall:{width}:{distance}"),
        }
    }
}

impl FromStr for ScenarioId {
    type Err = SimError;

    /// `name[:arg[:arg]]`, e.g. `stage1_open:2`, `single_obstacle:table`,
    /// `limitation_wall:1.2:0.9`.
    fn from_str(s: &str) -> Result<Self, SimError> {
        let unknown = || SimError::UnknownScenario(s.to_string());
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let count = |default: usize| -> Result<usize, SimError> {
            match args.as_slice() {
                [] => Ok(default),
                [n] => n.parse().ok().filter(|&n| n > 0).ok_or_else(unknown),
                _ => Err(unknown()),
            }
        };
        let id = match name {
            "empty" => ScenarioId::Empty { agents: count(1)? },
            "stage1_open" => ScenarioId::Stage1Open { agents: count(4)? },
            "stage1_small" => ScenarioId::Stage1Small { agents: count(2)? },
            "stage2_crossing" => ScenarioId::Stage2Crossing { agents: count(6)? },
            "stage3_corridor" => ScenarioId::Stage3Corridor { agents: count(4)? },
            "test_crossing" => ScenarioId::TestCrossing { agents: count(4)? },
            "test_walls" => ScenarioId::TestWalls { agents: count(4)? },
            "test_random" => ScenarioId::TestRandom { agents: count(4)? },
            "single_obstacle" => {
                let kind = match args.as_slice() {
                    [k] => ObstacleKind::ALL.into_iter().find(|o| o.name() == *k).ok_or_else(unknown)?,
                    _ => return Err(unknown()),
                };
                ScenarioId::SingleObstacle { kind }
            }
            "complex_ground" => match args.as_slice() {
                ["special_floor"] => ScenarioId::ComplexGround { kind: GroundKind::SpecialFloor },
                ["slope"] => ScenarioId::ComplexGround { kind: GroundKind::Slope },
                _ => return Err(unknown()),
            },
            "limitation_wall" => match args.as_slice() {
                [w, d] => {
                    let width: f64 = w.parse().map_err(|_| unknown())?;
                    let distance: f64 = d.parse().map_err(|_| unknown())?;
                    if !(width > 0.0 && distance > 0.0) {
                        return Err(unknown());
                    }
                    ScenarioId::LimitationWall { width, distance }
                }
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        };
        Ok(id)
    }
}

/// A scene given either by builtin name (`"stage1_open:2"`) or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSpec {
    Named(String),
    Custom(Box<SceneDescription>),
}

impl SceneSpec {
    pub fn description(&self) -> Result<SceneDescription, SimError> {
        match self {
            SceneSpec::Named(name) => Ok(name.parse::<ScenarioId>()?.description()),
            SceneSpec::Custom(d) => {
                d.validate()?;
                Ok((**d).clone())
            }
        }
    }
}

impl From<ScenarioId> for SceneSpec {
    fn from(id: ScenarioId) -> Self {
        SceneSpec::Named(id.to_string())
    }
}

pub fn spawn_scenario(scenario: &ScenarioId, seed: u64) -> Result<WorldState, SimError> {
    spawn_from_description(&scenario.description(), seed)
}

fn clutter_templates() -> Vec<ObstacleTemplate> {
    vec![
        ObstacleTemplate::Cylinder { radius: [0.15, 0.4], height: 0.8 },
        ObstacleTemplate::Box { half_extent: [0.15, 0.4], height: 0.8 },
        ObstacleTemplate::Table { half_x: 0.3, half_y: 0.5, z: [0.1, 0.2] },
        ObstacleTemplate::Cone { radius: 0.25, height: 0.5 },
    ]
}

fn open_scene(name: &str, agents: usize, half: f64, n_obstacles: usize) -> SceneDescription {
    let b = half + 1.5;
    let mut d = SceneDescription::new(name, Aabb::new(Vec2::new(-b, -b), Vec2::new(b, b)));
    let region = Aabb::new(Vec2::new(-half, -half), Vec2::new(half, half));
    d.spawns = (0..agents).map(|_| SpawnPair { start: region, goal: region }).collect();
    d.min_goal_distance = 2.5;
    d.heading_jitter = FRAC_PI_2;
    if n_obstacles > 0 {
        let inner = half - 0.5;
        d.random_obstacles.push(RandomObstacles {
            count: n_obstacles,
            region: Aabb::new(Vec2::new(-inner, -inner), Vec2::new(inner, inner)),
            templates: clutter_templates(),
            clearance: 0.4,
        });
    }
    d
}

/// Two opposing lanes through a band of obstacles. The bounds sit well past
/// the goals so an overshoot is recoverable.
fn small_scene(agents: usize) -> SceneDescription {
    let mut d = SceneDescription::new("stage1_small", Aabb::new(Vec2::new(-9.0, -9.0), Vec2::new(9.0, 9.0)));
    let upper = |x0: f64, x1: f64| Aabb::new(Vec2::new(x0, 0.6), Vec2::new(x1, 2.0));
    let lower = |x0: f64, x1: f64| Aabb::new(Vec2::new(x0, -2.0), Vec2::new(x1, -0.6));
    d.spawns = (0..agents)
        .map(|k| {
            if k % 2 == 0 {
                SpawnPair { start: upper(-2.5, -2.0), goal: upper(2.0, 2.5) }
            } else {
                SpawnPair { start: lower(2.0, 2.5), goal: lower(-2.5, -2.0) }
            }
        })
        .collect();
    d.heading_jitter = 0.3;
    d.min_goal_distance = 2.0;
    d.random_obstacles.push(RandomObstacles {
        count: 2,
        region: Aabb::new(Vec2::new(-1.2, -2.0), Vec2::new(1.2, 2.0)),
        templates: clutter_templates(),
        clearance: 0.4,
    });
    d
}

fn crossing_scene(name: &str, agents: usize, radius: f64) -> SceneDescription {
    let b = radius + 1.5;
    let mut d = SceneDescription::new(name, Aabb::new(Vec2::new(-b, -b), Vec2::new(b, b)));
    d.spawns = (0..agents)
        .map(|k| {
            let th = TAU * k as f64 / agents as f64;
            let p = Vec2::from_angle(th).scale(radius);
            SpawnPair { start: square(p, 0.2), goal: square(p.scale(-1.0), 0.2) }
        })
        .collect();
    d.heading_jitter = 0.3;
    d
}

fn wall(x0: f64, y0: f64, x1: f64, y1: f64) -> Obstacle {
    let c = Vec2::new((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    Obstacle::solid(Footprint::rect(c, (x1 - x0).abs() / 2.0, (y1 - y0).abs() / 2.0), 1.0)
}

fn corridor_scene(agents: usize) -> SceneDescription {
    let mut d = SceneDescription::new("stage3_corridor", Aabb::new(Vec2::new(-6.0, -2.0), Vec2::new(6.0, 2.0)));
    d.obstacles.push(wall(-6.0, 1.5, 6.0, 1.7));
    d.obstacles.push(wall(-6.0, -1.7, 6.0, -1.5));
    d.spawns = (0..agents)
        .map(|k| {
            let left = Aabb::new(Vec2::new(-5.0, -1.0), Vec2::new(-3.5, 1.0));
            let right = Aabb::new(Vec2::new(3.5, -1.0), Vec2::new(5.0, 1.0));
            if k % 2 == 0 {
                SpawnPair { start: left, goal: right }
            } else {
                SpawnPair { start: right, goal: left }
            }
        })
        .collect();
    d.random_obstacles.push(RandomObstacles {
        count: 2,
        region: Aabb::new(Vec2::new(-2.5, -1.0), Vec2::new(2.5, 1.0)),
        templates: vec![ObstacleTemplate::Box { half_extent: [0.15, 0.3], height: 0.8 }, ObstacleTemplate::Cylinder { radius: [0.15, 0.3], height: 0.8 }],
        clearance: 0.4,
    });
    d.heading_jitter = 0.3;
    d
}

fn walls_scene(agents: usize) -> SceneDescription {
    let mut d = SceneDescription::new("test_walls", Aabb::new(Vec2::new(-5.5, -5.5), Vec2::new(5.5, 5.5)));
    d.obstacles.push(wall(-1.5, 1.0, 1.5, 1.2));
    d.obstacles.push(wall(-1.5, -1.2, 1.5, -1.0));
    d.obstacles.push(wall(-0.1, -3.0, 0.1, -2.0));
    d.obstacles.push(wall(-0.1, 2.0, 0.1, 3.0));
    let west = Aabb::new(Vec2::new(-4.5, -4.0), Vec2::new(-3.0, 4.0));
    let east = Aabb::new(Vec2::new(3.0, -4.0), Vec2::new(4.5, 4.0));
    d.spawns = (0..agents).map(|k| if k % 2 == 0 { SpawnPair { start: west, goal: east } } else { SpawnPair { start: east, goal: west } }).collect();
    d.heading_jitter = 0.3;
    d
}

fn single_obstacle_scene(kind: ObstacleKind) -> SceneDescription {
    let mut d = SceneDescription::new(format!("single_obstacle:{}", kind.name()), Aabb::new(Vec2::new(-4.0, -3.0), Vec2::new(4.0, 3.0)));
    d.obstacles.push(kind.obstacle());
    d.spawns =
        vec![SpawnPair { start: Aabb::new(Vec2::new(-2.6, -0.15), Vec2::new(-2.4, 0.15)), goal: Aabb::new(Vec2::new(2.0, -0.15), Vec2::new(2.4, 0.15)) }];
    d.heading_jitter = 0.1;
    d
}

fn complex_ground_scene(kind: GroundKind) -> SceneDescription {
    let name = match kind {
        GroundKind::SpecialFloor => "complex_ground:special_floor",
        GroundKind::Slope => "complex_ground:slope",
    };
    let mut d = SceneDescription::new(name, Aabb::new(Vec2::new(-4.0, -3.0), Vec2::new(4.0, 3.0)));
    d.spawns =
        vec![SpawnPair { start: Aabb::new(Vec2::new(-2.6, -0.15), Vec2::new(-2.4, 0.15)), goal: Aabb::new(Vec2::new(2.2, -0.15), Vec2::new(2.6, 0.15)) }];
    let template = match kind {
        GroundKind::SpecialFloor => ObstacleTemplate::SpecialFloorPatch { half_x: 0.5, half_y: 0.6 },
        GroundKind::Slope => ObstacleTemplate::Ramp { half_x: 0.6, half_y: 0.8, rise: 0.08 },
    };
    d.random_obstacles.push(RandomObstacles {
        count: 1,
        region: Aabb::new(Vec2::new(-0.8, -0.5), Vec2::new(0.8, 0.5)),
        templates: vec![template],
        clearance: 0.2,
    });
    d.heading_jitter = 0.1;
    d
}

fn limitation_scene(width: f64, distance: f64) -> SceneDescription {
    let far = distance + 1.6;
    let half_w = width / 2.0;
    let mut d =
        SceneDescription::new(format!("limitation_wall:{width}:{distance}"), Aabb::new(Vec2::new(-2.0, -half_w - 3.0), Vec2::new(far + 2.5, half_w + 3.0)));
    d.obstacles.push(wall(distance, -half_w, distance + 0.1, half_w));
    d.spawns = vec![SpawnPair { start: Aabb::new(Vec2::new(0.0, -0.02), Vec2::new(0.0, 0.02)), goal: Aabb::new(Vec2::new(far, -0.05), Vec2::new(far, 0.05)) }];
    d
}
