//! Ray-cast camera. Columns are equiangular in bearing (so a pseudo-laser bin
//! and an ideal laser beam share the same direction); each column is a
//! vertical pinhole slice. Depth is Euclidean distance along the ray.
//!
//! Intersections are computed per column in terms of the horizontal distance
//! `r` along the bearing; a pixel with elevation `el` reaches height
//! `h + r·tan(el)` and Euclidean depth `r / cos(el)`.

use serde::{Deserialize, Serialize};

use super::geometry::Vec2;
use super::{footprint_extent, CameraModel, Footprint, Obstacle, ObstacleCategory, SimError, WorldState};
use crate::pseudolaser::{DepthImage, TraversabilityMask};

/// Smallest depth the renderer emits; 0 is reserved for masked pixels.
pub const MIN_DEPTH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum SurfaceKind {
    Floor,
    Slope(usize),
    SpecialFloor(usize),
    Obstacle(usize),
    Agent(usize),
    Background,
}

impl SurfaceKind {
    /// Traversability label: 0 for plain floor and slopes, 1 otherwise.
    pub fn label(self) -> u8 {
        match self {
            SurfaceKind::Floor | SurfaceKind::Slope(_) => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelHit {
    pub depth: f64,
    pub kind: SurfaceKind,
}

/// Per-pixel first-hit record, row-major `height × width`.
#[derive(Debug, Clone, PartialEq)]
pub struct HitImage {
    pub height: usize,
    pub width: usize,
    pub max_range: f64,
    pub hits: Vec<PixelHit>,
}

impl HitImage {
    pub fn at(&self, row: usize, col: usize) -> PixelHit {
        self.hits[row * self.width + col]
    }

    pub fn depth(&self) -> DepthImage {
        DepthImage::new(self.height, self.width, self.max_range, self.hits.iter().map(|h| h.depth).collect()).expect("renderer emits a well-formed image")
    }

    pub fn traversability(&self) -> TraversabilityMask {
        TraversabilityMask::new(self.height, self.width, self.hits.iter().map(|h| h.kind.label()).collect()).expect("renderer emits a well-formed mask")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub depth: DepthImage,
    pub mask: TraversabilityMask,
}

/// Bearing of column `j` relative to the heading; column 0 is leftmost.
pub fn column_bearing(camera: &CameraModel, j: usize) -> f64 {
    camera.horizontal_fov / 2.0 - (j as f64 + 0.5) * camera.horizontal_fov / camera.width as f64
}

/// `tan` of the elevation of row `i`; row 0 is the top of the image.
pub fn row_elevation_tan(camera: &CameraModel, i: usize) -> f64 {
    let half = camera.height as f64 / 2.0;
    (half - i as f64 - 0.5) / half * (camera.vertical_fov / 2.0).tan()
}

/// World-frame unit direction (x, y, z) of pixel `(i, j)` for a camera with `heading`.
pub fn pixel_ray(camera: &CameraModel, heading: f64, i: usize, j: usize) -> [f64; 3] {
    let psi = heading + column_bearing(camera, j);
    let tau = row_elevation_tan(camera, i);
    let n = (1.0 + tau * tau).sqrt();
    [psi.cos() / n, psi.sin() / n, tau / n]
}

/// A volume the ray may enter, reduced to what a column needs.
enum Solid<'a> {
    /// Vertical prism over `[z_lo, z_hi]` with horizontal entry/exit `[r_in, r_out]`.
    Prism {
        r_in: f64,
        r_out: f64,
        z_lo: f64,
        z_hi: f64,
        kind: SurfaceKind,
    },
    Cone {
        center: Vec2,
        radius: f64,
        z_lo: f64,
        z_hi: f64,
        kind: SurfaceKind,
    },
    Slope {
        r_in: f64,
        r_out: f64,
        ob: &'a Obstacle,
        origin: Vec2,
        dir: Vec2,
        kind: SurfaceKind,
    },
}

struct ColumnScene<'a> {
    solids: Vec<Solid<'a>>,
    special: Vec<(usize, &'a Footprint)>,
}

fn column_scene<'a>(world: &'a WorldState, agent_index: usize, origin: Vec2, dir: Vec2, max_range: f64) -> ColumnScene<'a> {
    let mut solids = Vec::new();
    let mut special = Vec::new();
    let relevant = |iv: Option<(f64, f64)>| iv.filter(|&(a, b)| b >= 0.0 && a <= max_range);
    for (k, ob) in world.obstacles.iter().enumerate() {
        let [z_lo, z_hi] = ob.height_interval;
        match ob.category {
            ObstacleCategory::Solid | ObstacleCategory::TableTop => {
                if let Some((r_in, r_out)) = relevant(ob.footprint.ray_interval(origin, dir)) {
                    solids.push(Solid::Prism { r_in, r_out, z_lo, z_hi, kind: SurfaceKind::Obstacle(k) });
                }
            }
            ObstacleCategory::Cone => {
                if let Footprint::Circle { center, radius } = ob.footprint {
                    if relevant(ob.footprint.ray_interval(origin, dir)).is_some() {
                        solids.push(Solid::Cone { center, radius, z_lo, z_hi, kind: SurfaceKind::Obstacle(k) });
                    }
                }
            }
            ObstacleCategory::SpecialFloor => special.push((k, &ob.footprint)),
            ObstacleCategory::Slope => {
                if let Some((r_in, r_out)) = relevant(ob.footprint.ray_interval(origin, dir)) {
                    solids.push(Solid::Slope { r_in, r_out, ob, origin, dir, kind: SurfaceKind::Slope(k) });
                }
            }
        }
    }
    for (j, ag) in world.agents.iter().enumerate() {
        if j == agent_index || !world.is_active(j) {
            continue;
        }
        let fp = Footprint::Circle { center: ag.position, radius: ag.radius };
        if let Some((r_in, r_out)) = relevant(fp.ray_interval(origin, dir)) {
            solids.push(Solid::Prism { r_in, r_out, z_lo: 0.0, z_hi: world.agent_height, kind: SurfaceKind::Agent(j) });
        }
    }
    ColumnScene { solids, special }
}

/// Horizontal distance at which a ray from height `h` with slope `tau` first
/// meets the solid, if it does at `r >= 0`.
fn solid_hit(solid: &Solid<'_>, h: f64, tau: f64) -> Option<f64> {
    match *solid {
        Solid::Prism { r_in, r_out, z_lo, z_hi, .. } => {
            let (za, zb) = if tau == 0.0 {
                if h < z_lo || h > z_hi {
                    return None;
                }
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                let a = (z_lo - h) / tau;
                let b = (z_hi - h) / tau;
                (a.min(b), a.max(b))
            };
            let enter = r_in.max(za);
            let exit = r_out.min(zb);
            (enter <= exit && exit >= 0.0).then_some(enter.max(0.0))
        }
        Solid::Cone { .. } => None, // handled by `cone_hit`, which needs the ray origin
        Solid::Slope { r_in, r_out, ob, origin, dir, .. } => {
            let ra = r_in.max(0.0);
            if ra > r_out {
                return None;
            }
            let gap = |r: f64| h + r * tau - ob.slope_height(origin + dir.scale(r));
            let fa = gap(ra);
            if fa <= 0.0 {
                return Some(ra);
            }
            let fb = gap(r_out);
            if fb > 0.0 {
                return None;
            }
            // The gap is affine in r inside a convex footprint.
            Some(ra + fa / (fa - fb) * (r_out - ra))
        }
    }
}

fn cone_hit(center: Vec2, radius: f64, z_lo: f64, z_hi: f64, origin: Vec2, dir: Vec2, h: f64, tau: f64) -> Option<f64> {
    let k = radius / (z_hi - z_lo);
    let q = origin - center;
    let a0 = z_hi - h;
    // |q + r·dir|² = k²(a0 - r·tau)², with |dir| = 1
    let qa = 1.0 - k * k * tau * tau;
    let qb = q.dot(dir) + k * k * a0 * tau;
    let qc = q.dot(q) - k * k * a0 * a0;
    let mut best: Option<f64> = None;
    let mut consider = |r: f64| {
        if r >= 0.0 {
            let z = h + r * tau;
            if z >= z_lo && z <= z_hi {
                best = Some(best.map_or(r, |b: f64| b.min(r)));
            }
        }
    };
    if qa.abs() < 1e-12 {
        if qb != 0.0 {
            consider(-qc / (2.0 * qb));
        }
    } else {
        let disc = qb * qb - qa * qc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            consider((-qb - s) / qa);
            consider((-qb + s) / qa);
        }
    }
    if tau != 0.0 {
        let r = (z_lo - h) / tau;
        if r >= 0.0 && (q + dir.scale(r)).norm() <= radius {
            best = Some(best.map_or(r, |b: f64| b.min(r)));
        }
    }
    best
}

/// First-hit record for every pixel of `agent_index`'s camera.
pub fn render_hits(world: &WorldState, agent_index: usize, camera: &CameraModel) -> Result<HitImage, SimError> {
    camera.validate()?;
    let agent = world.agents.get(agent_index).ok_or(SimError::AgentIndex(agent_index))?;
    let (hh, ww) = (camera.height, camera.width);
    let h = agent.camera_height;
    let origin = agent.position;
    let taus: Vec<f64> = (0..hh).map(|i| row_elevation_tan(camera, i)).collect();
    let mut hits = vec![PixelHit { depth: camera.max_range, kind: SurfaceKind::Background }; hh * ww];
    for j in 0..ww {
        let dir = Vec2::from_angle(agent.heading + column_bearing(camera, j));
        let scene = column_scene(world, agent_index, origin, dir, camera.max_range);
        for (i, &tau) in taus.iter().enumerate() {
            let mut best_r = f64::INFINITY;
            let mut best_kind = SurfaceKind::Background;
            if tau < 0.0 {
                let r = -h / tau;
                let p = origin + dir.scale(r);
                best_r = r;
                best_kind = scene.special.iter().find(|(_, fp)| fp.contains(p)).map_or(SurfaceKind::Floor, |&(k, _)| SurfaceKind::SpecialFloor(k));
            }
            for solid in &scene.solids {
                let (r, kind) = match *solid {
                    Solid::Cone { center, radius, z_lo, z_hi, kind } => (cone_hit(center, radius, z_lo, z_hi, origin, dir, h, tau), kind),
                    Solid::Prism { kind, .. } | Solid::Slope { kind, .. } => (solid_hit(solid, h, tau), kind),
                };
                if let Some(r) = r {
                    if r < best_r {
                        best_r = r;
                        best_kind = kind;
                    }
                }
            }
            let depth = best_r * (1.0 + tau * tau).sqrt();
            if depth <= camera.max_range {
                hits[i * ww + j] = PixelHit { depth: depth.max(MIN_DEPTH), kind: best_kind };
            }
        }
    }
    Ok(HitImage { height: hh, width: ww, max_range: camera.max_range, hits })
}

pub fn render(world: &WorldState, agent_index: usize, camera: &CameraModel) -> Result<RenderOutput, SimError> {
    let hits = render_hits(world, agent_index, camera)?;
    Ok(RenderOutput { depth: hits.depth(), mask: hits.traversability() })
}

pub fn render_depth(world: &WorldState, agent_index: usize, camera: &CameraModel) -> Result<DepthImage, SimError> {
    Ok(render_hits(world, agent_index, camera)?.depth())
}

pub fn render_traversability(world: &WorldState, agent_index: usize, camera: &CameraModel) -> Result<TraversabilityMask, SimError> {
    Ok(render_hits(world, agent_index, camera)?.traversability())
}

/// Ideal planar range finder at height `scan_height` above the floor, one beam
/// per camera column. Floor-level patches are invisible to it; a slope is seen
/// where its surface rises above the scan plane.
pub fn cast_planar_laser(world: &WorldState, agent_index: usize, camera: &CameraModel, scan_height: f64) -> Result<Vec<f64>, SimError> {
    camera.validate()?;
    let agent = world.agents.get(agent_index).ok_or(SimError::AgentIndex(agent_index))?;
    let origin = agent.position;
    let mut out = Vec::with_capacity(camera.width);
    for j in 0..camera.width {
        let dir = Vec2::from_angle(agent.heading + column_bearing(camera, j));
        let mut best = camera.max_range;
        let mut take = |iv: Option<(f64, f64)>| {
            if let Some((a, b)) = iv {
                if b >= 0.0 {
                    best = best.min(a.max(0.0));
                }
            }
        };
        for ob in &world.obstacles {
            let [z_lo, z_hi] = ob.height_interval;
            match ob.category {
                ObstacleCategory::Solid | ObstacleCategory::TableTop => {
                    if scan_height >= z_lo && scan_height <= z_hi {
                        take(ob.footprint.ray_interval(origin, dir));
                    }
                }
                ObstacleCategory::Cone => {
                    if let Footprint::Circle { center, radius } = ob.footprint {
                        if scan_height >= z_lo && scan_height < z_hi {
                            let rz = radius * (z_hi - scan_height) / (z_hi - z_lo);
                            take(Footprint::Circle { center, radius: rz }.ray_interval(origin, dir));
                        }
                    }
                }
                ObstacleCategory::SpecialFloor => {}
                ObstacleCategory::Slope => {
                    if scan_height > z_hi || z_hi <= z_lo {
                        continue;
                    }
                    let sd = Vec2::from_angle(ob.slope_direction.unwrap_or(0.0));
                    let (lo, hi) = footprint_extent(&ob.footprint, sd);
                    let frac = ((scan_height - z_lo) / (z_hi - z_lo)).max(0.0);
                    let cut = lo + frac * (hi - lo);
                    // region of the footprint where the ramp is above the scan plane
                    let iv = ob.footprint.ray_interval(origin, dir).and_then(|(a, b)| {
                        let o = origin.dot(sd);
                        let d = dir.dot(sd);
                        if d.abs() < 1e-15 {
                            return (o >= cut).then_some((a, b));
                        }
                        let t = (cut - o) / d;
                        let (a2, b2) = if d > 0.0 { (a.max(t), b) } else { (a, b.min(t)) };
                        (a2 <= b2).then_some((a2, b2))
                    });
                    take(iv);
                }
            }
        }
        for (k, ag) in world.agents.iter().enumerate() {
            if k == agent_index || !world.is_active(k) || scan_height > world.agent_height {
                continue;
            }
            take(Footprint::Circle { center: ag.position, radius: ag.radius }.ray_interval(origin, dir));
        }
        out.push(best.clamp(MIN_DEPTH, camera.max_range));
    }
    Ok(out)
}
