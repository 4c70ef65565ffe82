//! Planar shapes and the 2-D queries the simulator needs: point distance,
//! containment and ray/footprint entry-exit intervals.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn from_angle(theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Obstacle footprint on the floor plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Footprint {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// Convex polygon, vertices in counter-clockwise order.
    Polygon {
        vertices: Vec<Vec2>,
    },
}

impl Footprint {
    /// Axis-aligned box polygon.
    pub fn rect(center: Vec2, half_x: f64, half_y: f64) -> Self {
        Footprint::Polygon {
            vertices: vec![
                Vec2::new(center.x - half_x, center.y - half_y),
                Vec2::new(center.x + half_x, center.y - half_y),
                Vec2::new(center.x + half_x, center.y + half_y),
                Vec2::new(center.x - half_x, center.y + half_y),
            ],
        }
    }

    /// Oriented box of full size `length × width`, long axis along `heading`.
    pub fn oriented_rect(center: Vec2, length: f64, width: f64, heading: f64) -> Self {
        let u = Vec2::from_angle(heading).scale(length / 2.0);
        let v = Vec2::from_angle(heading + std::f64::consts::FRAC_PI_2).scale(width / 2.0);
        Footprint::Polygon { vertices: vec![center - u - v, center + u - v, center + u + v, center - u + v] }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Footprint::Circle { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(format!("circle radius must be positive, got {radius}"));
                }
                if !(center.x.is_finite() && center.y.is_finite()) {
                    return Err("circle center must be finite".into());
                }
            }
            Footprint::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(format!("polygon needs >= 3 vertices, got {}", vertices.len()));
                }
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    if (b - a).cross(c - b) <= 0.0 {
                        return Err("polygon must be strictly convex and counter-clockwise".into());
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Footprint::Circle { center, radius } => p.dist(*center) <= *radius,
            Footprint::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    (b - a).cross(p - a) >= 0.0
                })
            }
        }
    }

    /// Euclidean distance from `p` to the footprint; 0 inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        match self {
            Footprint::Circle { center, radius } => (p.dist(*center) - radius).max(0.0),
            Footprint::Polygon { vertices } => {
                if self.contains(p) {
                    return 0.0;
                }
                let n = vertices.len();
                (0..n).map(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n])).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Parameter interval `[t_in, t_out]` over which the ray `origin + t·dir`
    /// lies inside the footprint. `dir` need not be normalised.
    pub fn ray_interval(&self, origin: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        match self {
            Footprint::Circle { center, radius } => {
                let a = dir.dot(dir);
                if a == 0.0 {
                    return self.contains(origin).then_some((f64::NEG_INFINITY, f64::INFINITY));
                }
                let oc = origin - *center;
                let b = oc.dot(dir);
                let c = oc.dot(oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                Some(((-b - s) / a, (-b + s) / a))
            }
            Footprint::Polygon { vertices } => {
                // Cyrus-Beck clipping against each edge half-plane.
                let n = vertices.len();
                let mut t_in = f64::NEG_INFINITY;
                let mut t_out = f64::INFINITY;
                for i in 0..n {
                    let a = vertices[i];
                    let edge = vertices[(i + 1) % n] - a;
                    // inside: edge × (p - a) >= 0
                    let num = edge.cross(origin - a);
                    let den = edge.cross(dir);
                    if den == 0.0 {
                        if num < 0.0 {
                            return None;
                        }
                        continue;
                    }
                    let t = -num / den;
                    if den > 0.0 {
                        t_in = t_in.max(t);
                    } else {
                        t_out = t_out.min(t);
                    }
                    if t_in > t_out {
                        return None;
                    }
                }
                Some((t_in, t_out))
            }
        }
    }

    pub fn centroid(&self) -> Vec2 {
        match self {
            Footprint::Circle { center, .. } => *center,
            Footprint::Polygon { vertices } => {
                let n = vertices.len() as f64;
                let s = vertices.iter().fold(Vec2::default(), |acc, v| acc + *v);
                s.scale(1.0 / n)
            }
        }
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab.scale(t))
}

/// Wrap an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
