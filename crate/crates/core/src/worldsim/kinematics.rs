use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Vec2};
use super::{AgentState, SimError};

/// Angular velocity at `w_normalized = 1`, rad/s (90°/s).
pub const MAX_ANGULAR_VEL: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Action {
    /// Linear velocity in m/s, `[0, 1]`.
    pub v: f64,
    /// Angular velocity as a fraction of 90°/s, `[-1, 1]`.
    pub w_normalized: f64,
}

impl Action {
    pub const fn new(v: f64, w_normalized: f64) -> Self {
        Self { v, w_normalized }
    }

    pub fn clamped(self) -> Self {
        Self { v: self.v.clamp(0.0, 1.0), w_normalized: self.w_normalized.clamp(-1.0, 1.0) }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.v.is_finite() || !self.w_normalized.is_finite() {
            return Err(SimError::InvalidAction(format!("non-finite action ({}, {})", self.v, self.w_normalized)));
        }
        if !(0.0..=1.0).contains(&self.v) || !(-1.0..=1.0).contains(&self.w_normalized) {
            return Err(SimError::InvalidAction(format!("action ({}, {}) outside [0,1]x[-1,1]", self.v, self.w_normalized)));
        }
        Ok(())
    }
}

/// `sin(x)/x`, accurate near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Advance a unicycle over `dt` with constant `(v, w)` using the closed-form arc.
pub fn step_kinematics(state: &AgentState, action: Action, dt: f64) -> Result<AgentState, SimError> {
    action.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidAction(format!("dt must be positive, got {dt}")));
    }
    let w = action.w_normalized * MAX_ANGULAR_VEL;
    let dtheta = w * dt;
    // Chord of the arc, directed along the mid-arc heading.
    let chord = action.v * dt * sinc(dtheta / 2.0);
    let mid = state.heading + dtheta / 2.0;
    let mut next = state.clone();
    next.position = state.position + Vec2::from_angle(mid).scale(chord);
    next.heading = wrap_angle(state.heading + dtheta);
    next.linear_vel = action.v;
    next.angular_vel = w;
    Ok(next)
}
