use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::EnvError;

/// Frames stacked into one observation.
pub const STACK: usize = 3;

/// One timestep of sensing: pseudo-laser, goal as (distance, bearing) in the
/// agent frame, and the last executed (v, w_normalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub laser: Vec<f64>,
    pub goal: [f64; 2],
    pub velocity: [f64; 2],
}

/// Three stacked frames, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub lasers: [Vec<f64>; STACK],
    pub goals: [[f64; 2]; STACK],
    pub velocities: [[f64; 2]; STACK],
}

impl Observation {
    pub fn d_laser(&self) -> usize {
        self.lasers[0].len()
    }

    pub fn current_goal(&self) -> [f64; 2] {
        self.goals[STACK - 1]
    }

    pub fn current_velocity(&self) -> [f64; 2] {
        self.velocities[STACK - 1]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameHistory {
    frames: VecDeque<Frame>,
}

impl FrameHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, frame: Frame) {
        if self.frames.len() == STACK {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }
}

/// Most recent three frames, oldest first; short histories repeat the oldest frame.
pub fn assemble_observation(history: &FrameHistory) -> Result<Observation, EnvError> {
    let n = history.frames.len();
    if n == 0 {
        return Err(EnvError::EmptyHistory);
    }
    let pick = |k: usize| -> &Frame {
        // slot k of STACK maps onto the available frames, padding at the front
        let missing = STACK - n.min(STACK);
        &history.frames[k.saturating_sub(missing)]
    };
    let f = [pick(0), pick(1), pick(2)];
    Ok(Observation {
        lasers: [f[0].laser.clone(), f[1].laser.clone(), f[2].laser.clone()],
        goals: [f[0].goal, f[1].goal, f[2].goal],
        velocities: [f[0].velocity, f[1].velocity, f[2].velocity],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(tag: f64) -> Frame {
        Frame { laser: vec![tag; 4], goal: [tag, -tag], velocity: [tag / 10.0, 0.0] }
    }

    #[test]
    fn single_frame_replicated() {
        let mut h = FrameHistory::new();
        h.push(frame(1.0));
        let o = assemble_observation(&h).unwrap();
        assert_eq!(o.lasers, [vec![1.0; 4], vec![1.0; 4], vec![1.0; 4]]);
        assert_eq!(o.goals, [[1.0, -1.0]; 3]);
    }

    #[test]
    fn two_frames_pad_oldest() {
        let mut h = FrameHistory::new();
        h.push(frame(1.0));
        h.push(frame(2.0));
        let o = assemble_observation(&h).unwrap();
        assert_eq!(o.goals, [[1.0, -1.0], [1.0, -1.0], [2.0, -2.0]]);
    }

    #[test]
    fn window_keeps_latest_three() {
        let mut h = FrameHistory::new();
        for t in [1.0, 2.0, 3.0, 4.0] {
            h.push(frame(t));
        }
        assert_eq!(h.len(), 3);
        let o = assemble_observation(&h).unwrap();
        assert_eq!(o.goals, [[2.0, -2.0], [3.0, -3.0], [4.0, -4.0]]);
    }

    #[test]
    fn empty_history_errors() {
        assert!(matches!(assemble_observation(&FrameHistory::new()), Err(EnvError::EmptyHistory)));
    }
}
