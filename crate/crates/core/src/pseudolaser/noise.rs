//! Training-time augmentation that mimics how depth-derived scans degrade:
//! occlusion edges are smeared by linear interpolation and every other
//! reading gets Gaussian noise proportional to its range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PseudoLaser;

/// Floor applied after noise so ranges stay positive.
pub const MIN_RANGE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Adjacent readings differing by more than this mark a junction (m).
    pub junction_threshold: f64,
    /// Readings replaced on each side of a junction.
    pub neighborhood_halfwidth: usize,
    /// Noise standard deviation as a fraction of the reading.
    pub gaussian_scale: f64,
    pub enabled: bool,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { junction_threshold: 0.5, neighborhood_halfwidth: 4, gaussian_scale: 0.07, enabled: true }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.junction_threshold > 0.0) {
            return Err("junction_threshold must be > 0".into());
        }
        if self.neighborhood_halfwidth < 1 {
            return Err("neighborhood_halfwidth must be >= 1".into());
        }
        if !(self.gaussian_scale >= 0.0) {
            return Err("gaussian_scale must be >= 0".into());
        }
        Ok(())
    }
}

/// Indices `j` with `|L(j+1) - L(j)| > alpha`, ascending; each marks the pair `(j, j+1)`.
pub fn detect_junctions(laser: &PseudoLaser, alpha: f64) -> Vec<(usize, usize)> {
    laser.ranges.windows(2).enumerate().filter(|(_, w)| (w[1] - w[0]).abs() > alpha).map(|(j, _)| (j, j + 1)).collect()
}

/// Closed interpolation spans `[a, b]`: `a` and `b` keep their values and the
/// entries strictly between them are replaced. Overlapping spans are merged.
pub fn junction_windows(len: usize, junctions: &[(usize, usize)], halfwidth: usize) -> Vec<(usize, usize)> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    if len == 0 {
        return spans;
    }
    for &(j, _) in junctions {
        let a = j.saturating_sub(halfwidth);
        let b = (j + halfwidth + 1).min(len - 1);
        match spans.last_mut() {
            // a new span whose left endpoint falls strictly inside the previous one
            Some(last) if a < last.1 => last.1 = last.1.max(b),
            _ => spans.push((a, b)),
        }
    }
    spans
}

pub fn augment_noise<R: Rng + ?Sized>(laser: &PseudoLaser, params: &NoiseParams, rng: &mut R) -> PseudoLaser {
    if !params.enabled {
        return laser.clone();
    }
    let n = laser.ranges.len();
    let src = &laser.ranges;
    let mut out = src.clone();
    let mut in_window = vec![false; n];
    let junctions = detect_junctions(laser, params.junction_threshold);
    for (a, b) in junction_windows(n, &junctions, params.neighborhood_halfwidth) {
        let (va, vb) = (src[a], src[b]);
        let span = (b - a) as f64;
        for (k, slot) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            if k > a && k < b {
                let t = (k - a) as f64 / span;
                *slot = va + t * (vb - va);
            }
            in_window[k] = true;
        }
    }
    if params.gaussian_scale > 0.0 {
        for (v, &w) in out.iter_mut().zip(&in_window) {
            if !w {
                let z: f64 = rng.sample(StandardNormal);
                *v += params.gaussian_scale * *v * z;
            }
        }
    }
    for v in &mut out {
        *v = v.clamp(MIN_RANGE, laser.max_range);
    }
    PseudoLaser { ranges: out, max_range: laser.max_range }
}

pub fn augment_noise_seeded(laser: &PseudoLaser, params: &NoiseParams, seed: u64) -> PseudoLaser {
    augment_noise(laser, params, &mut ChaCha8Rng::seed_from_u64(seed))
}
