//! The sensing variants compared in the ablations, all producing one range
//! per camera column over the same field of view.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{apply_semantic_mask, slice_min_pool, slice_row, MaskedDepth, PseudoLaser};
use crate::worldsim::{cast_planar_laser, render_hits, CameraModel, HitImage, SimError, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingMode {
    /// Planar laser near the floor.
    IdealLaserBottom,
    /// Planar laser at the top of the robot body.
    IdealLaserTop,
    /// Single row of raw depth.
    #[serde(rename = "depth_1d_slice")]
    Depth1dSlice,
    /// Min pooling of raw depth (floor not removed).
    DepthMinpool,
    /// Single row of semantically masked depth.
    #[serde(rename = "depth_1d_semantic")]
    Depth1dSemantic,
    /// Min pooling of semantically masked depth.
    #[default]
    DepthMinpoolSemantic,
    /// As `DepthMinpoolSemantic`, for policies trained with augmentation.
    DepthMinpoolSemanticNoise,
}

impl SensingMode {
    pub const ALL: [SensingMode; 7] = [
        SensingMode::IdealLaserBottom,
        SensingMode::IdealLaserTop,
        SensingMode::Depth1dSlice,
        SensingMode::DepthMinpool,
        SensingMode::Depth1dSemantic,
        SensingMode::DepthMinpoolSemantic,
        SensingMode::DepthMinpoolSemanticNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensingMode::IdealLaserBottom => "ideal_laser_bottom",
            SensingMode::IdealLaserTop => "ideal_laser_top",
            SensingMode::Depth1dSlice => "depth_1d_slice",
            SensingMode::DepthMinpool => "depth_minpool",
            SensingMode::Depth1dSemantic => "depth_1d_semantic",
            SensingMode::DepthMinpoolSemantic => "depth_minpool_semantic",
            SensingMode::DepthMinpoolSemanticNoise => "depth_minpool_semantic_noise",
        }
    }

    /// Whether policies for this variant are trained with augmentation.
    pub fn trains_with_noise(self) -> bool {
        self == SensingMode::DepthMinpoolSemanticNoise
    }
}

impl fmt::Display for SensingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensingMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown sensing mode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensingConfig {
    pub bottom_laser_height: f64,
    pub top_laser_height: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self { bottom_laser_height: 0.05, top_laser_height: 0.45 }
    }
}

fn masked_from_hits(hits: &HitImage, semantic: bool) -> MaskedDepth {
    let depth = hits.depth();
    if semantic {
        apply_semantic_mask(&depth, &hits.traversability()).expect("same renderer, same shape")
    } else {
        MaskedDepth::unmasked(&depth)
    }
}

/// One pseudo-laser reading for `agent_index` under the given variant.
pub fn sense(world: &WorldState, agent_index: usize, camera: &CameraModel, mode: SensingMode, cfg: &SensingConfig) -> Result<PseudoLaser, SimError> {
    let row = camera.height / 2;
    let laser = match mode {
        SensingMode::IdealLaserBottom | SensingMode::IdealLaserTop => {
            let h = if mode == SensingMode::IdealLaserBottom { cfg.bottom_laser_height } else { cfg.top_laser_height };
            PseudoLaser { ranges: cast_planar_laser(world, agent_index, camera, h)?, max_range: camera.max_range }
        }
        _ => {
            let hits = render_hits(world, agent_index, camera)?;
            match mode {
                SensingMode::Depth1dSlice => slice_row(&masked_from_hits(&hits, false), row),
                SensingMode::DepthMinpool => slice_min_pool(&masked_from_hits(&hits, false)),
                SensingMode::Depth1dSemantic => slice_row(&masked_from_hits(&hits, true), row),
                _ => slice_min_pool(&masked_from_hits(&hits, true)),
            }
        }
    };
    Ok(laser)
}
