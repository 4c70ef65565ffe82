//! Recurrent actor-critic over stacked pseudo-laser observations.
//!
//! Pipeline: optional FEG mask over the three laser frames, two strided
//! convolutions, a dense layer, concatenation with the current goal and
//! velocity, a merge layer, an optional LSTM, and separate actor and critic
//! heads. Rows of a batch are time-major: row `t·batch + b`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::ActionDist;
use super::layers::{logistic_backward, logistic_inplace, relu_backward, relu_inplace, Conv1d, Deconv1d, Dense, LayoutBuilder, Lstm, LstmCache, Slot};
use super::NnError;
use crate::env::{Observation, STACK};

/// Channels per bearing per timestep in the FEG input grid.
pub const FEG_CHANNELS: usize = 5;
/// Scalars appended to the laser features: goal (distance, bearing), velocity (v, w).
pub const STATE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Cnn,
    Lstm,
    LstmFeg,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Cnn, Architecture::Lstm, Architecture::LstmFeg];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Cnn => "cnn",
            Architecture::Lstm => "lstm",
            Architecture::LstmFeg => "lstm_feg",
        }
    }

    pub fn recurrent(self) -> bool {
        self != Architecture::Cnn
    }

    pub fn has_feg(self) -> bool {
        self == Architecture::LstmFeg
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Architecture::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown architecture '{s}' (expected cnn, lstm or lstm_feg)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub architecture: Architecture,
    pub d_laser: usize,
    /// Laser ranges are divided by this before entering the network.
    pub max_range: f64,
    /// Goal distances are divided by this before entering the network.
    pub goal_scale: f64,
    pub conv_channels: usize,
    pub feg_channels: usize,
    pub dense: usize,
    pub merge: usize,
    pub hidden: usize,
    pub log_std_init: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::LstmFeg,
            d_laser: 96,
            max_range: 6.0,
            goal_scale: 5.0,
            conv_channels: 32,
            feg_channels: 32,
            dense: 128,
            merge: 256,
            hidden: 256,
            log_std_init: -0.5,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.d_laser < 8 || self.d_laser % 4 != 0 {
            return Err(NnError::Config(format!("d_laser must be a multiple of 4 and at least 8, got {}", self.d_laser)));
        }
        if !(self.max_range > 0.0 && self.goal_scale > 0.0) {
            return Err(NnError::Config("max_range and goal_scale must be positive".into()));
        }
        if [self.conv_channels, self.feg_channels, self.dense, self.merge, self.hidden].contains(&0) {
            return Err(NnError::Config("layer widths must be positive".into()));
        }
        if !self.log_std_init.is_finite() {
            return Err(NnError::Config("log_std_init must be finite".into()));
        }
        Ok(())
    }

    /// Width of the features that reach the heads.
    pub fn feature_dim(&self) -> usize {
        if self.architecture.recurrent() {
            self.hidden
        } else {
            self.merge
        }
    }

    /// Per-agent recurrent state size (0 for the feed-forward variant).
    pub fn state_size(&self) -> usize {
        if self.architecture.recurrent() {
            self.hidden
        } else {
            0
        }
    }
}

/// LSTM `(h, c)` for a group of agents, `(agents, hidden)` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(len: usize) -> Self {
        Self { h: vec![0.0; len], c: vec![0.0; len] }
    }
}

/// The d_laser×5×3 grid, flattened as `j·15 + channel·3 + k` where channel
/// 0..5 is (laser, goal distance, goal bearing, v, w) and `k` indexes the
/// stacked frames oldest first.
pub fn build_feg_input(obs: &Observation) -> Vec<f64> {
    let d = obs.d_laser();
    let mut out = vec![0.0; d * FEG_CHANNELS * STACK];
    for j in 0..d {
        let cell = &mut out[j * FEG_CHANNELS * STACK..(j + 1) * FEG_CHANNELS * STACK];
        for k in 0..STACK {
            let vals = [obs.lasers[k][j], obs.goals[k][0], obs.goals[k][1], obs.velocities[k][0], obs.velocities[k][1]];
            for (ch, v) in vals.into_iter().enumerate() {
                cell[ch * STACK + k] = v;
            }
        }
    }
    out
}

/// Observation rescaled to network units.
pub fn normalize_observation(obs: &Observation, cfg: &PolicyConfig) -> Observation {
    let mut o = obs.clone();
    for l in &mut o.lasers {
        l.iter_mut().for_each(|v| *v /= cfg.max_range);
    }
    for g in &mut o.goals {
        g[0] /= cfg.goal_scale;
        g[1] /= PI;
    }
    o
}

/// Network-ready batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyInput {
    pub rows: usize,
    /// `(rows, d_laser, 15)`.
    pub feg: Vec<f64>,
    /// `(rows, d_laser, 3)`, `j·3 + k`.
    pub lasers: Vec<f64>,
    /// `(rows, 4)`: current goal distance, bearing, v, w.
    pub state: Vec<f64>,
}

impl PolicyInput {
    pub fn with_capacity(rows: usize, d: usize) -> Self {
        Self {
            rows: 0,
            feg: Vec::with_capacity(rows * d * FEG_CHANNELS * STACK),
            lasers: Vec::with_capacity(rows * d * STACK),
            state: Vec::with_capacity(rows * STATE_DIM),
        }
    }

    pub fn push(&mut self, obs: &Observation, cfg: &PolicyConfig) {
        let o = normalize_observation(obs, cfg);
        let d = o.d_laser();
        self.feg.extend(build_feg_input(&o));
        for j in 0..d {
            for k in 0..STACK {
                self.lasers.push(o.lasers[k][j]);
            }
        }
        let g = o.current_goal();
        let v = o.current_velocity();
        self.state.extend_from_slice(&[g[0], g[1], v[0], v[1]]);
        self.rows += 1;
    }

    /// A zero row, used to pad short sequences.
    pub fn push_zero(&mut self, d: usize) {
        self.feg.extend(std::iter::repeat_n(0.0, d * FEG_CHANNELS * STACK));
        self.lasers.extend(std::iter::repeat_n(0.0, d * STACK));
        self.state.extend(std::iter::repeat_n(0.0, STATE_DIM));
        self.rows += 1;
    }

    pub fn from_observations<'a>(obs: impl IntoIterator<Item = &'a Observation>, cfg: &PolicyConfig) -> Self {
        let mut input = Self::default();
        for o in obs {
            input.push(o, cfg);
        }
        input
    }
}

#[derive(Debug, Clone)]
struct Feg {
    c1: Conv1d,
    c2: Conv1d,
    d1: Deconv1d,
    d2: Deconv1d,
}

#[derive(Debug, Clone)]
struct FegCache {
    col1: Vec<f64>,
    a1: Vec<f64>,
    col2: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    mask: Vec<f64>,
}

/// Everything the backward pass needs, plus the outputs.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub steps: usize,
    pub batch: usize,
    /// `(rows, 2)` pre-squash action means.
    pub means: Vec<f64>,
    pub values: Vec<f64>,
    /// Final recurrent state per sequence (empty for the feed-forward variant).
    pub hidden: HiddenState,
    feg: Option<FegCache>,
    lasers: Vec<f64>,
    trunk_in: Vec<f64>,
    col1: Vec<f64>,
    a1: Vec<f64>,
    col2: Vec<f64>,
    a2: Vec<f64>,
    fc: Vec<f64>,
    merge_in: Vec<f64>,
    merged: Vec<f64>,
    lstm: Option<LstmCache>,
    features: Vec<f64>,
}

impl ForwardCache {
    pub fn rows(&self) -> usize {
        self.steps * self.batch
    }

    pub fn mean(&self, row: usize) -> [f64; 2] {
        [self.means[2 * row], self.means[2 * row + 1]]
    }

    /// FEG mask `(rows, d_laser, 3)`, if the architecture has one.
    pub fn mask(&self) -> Option<&[f64]> {
        self.feg.as_ref().map(|f| f.mask.as_slice())
    }

    /// Laser input to the convolutional trunk (the weighted laser under FEG).
    pub fn trunk_input(&self) -> &[f64] {
        &self.trunk_in
    }

    /// Sign pattern of every ReLU unit; finite-difference checks use it to
    /// detect kinks between two nearby evaluations.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        let mut add = |v: &[f64]| out.extend(v.iter().map(|x| *x > 0.0));
        if let Some(f) = &self.feg {
            add(&f.a1);
            add(&f.a2);
            add(&f.a3);
        }
        add(&self.a1);
        add(&self.a2);
        add(&self.fc);
        add(&self.merged);
        out
    }
}

#[derive(Debug, Clone)]
pub struct Policy {
    cfg: PolicyConfig,
    feg: Option<Feg>,
    conv1: Conv1d,
    conv2: Conv1d,
    fc: Dense,
    merge: Dense,
    lstm: Option<Lstm>,
    actor: Dense,
    critic: Dense,
    log_std: Slot,
    layout: LayoutBuilder,
}

impl Policy {
    pub fn new(cfg: PolicyConfig) -> Result<Self, NnError> {
        cfg.validate()?;
        let d = cfg.d_laser;
        let mut layout = LayoutBuilder::default();
        let feg = cfg.architecture.has_feg().then(|| {
            let fc = cfg.feg_channels;
            let c1 = Conv1d::new(&mut layout, "feg.conv1", d, FEG_CHANNELS * STACK, fc, 5, 2, 2);
            let c2 = Conv1d::new(&mut layout, "feg.conv2", c1.out_len, fc, fc, 3, 2, 1);
            let d1 = Deconv1d::new(&mut layout, "feg.deconv1", c2.out_len, fc, fc, 3, 2, 1, 1);
            let d2 = Deconv1d::new(&mut layout, "feg.deconv2", d1.out_len, fc, STACK, 5, 2, 2, 1);
            debug_assert_eq!(d2.out_len, d);
            Feg { c1, c2, d1, d2 }
        });
        let ch = cfg.conv_channels;
        let conv1 = Conv1d::new(&mut layout, "trunk.conv1", d, STACK, ch, 5, 2, 2);
        let conv2 = Conv1d::new(&mut layout, "trunk.conv2", conv1.out_len, ch, ch, 5, 2, 2);
        let fc = Dense::new(&mut layout, "trunk.fc", conv2.out_len * ch, cfg.dense);
        let merge = Dense::new(&mut layout, "trunk.merge", cfg.dense + STATE_DIM, cfg.merge);
        let lstm = cfg.architecture.recurrent().then(|| Lstm::new(&mut layout, "lstm", cfg.merge, cfg.hidden));
        let actor = Dense::new(&mut layout, "actor.mean", cfg.feature_dim(), 2);
        let critic = Dense::new(&mut layout, "critic.value", cfg.feature_dim(), 1);
        let log_std = layout.alloc("actor.log_std", 2);
        Ok(Self { cfg, feg, conv1, conv2, fc, merge, lstm, actor, critic, log_std, layout })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    pub fn num_params(&self) -> usize {
        self.layout.len
    }

    /// Named parameter tensors in storage order.
    pub fn parameter_slots(&self) -> &[(String, Slot)] {
        &self.layout.names
    }

    pub fn actor_slots(&self) -> [Slot; 3] {
        [self.actor.w, self.actor.b, self.log_std]
    }

    pub fn critic_slots(&self) -> [Slot; 2] {
        [self.critic.w, self.critic.b]
    }

    pub fn log_std_slot(&self) -> Slot {
        self.log_std
    }

    pub fn log_std(&self, p: &[f64]) -> [f64; 2] {
        let s = self.log_std.of(p);
        [s[0], s[1]]
    }

    pub fn dist(&self, p: &[f64], cache: &ForwardCache, row: usize) -> ActionDist {
        ActionDist { mean: cache.mean(row), log_std: self.log_std(p) }
    }

    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = vec![0.0; self.num_params()];
        let relu_gain = 2f64.sqrt();
        if let Some(f) = &self.feg {
            f.c1.init(&mut p, relu_gain, &mut rng);
            f.c2.init(&mut p, relu_gain, &mut rng);
            f.d1.init(&mut p, relu_gain, &mut rng);
            f.d2.init(&mut p, 0.5, &mut rng);
        }
        self.conv1.init(&mut p, relu_gain, &mut rng);
        self.conv2.init(&mut p, relu_gain, &mut rng);
        self.fc.init(&mut p, relu_gain, &mut rng);
        self.merge.init(&mut p, relu_gain, &mut rng);
        if let Some(l) = &self.lstm {
            l.init(&mut p, &mut rng);
        }
        self.actor.init(&mut p, 0.01, &mut rng);
        self.critic.init(&mut p, 1.0, &mut rng);
        self.log_std.of_mut(&mut p).fill(self.cfg.log_std_init);
        p
    }

    fn check_input(&self, input: &PolicyInput) -> Result<(), NnError> {
        let d = self.cfg.d_laser;
        let r = input.rows;
        if input.feg.len() != r * d * FEG_CHANNELS * STACK || input.lasers.len() != r * d * STACK || input.state.len() != r * STATE_DIM {
            return Err(NnError::Shape(format!("input does not match {r} rows of d_laser={d}")));
        }
        Ok(())
    }

    /// FEG mask and weighted laser for each row, both `(rows, d_laser, 3)`.
    pub fn feg_forward(&self, p: &[f64], input: &PolicyInput) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        self.check_input(input)?;
        let feg = self.feg.as_ref().ok_or_else(|| NnError::Config(format!("architecture {} has no FEG module", self.cfg.architecture)))?;
        let (cache, weighted) = self.feg_pass(feg, p, input);
        Ok((cache.mask, weighted))
    }

    fn feg_pass(&self, f: &Feg, p: &[f64], input: &PolicyInput) -> (FegCache, Vec<f64>) {
        let rows = input.rows;
        let (mut a1, col1) = f.c1.forward(p, &input.feg, rows);
        relu_inplace(&mut a1);
        let (mut a2, col2) = f.c2.forward(p, &a1, rows);
        relu_inplace(&mut a2);
        let mut a3 = f.d1.forward(p, &a2, rows);
        relu_inplace(&mut a3);
        let mut mask = f.d2.forward(p, &a3, rows);
        logistic_inplace(&mut mask);
        let weighted = mask.iter().zip(&input.lasers).map(|(m, l)| m * l).collect();
        (FegCache { col1, a1, col2, a2, a3, mask }, weighted)
    }

    /// Forward over `steps × batch` time-major rows, starting each sequence
    /// from `h0`. `h0` is ignored by the feed-forward variant.
    pub fn forward(&self, p: &[f64], input: &PolicyInput, steps: usize, batch: usize, h0: &HiddenState) -> Result<ForwardCache, NnError> {
        if p.len() != self.num_params() {
            return Err(NnError::Shape(format!("expected {} parameters, got {}", self.num_params(), p.len())));
        }
        self.check_input(input)?;
        let rows = steps * batch;
        if input.rows != rows {
            return Err(NnError::Shape(format!("input has {} rows, expected {steps}×{batch}", input.rows)));
        }
        let (feg, trunk_in) = match &self.feg {
            Some(f) => {
                let (c, w) = self.feg_pass(f, p, input);
                (Some(c), w)
            }
            None => (None, input.lasers.clone()),
        };
        let (mut a1, col1) = self.conv1.forward(p, &trunk_in, rows);
        relu_inplace(&mut a1);
        let (mut a2, col2) = self.conv2.forward(p, &a1, rows);
        relu_inplace(&mut a2);
        let mut fc = self.fc.forward(p, &a2, rows);
        relu_inplace(&mut fc);
        let width = self.cfg.dense + STATE_DIM;
        let mut merge_in = Vec::with_capacity(rows * width);
        for r in 0..rows {
            merge_in.extend_from_slice(&fc[r * self.cfg.dense..(r + 1) * self.cfg.dense]);
            merge_in.extend_from_slice(&input.state[r * STATE_DIM..(r + 1) * STATE_DIM]);
        }
        let mut merged = self.merge.forward(p, &merge_in, rows);
        relu_inplace(&mut merged);
        let (lstm, features, hidden) = match &self.lstm {
            Some(l) => {
                let n = batch * self.cfg.hidden;
                if h0.h.len() != n || h0.c.len() != n {
                    return Err(NnError::Shape(format!("hidden state must hold {batch}×{}", self.cfg.hidden)));
                }
                let cache = l.forward(p, &merged, steps, batch, &h0.h, &h0.c);
                let features = cache.outputs().to_vec();
                let hidden = HiddenState { h: cache.last_hidden().to_vec(), c: cache.last_cell().to_vec() };
                (Some(cache), features, hidden)
            }
            None => (None, merged.clone(), HiddenState::zeros(0)),
        };
        let means = self.actor.forward(p, &features, rows);
        let values = self.critic.forward(p, &features, rows);
        if means.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(NnError::non_finite("policy forward", self, p));
        }
        Ok(ForwardCache {
            steps,
            batch,
            means,
            values,
            hidden,
            feg,
            lasers: input.lasers.clone(),
            trunk_in,
            col1,
            a1,
            col2,
            a2,
            fc,
            merge_in,
            merged,
            lstm,
            features,
        })
    }

    /// Gradient of `Σ dmean·mean + Σ dvalue·value` with respect to all
    /// parameters. The log-std slot is left at zero for the caller to fill.
    pub fn backward(&self, p: &[f64], cache: &ForwardCache, dmean: &[f64], dvalue: &[f64]) -> Vec<f64> {
        let rows = cache.rows();
        let mut g = vec![0.0; self.num_params()];
        let mut dfeat = self.actor.backward(p, &cache.features, dmean, rows, &mut g, true).expect("dx requested");
        let dv = self.critic.backward(p, &cache.features, dvalue, rows, &mut g, true).expect("dx requested");
        dfeat.iter_mut().zip(&dv).for_each(|(a, b)| *a += b);
        let mut dmerged = match (&self.lstm, &cache.lstm) {
            (Some(l), Some(lc)) => l.backward(p, &cache.merged, lc, &dfeat, &mut g, true).expect("dx requested"),
            _ => dfeat,
        };
        relu_backward(&cache.merged, &mut dmerged);
        let dmerge_in = self.merge.backward(p, &cache.merge_in, &dmerged, rows, &mut g, true).expect("dx requested");
        let width = self.cfg.dense + STATE_DIM;
        let mut dfc: Vec<f64> = (0..rows).flat_map(|r| dmerge_in[r * width..r * width + self.cfg.dense].iter().copied()).collect();
        relu_backward(&cache.fc, &mut dfc);
        let mut da2 = self.fc.backward(p, &cache.a2, &dfc, rows, &mut g, true).expect("dx requested");
        relu_backward(&cache.a2, &mut da2);
        let mut da1 = self.conv2.backward(p, &cache.col2, &da2, rows, &mut g, true).expect("dx requested");
        relu_backward(&cache.a1, &mut da1);
        let dtrunk = self.conv1.backward(p, &cache.col1, &da1, rows, &mut g, self.feg.is_some());
        if let (Some(f), Some(fc), Some(dw)) = (&self.feg, &cache.feg, dtrunk) {
            let mut dz: Vec<f64> = dw.iter().zip(&cache.lasers).map(|(d, l)| d * l).collect();
            logistic_backward(&fc.mask, &mut dz);
            let mut da3 = f.d2.backward(p, &fc.a3, &dz, rows, &mut g, true).expect("dx requested");
            relu_backward(&fc.a3, &mut da3);
            let mut da2 = f.d1.backward(p, &fc.a2, &da3, rows, &mut g, true).expect("dx requested");
            relu_backward(&fc.a2, &mut da2);
            let mut da1 = f.c2.backward(p, &fc.col2, &da2, rows, &mut g, true).expect("dx requested");
            relu_backward(&fc.a1, &mut da1);
            f.c1.backward(p, &fc.col1, &da1, rows, &mut g, false);
        }
        g
    }

    /// Gradient of `Σ weighted laser` with respect to the FEG parameters
    /// (all other entries zero).
    pub fn feg_sum_gradient(&self, p: &[f64], input: &PolicyInput) -> Result<Vec<f64>, NnError> {
        self.check_input(input)?;
        let f = self.feg.as_ref().ok_or_else(|| NnError::Config("no FEG module".into()))?;
        let rows = input.rows;
        let (c, _) = self.feg_pass(f, p, input);
        let mut g = vec![0.0; self.num_params()];
        let mut dz = input.lasers.clone();
        logistic_backward(&c.mask, &mut dz);
        let mut da3 = f.d2.backward(p, &c.a3, &dz, rows, &mut g, true).expect("dx requested");
        relu_backward(&c.a3, &mut da3);
        let mut da2 = f.d1.backward(p, &c.a2, &da3, rows, &mut g, true).expect("dx requested");
        relu_backward(&c.a2, &mut da2);
        let mut da1 = f.c2.backward(p, &c.col2, &da2, rows, &mut g, true).expect("dx requested");
        relu_backward(&c.a1, &mut da1);
        f.c1.backward(p, &c.col1, &da1, rows, &mut g, false);
        Ok(g)
    }

    /// Range of the FEG parameters inside the flat vector.
    pub fn feg_param_range(&self) -> Option<std::ops::Range<usize>> {
        self.feg.as_ref().map(|f| f.c1.w.offset..f.d2.b.offset + f.d2.b.len)
    }
}
