//! Squashed diagonal Gaussian over `(v, w)`.
//!
//! A pre-squash sample `u ~ N(mean, exp(log_std)²)` maps to
//! `v = logistic(u₀) ∈ (0, 1)` and `w = tanh(u₁) ∈ (−1, 1)`.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::layers::{logistic, softplus};
use crate::worldsim::Action;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDist {
    pub mean: [f64; 2],
    pub log_std: [f64; 2],
}

/// A sampled action together with its pre-squash coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub u: [f64; 2],
    pub action: Action,
    pub log_prob: f64,
}

pub fn squash(u: [f64; 2]) -> Action {
    Action { v: logistic(u[0]), w_normalized: u[1].tanh() }
}

/// `log |det ∂squash/∂u|`.
pub fn log_jacobian(u: [f64; 2]) -> f64 {
    // log σ'(x) = −softplus(x) − softplus(−x); log tanh'(x) = 2(ln2 − x − softplus(−2x))
    let lv = -softplus(u[0]) - softplus(-u[0]);
    let lw = 2.0 * (LN_2 - u[1] - softplus(-2.0 * u[1]));
    lv + lw
}

impl ActionDist {
    pub fn std(&self) -> [f64; 2] {
        [self.log_std[0].exp(), self.log_std[1].exp()]
    }

    /// Log density of the pre-squash Gaussian at `u`.
    pub fn gaussian_log_prob(&self, u: [f64; 2]) -> f64 {
        let mut lp = 0.0;
        for i in 0..2 {
            let z = (u[i] - self.mean[i]) / self.log_std[i].exp();
            lp += -0.5 * z * z - self.log_std[i] - 0.5 * (2.0 * PI).ln();
        }
        lp
    }

    /// Log density of the squashed action whose pre-image is `u`.
    pub fn log_prob(&self, u: [f64; 2]) -> f64 {
        self.gaussian_log_prob(u) - log_jacobian(u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionSample {
        let std = self.std();
        let mut u = [0.0; 2];
        for i in 0..2 {
            let e: f64 = StandardNormal.sample(rng);
            u[i] = self.mean[i] + std[i] * e;
        }
        ActionSample { u, action: squash(u), log_prob: self.log_prob(u) }
    }

    /// Deterministic action at the distribution mean.
    pub fn mode(&self) -> Action {
        squash(self.mean)
    }

    /// Entropy of the pre-squash Gaussian.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|s| 0.5 + 0.5 * (2.0 * PI).ln() + s).sum()
    }

    /// `KL(self ‖ other)` between the pre-squash Gaussians.
    pub fn kl(&self, other: &ActionDist) -> f64 {
        let mut kl = 0.0;
        for i in 0..2 {
            let (s1, s2) = (self.log_std[i].exp(), other.log_std[i].exp());
            let d = self.mean[i] - other.mean[i];
            kl += other.log_std[i] - self.log_std[i] + (s1 * s1 + d * d) / (2.0 * s2 * s2) - 0.5;
        }
        kl
    }
}
