//! Monocular pseudo-laser navigation.
//!
//! A 2.5D simulator renders depth and traversability images, which are fused
//! and sliced into a 1-D pseudo-laser scan. A recurrent actor-critic policy
//! with a learned attention mask over the scan is trained with PPO to reach
//! goals without collisions.

pub mod config;
pub mod env;
pub mod eval;
pub mod nn;
pub mod pseudolaser;
pub mod trainer;
pub mod worldsim;
