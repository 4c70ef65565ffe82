//! Checks shared between the per-module suites and the acceptance runner.
#![allow(dead_code)]

pub mod grad;
pub mod laser;
pub mod reward;
pub mod run;
