use rand::{Rng, RngCore};

use crate::filter::StateSpaceModel;

/// Uniform transition on `[0, 1)` with a binary observation that fires iff
/// the state lies below `threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyBinaryModel {
    pub threshold: f64,
    /// Simulate ground truth inside `[0, threshold)` so every observation
    /// is 1. The filter's own transition is unaffected.
    pub truth_in_region: bool,
}

impl Default for ToyBinaryModel {
    fn default() -> Self {
        Self {
            threshold: 0.2,
            truth_in_region: true,
        }
    }
}

impl ToyBinaryModel {
    pub fn observe(&self, x: f64) -> bool {
        x < self.threshold
    }
}

impl StateSpaceModel for ToyBinaryModel {
    type Observation = bool;

    fn state_dim(&self) -> usize {
        1
    }

    fn initial_state(&self) -> Vec<f64> {
        if self.truth_in_region {
            vec![0.5 * self.threshold]
        } else {
            vec![0.5]
        }
    }

    fn transform(&self, u: &[f64], _prev: &[f64], out: &mut [f64]) {
        out[0] = u[0];
    }

    fn log_likelihood(&self, y: &bool, x: &[f64]) -> f64 {
        if self.observe(x[0]) == *y {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn simulate_transition(&self, _x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let u: f64 = rng.random();
        if self.truth_in_region {
            vec![u * self.threshold]
        } else {
            vec![u]
        }
    }

    fn simulate_observation(&self, x: &[f64], _rng: &mut dyn RngCore) -> bool {
        self.observe(x[0])
    }
}

/// Probability that at least one of `k` steps leaves no particle among `n`
/// inside a region each particle hits independently with probability `p`.
pub fn toy_loss_probability(k: u32, n: u32, p: f64) -> f64 {
    let miss_all = (1.0 - p).powi(n as i32);
    1.0 - (1.0 - miss_all).powi(k as i32)
}
