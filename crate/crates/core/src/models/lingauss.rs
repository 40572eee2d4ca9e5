use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{require_nonnegative, require_positive, ModelError};
use crate::filter::StateSpaceModel;
use crate::transforms::clamped_normal_quantile;

/// Scalar random walk observed in Gaussian noise:
/// `x_t = x_{t-1} + N(0, q^2)`, `y_t = x_t + N(0, r^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianModel {
    pub transition_std: f64,
    pub observation_std: f64,
    pub initial_state: f64,
    /// Prior variance at frame 0. The filters start from a point mass at
    /// `initial_state`, so this is 0 unless the Kalman recursion is used alone.
    pub initial_var: f64,
}

impl Default for LinearGaussianModel {
    fn default() -> Self {
        Self {
            transition_std: 1.0,
            observation_std: 1.0,
            initial_state: 0.0,
            initial_var: 0.0,
        }
    }
}

impl LinearGaussianModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("sigma_transition", self.transition_std)?;
        require_positive("sigma_obs", self.observation_std)?;
        require_nonnegative("initial_var", self.initial_var)
    }
}

impl StateSpaceModel for LinearGaussianModel {
    type Observation = f64;

    fn state_dim(&self) -> usize {
        1
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![self.initial_state]
    }

    fn transform(&self, u: &[f64], prev: &[f64], out: &mut [f64]) {
        out[0] = prev[0] + self.transition_std * clamped_normal_quantile(u[0]);
    }

    fn log_likelihood(&self, y: &f64, x: &[f64]) -> f64 {
        let r = (y - x[0]) / self.observation_std;
        -0.5 * r * r
    }

    fn simulate_transition(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let z: f64 = StandardNormal.sample(rng);
        vec![x[0] + self.transition_std * z]
    }

    fn simulate_observation(&self, x: &[f64], rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        x[0] + self.observation_std * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KalmanEstimate {
    pub mean: f64,
    pub variance: f64,
}

/// Exact filtering moments for `observations` `y_1, y_2, ...`, starting from
/// the prior `N(initial_state, initial_var)` at frame 0.
pub fn kalman_filter(observations: &[f64], model: &LinearGaussianModel) -> Vec<KalmanEstimate> {
    let q2 = model.transition_std * model.transition_std;
    let r2 = model.observation_std * model.observation_std;
    let mut mean = model.initial_state;
    let mut var = model.initial_var;
    observations
        .iter()
        .map(|&y| {
            let prior_var = var + q2;
            let gain = prior_var / (prior_var + r2);
            mean += gain * (y - mean);
            var = (1.0 - gain) * prior_var;
            KalmanEstimate { mean, variance: var }
        })
        .collect()
}
