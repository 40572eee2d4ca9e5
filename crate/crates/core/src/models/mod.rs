//! Built-in state-space models.

mod body;
mod disk;
mod lingauss;
mod toy;

use rand::RngCore;
use thiserror::Error;

use crate::filter::StateSpaceModel;

pub use body::{project, BodyFrame, BodyGeometry, BodyModel, Marker, ANGLE_COUNT, MARKER_COUNT};
pub use disk::{DiskFrame, DiskModel};
pub use lingauss::{kalman_filter, KalmanEstimate, LinearGaussianModel};
pub use toy::{toy_loss_probability, ToyBinaryModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("projection singularity: marker depth equals camera depth")]
    ProjectionSingularity,
    #[error("simulated state at frame {t} rejected by the model")]
    Rejected { t: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            reason: format!("must be positive, got {value}"),
        })
    }
}

pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            reason: format!("must be nonnegative, got {value}"),
        })
    }
}

/// Ground truth and observations for one simulated run. Frame 0 is the
/// initial state; `states` and `observations` have equal length.
#[derive(Debug, Clone)]
pub struct Sequence<O> {
    pub states: Vec<Vec<f64>>,
    pub observations: Vec<O>,
}

impl<O> Sequence<O> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Simulates `steps` frames starting at the model's initial state using the
/// model's data-generating dynamics.
pub fn simulate_sequence<M: StateSpaceModel>(
    model: &M,
    steps: usize,
    rng: &mut dyn RngCore,
) -> Result<Sequence<M::Observation>, ModelError> {
    assert!(steps >= 1, "a sequence needs at least one frame");
    let mut states = Vec::with_capacity(steps);
    let mut observations = Vec::with_capacity(steps);
    let mut x = model.initial_state();
    for t in 0..steps {
        if t > 0 {
            x = model.simulate_transition(&x, rng);
        }
        if !model.accepts_truth(&x) {
            return Err(ModelError::Rejected { t });
        }
        observations.push(model.simulate_observation(&x, rng));
        states.push(x.clone());
    }
    Ok(Sequence { states, observations })
}
