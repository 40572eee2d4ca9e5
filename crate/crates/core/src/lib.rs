//! Particle filters with randomized lattice proposals.
//!
//! The lattice particle filter replaces the pseudorandom uniform vectors that
//! drive particle propagation with the points of a randomly shifted Korobov
//! lattice rule, assigned to particles through a random permutation at every
//! step. Resampling and reweighting are unchanged, so the weighted particle
//! set remains properly weighted while the proposals cover the state space
//! more evenly.
//!
//! - [`lattice`]: Korobov rules, the generator table, shifts and permutations.
//! - [`transforms`]: inverse normal CDF and Gaussian steps.
//! - [`filter`]: particle sets, resampling and the PF/LPF step functions.
//! - [`models`]: toy binary, linear-Gaussian (with Kalman oracle), disk
//!   tracking and articulated body models.
//! - [`experiments`]: RMSE and ensemble-spread harness with report output.

pub mod experiments;
pub mod filter;
pub mod format;
pub mod lattice;
pub mod models;
pub mod seed;
pub mod transforms;

pub use filter::{
    lpf_step, pf_step, FilterConfig, FilterError, ParticleFilter, ParticleSet, Proposal, Resampling,
    StateSpaceModel,
};
pub use lattice::{generator_for, LatticeError, LatticeRule, PermutationSchedule};
pub use models::Sequence;
