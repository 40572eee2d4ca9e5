//! Particle filter engine.
//!
//! Every step resamples ancestors from the previous weights, pushes each
//! survivor through the model's transformation function with a uniform
//! vector, then reweights by the likelihood of the new observation. The
//! plain particle filter draws those uniform vectors from the pseudorandom
//! stream; the lattice particle filter takes them from a randomly shifted
//! Korobov rule, assigned to particles by a random permutation. Both the
//! shift and the permutation are redrawn at every step.
//!
//! Per-step RNG consumption, in order:
//!
//! 1. resampling (`n` draws for multinomial, the remainder count for residual),
//! 2. proposal points: `n * s` `f64` draws, particle-major (pseudorandom), or
//!    `s` `f64` draws for the shift followed by `n - 1` bounded draws for the
//!    permutation (lattice).

mod particles;
mod resample;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{draw_permutation, draw_shift, LatticeError, LatticeRule};

pub use particles::{estimate, ParticleSet, WEIGHT_SUM_TOL};
pub use resample::{multinomial_resample, residual_resample, Resampling};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    /// Every particle has zero likelihood: the filter lost track.
    #[error("degenerate weights at t={t}: every particle has zero likelihood")]
    DegenerateWeights { t: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid particle set: {0}")]
    Invalid(String),
}

/// A state-space model usable by the filters.
///
/// `transform` must map a uniform vector on `[0, 1)^s` and a previous state
/// to a draw from the filter's transition density. `simulate_transition` is
/// the data-generating dynamics, which may deliberately differ from it.
pub trait StateSpaceModel: Sync {
    type Observation: Send + Sync;

    fn state_dim(&self) -> usize;

    fn initial_state(&self) -> Vec<f64>;

    fn transform(&self, u: &[f64], prev: &[f64], out: &mut [f64]);

    /// `log p(y | x)` up to an additive constant; `-inf` for impossible states.
    fn log_likelihood(&self, y: &Self::Observation, x: &[f64]) -> f64;

    fn simulate_transition(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;

    fn simulate_observation(&self, x: &[f64], rng: &mut dyn RngCore) -> Self::Observation;

    /// Whether a simulated ground-truth state is acceptable; rejected
    /// trajectories are regenerated.
    fn accepts_truth(&self, _x: &[f64]) -> bool {
        true
    }
}

/// Source of the per-step uniform vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    Pseudorandom,
    Lattice,
}

impl Proposal {
    /// Short scheme label: `pf` or `lpf`.
    pub fn label(self) -> &'static str {
        match self {
            Self::Pseudorandom => "pf",
            Self::Lattice => "lpf",
        }
    }
}

impl std::str::FromStr for Proposal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pf" | "pseudorandom" => Ok(Self::Pseudorandom),
            "lpf" | "lattice" => Ok(Self::Lattice),
            other => Err(format!("unknown scheme `{other}` (expected pf|lpf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub resampling: Resampling,
    pub proposal: Proposal,
    pub seed: u64,
    /// Explicit lattice generator. Without one, `n_particles` must be a
    /// tabulated power of two.
    pub generator: Option<u64>,
}

impl FilterConfig {
    pub fn new(n_particles: usize, proposal: Proposal, resampling: Resampling, seed: u64) -> Self {
        Self {
            n_particles,
            resampling,
            proposal,
            seed,
            generator: None,
        }
    }

    pub fn with_generator(mut self, generator: u64) -> Self {
        self.generator = Some(generator);
        self
    }

    /// Checks the configuration against a state dimension and returns the
    /// unshifted lattice rule when the lattice proposal is selected.
    pub fn lattice_rule(&self, state_dim: usize) -> Result<Option<LatticeRule>, FilterError> {
        if self.n_particles == 0 {
            return Err(FilterError::Config("n_particles must be at least 1".into()));
        }
        match self.proposal {
            Proposal::Pseudorandom => Ok(None),
            Proposal::Lattice => {
                let rule = match self.generator {
                    Some(a) => LatticeRule::unshifted(self.n_particles, a, state_dim)?,
                    None => LatticeRule::from_table(self.n_particles, state_dim, vec![0.0; state_dim])?,
                };
                Ok(Some(rule))
            }
        }
    }
}

/// Normalizes log-weights by max subtraction. Returns `None` when no entry
/// is finite-or-positive (every weight would be zero).
pub fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let mut w = log_weights.to_vec();
    normalize_in_place(&mut w).then_some(w)
}

fn normalize_in_place(w: &mut [f64]) -> bool {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return false;
    }
    let mut total = 0.0;
    for v in w.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    true
}

fn reweight_in_place<M: StateSpaceModel>(
    particles: &mut ParticleSet,
    y: &M::Observation,
    model: &M,
    t: usize,
) -> Result<(), FilterError> {
    let dim = particles.dim();
    let logs: Vec<f64> = particles
        .flat_states()
        .chunks_exact(dim)
        .map(|x| model.log_likelihood(y, x))
        .collect();
    let weights = particles.weights_mut();
    weights.copy_from_slice(&logs);
    if normalize_in_place(weights) {
        Ok(())
    } else {
        Err(FilterError::DegenerateWeights { t })
    }
}

/// New weights proportional to `p(y | x_i)`.
pub fn reweight<M: StateSpaceModel>(
    particles: &ParticleSet,
    y: &M::Observation,
    model: &M,
    t: usize,
) -> Result<ParticleSet, FilterError> {
    let mut out = particles.clone();
    reweight_in_place(&mut out, y, model, t)?;
    Ok(out)
}

/// `x_i = g(points[i], x_{indices[i]})` with uniform weights.
///
/// `points` is row-major, `n * state_dim` values.
pub fn propagate<M: StateSpaceModel>(
    particles: &ParticleSet,
    indices: &[usize],
    points: &[f64],
    model: &M,
) -> ParticleSet {
    let n = indices.len();
    let dim = model.state_dim();
    assert_eq!(points.len(), n * dim, "need n * state_dim uniform coordinates");
    let mut states = vec![0.0; n * dim];
    for ((out, u), &a) in states.chunks_exact_mut(dim).zip(points.chunks_exact(dim)).zip(indices) {
        model.transform(u, particles.state(a), out);
    }
    ParticleSet::from_parts_unchecked(dim, states, vec![1.0 / n as f64; n])
}

/// The lattice points used for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPoints {
    pub shift: Vec<f64>,
    pub permutation: Vec<usize>,
    /// Row-major; row `i` is lattice point `permutation[i]` under `shift`.
    pub points: Vec<f64>,
}

impl StepPoints {
    /// Draws a fresh shift, then a fresh permutation, and assigns points.
    pub fn draw<R: Rng + ?Sized>(rule: &LatticeRule, rng: &mut R) -> Self {
        let dims = rule.dims();
        let shift = draw_shift(dims, rng);
        let permutation = draw_permutation(rule.n(), rng);
        let shifted = rule.with_shift(shift.clone()).expect("drawn shift lies in [0, 1)");
        let mut points = vec![0.0; rule.n() * dims];
        for (row, &gamma) in points.chunks_exact_mut(dims).zip(&permutation) {
            shifted.point_into(gamma, row);
        }
        Self {
            shift,
            permutation,
            points,
        }
    }
}

/// One plain particle filter step for time `t`.
pub fn pf_step<M: StateSpaceModel, R: Rng + ?Sized>(
    particles: &ParticleSet,
    y: &M::Observation,
    model: &M,
    resampling: Resampling,
    rng: &mut R,
    t: usize,
) -> Result<ParticleSet, FilterError> {
    let indices = resampling.resample(particles.weights(), rng);
    let points: Vec<f64> = (0..indices.len() * model.state_dim())
        .map(|_| rng.random::<f64>())
        .collect();
    let mut next = propagate(particles, &indices, &points, model);
    reweight_in_place(&mut next, y, model, t)?;
    Ok(next)
}

/// One lattice particle filter step for time `t`. `rule`'s own shift is
/// ignored; a fresh one is drawn.
pub fn lpf_step<M: StateSpaceModel, R: Rng + ?Sized>(
    particles: &ParticleSet,
    y: &M::Observation,
    model: &M,
    resampling: Resampling,
    rule: &LatticeRule,
    rng: &mut R,
    t: usize,
) -> Result<ParticleSet, FilterError> {
    if rule.dims() != model.state_dim() {
        return Err(FilterError::Config(format!(
            "lattice dimension {} does not match state dimension {}",
            rule.dims(),
            model.state_dim()
        )));
    }
    if rule.n() != particles.len() {
        return Err(FilterError::Config(format!(
            "lattice has {} points for {} particles",
            rule.n(),
            particles.len()
        )));
    }
    let indices = resampling.resample(particles.weights(), rng);
    let step = StepPoints::draw(rule, rng);
    let mut next = propagate(particles, &indices, &step.points, model);
    reweight_in_place(&mut next, y, model, t)?;
    Ok(next)
}

/// A filter run owning its RNG and particle set.
pub struct ParticleFilter<'m, M: StateSpaceModel> {
    model: &'m M,
    config: FilterConfig,
    rule: Option<LatticeRule>,
    rng: ChaCha8Rng,
    particles: ParticleSet,
    t: usize,
}

impl<'m, M: StateSpaceModel> ParticleFilter<'m, M> {
    /// All particles start at `initial_state` (time 0).
    pub fn new(model: &'m M, config: FilterConfig, initial_state: &[f64]) -> Result<Self, FilterError> {
        if initial_state.len() != model.state_dim() {
            return Err(FilterError::Config(format!(
                "initial state has {} components, model expects {}",
                initial_state.len(),
                model.state_dim()
            )));
        }
        let rule = config.lattice_rule(model.state_dim())?;
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            particles: ParticleSet::replicate(initial_state, config.n_particles),
            rule,
            config,
            t: 0,
        })
    }

    pub fn step(&mut self, y: &M::Observation) -> Result<&ParticleSet, FilterError> {
        let t = self.t + 1;
        self.particles = match &self.rule {
            Some(rule) => lpf_step(
                &self.particles,
                y,
                self.model,
                self.config.resampling,
                rule,
                &mut self.rng,
                t,
            )?,
            None => pf_step(
                &self.particles,
                y,
                self.model,
                self.config.resampling,
                &mut self.rng,
                t,
            )?,
        };
        self.t = t;
        Ok(&self.particles)
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }
}

/// Runs a filter over frames `1..` of `observations`, starting from
/// `initial_state` at frame 0. Returns the weighted-mean state per frame,
/// frame 0 included.
pub fn run_filter<M: StateSpaceModel>(
    model: &M,
    config: &FilterConfig,
    initial_state: &[f64],
    observations: &[M::Observation],
) -> Result<Vec<Vec<f64>>, FilterError> {
    let mut filter = ParticleFilter::new(model, config.clone(), initial_state)?;
    let mut means = Vec::with_capacity(observations.len().max(1));
    means.push(initial_state.to_vec());
    for y in observations.iter().skip(1) {
        means.push(filter.step(y)?.mean());
    }
    Ok(means)
}
