//! Multi-trial experiment harness.
//!
//! Every trial derives its own RNG streams from `(base seed, trial index,
//! stream id)`, so trials can run in any order or in parallel and the
//! reduction (always in trial order) produces the same bits.

mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::filter::{run_filter, FilterConfig, FilterError, Proposal, Resampling, StateSpaceModel};
use crate::models::{simulate_sequence, ModelError, Sequence};
use crate::seed::derive_seed;

pub use report::{
    efficiency_gain, match_particle_count, rmse_difference, variance_difference, Comparison, Curve,
    EfficiencyGain, EfficiencyGainEntry, ExperimentReport, Reference, Spread, SpreadStep, StepStats,
};

/// Attempts before giving up on simulating an acceptable trajectory.
pub const MAX_SEQUENCE_ATTEMPTS: u64 = 10_000;

/// Stream id used for sequence simulation; filter runs use `1 + scheme index`.
const SEQUENCE_STREAM: u64 = 0;
const REFERENCE_STREAM: u64 = u64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("no results for scheme `{scheme}` at n={n}")]
    Lookup { scheme: String, n: usize },
    #[error("reference run failed: {0}")]
    Reference(FilterError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One filter variant under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheme {
    pub proposal: Proposal,
    pub resampling: Resampling,
}

impl Scheme {
    pub fn pf(resampling: Resampling) -> Self {
        Self {
            proposal: Proposal::Pseudorandom,
            resampling,
        }
    }

    pub fn lpf(resampling: Resampling) -> Self {
        Self {
            proposal: Proposal::Lattice,
            resampling,
        }
    }

    pub fn label(&self) -> &'static str {
        self.proposal.label()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: String,
    pub schemes: Vec<Scheme>,
    pub particle_counts: Vec<usize>,
    pub trials: usize,
    pub steps: usize,
    pub base_seed: u64,
    /// Lattice generator override passed to every lattice run.
    pub generator: Option<u64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials < 2 {
            return Err(ExperimentError::Config("trials must be at least 2".into()));
        }
        if self.steps < 1 {
            return Err(ExperimentError::Config("steps must be at least 1".into()));
        }
        if self.schemes.is_empty() || self.particle_counts.is_empty() {
            return Err(ExperimentError::Config(
                "need at least one scheme and one particle count".into(),
            ));
        }
        if self.particle_counts.contains(&0) {
            return Err(ExperimentError::Config("particle counts must be positive".into()));
        }
        Ok(())
    }

    /// `(scheme index, scheme, n, filter config template)` for every runnable
    /// combination, plus descriptions of the skipped ones.
    fn runs(&self, state_dim: usize) -> (Vec<(usize, Scheme, usize)>, Vec<String>) {
        let mut runs = Vec::new();
        let mut skipped = Vec::new();
        for (k, scheme) in self.schemes.iter().enumerate() {
            for &n in &self.particle_counts {
                let cfg = self.filter_config(*scheme, n, 0);
                match cfg.lattice_rule(state_dim) {
                    Ok(_) => runs.push((k, *scheme, n)),
                    Err(e) => skipped.push(format!("{} n={n}: {e}", scheme.label())),
                }
            }
        }
        (runs, skipped)
    }

    fn filter_config(&self, scheme: Scheme, n: usize, seed: u64) -> FilterConfig {
        FilterConfig {
            n_particles: n,
            resampling: scheme.resampling,
            proposal: scheme.proposal,
            seed,
            generator: match scheme.proposal {
                Proposal::Lattice => self.generator,
                Proposal::Pseudorandom => None,
            },
        }
    }
}

/// Simulates a sequence for `trial`, regenerating with fresh seeds until the
/// model accepts the whole trajectory. Returns the sequence and the number of
/// rejected attempts.
pub fn simulate_trial<M: StateSpaceModel>(
    model: &M,
    steps: usize,
    base_seed: u64,
    trial: u64,
) -> Result<(Sequence<M::Observation>, usize), ExperimentError> {
    for attempt in 0..MAX_SEQUENCE_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base_seed, &[trial, SEQUENCE_STREAM, attempt]));
        match simulate_sequence(model, steps, &mut rng) {
            Ok(seq) => return Ok((seq, attempt as usize)),
            Err(ModelError::Rejected { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(ExperimentError::Config(format!(
        "no acceptable trajectory after {MAX_SEQUENCE_ATTEMPTS} attempts"
    )))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Per-step statistics of per-trial errors; `None` entries are failed trials.
fn step_stats(errors: &[Option<Vec<f64>>], steps: usize) -> Vec<StepStats> {
    let ok: Vec<&Vec<f64>> = errors.iter().flatten().collect();
    let k = ok.len();
    (0..steps)
        .map(|t| {
            if k == 0 {
                return StepStats {
                    t,
                    rmse: None,
                    mse: None,
                    ensemble_std: None,
                    std_error: None,
                };
            }
            let mse = ok.iter().map(|e| e[t] * e[t]).sum::<f64>() / k as f64;
            let mean = ok.iter().map(|e| e[t]).sum::<f64>() / k as f64;
            let std = if k > 1 {
                (ok.iter().map(|e| (e[t] - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            } else {
                0.0
            };
            StepStats {
                t,
                rmse: Some(mse.sqrt()),
                mse: Some(mse),
                ensemble_std: Some(std),
                std_error: Some(std / (k as f64).sqrt()),
            }
        })
        .collect()
}

/// RMSE experiment: a fresh simulated sequence per trial, every scheme and
/// particle count run on it, errors measured against the true state.
///
/// Runs trials on the current rayon pool.
pub fn run_rmse<M: StateSpaceModel>(
    model: &M,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let (runs, skipped) = config.runs(model.state_dim());
    if runs.is_empty() {
        return Err(ExperimentError::Config(format!(
            "no runnable scheme/particle-count combination: {}",
            skipped.join("; ")
        )));
    }

    type TrialOutcome = (usize, Vec<Option<Vec<f64>>>);
    let outcomes: Vec<TrialOutcome> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome, ExperimentError> {
            let (seq, rejected) = simulate_trial(model, config.steps, config.base_seed, trial)?;
            let errors = runs
                .iter()
                .map(|&(k, scheme, n)| {
                    let seed = derive_seed(config.base_seed, &[trial, 1 + k as u64, n as u64]);
                    let cfg = config.filter_config(scheme, n, seed);
                    match run_filter(model, &cfg, &seq.states[0], &seq.observations) {
                        Ok(means) => Some(
                            means
                                .iter()
                                .zip(&seq.states)
                                .map(|(m, x)| euclidean(m, x))
                                .collect(),
                        ),
                        Err(FilterError::DegenerateWeights { .. }) => None,
                        Err(e) => panic!("validated filter configuration failed: {e}"),
                    }
                })
                .collect();
            Ok((rejected, errors))
        })
        .collect::<Result<_, _>>()?;

    let regenerated_sequences = outcomes.iter().map(|o| o.0).sum();
    let curves = runs
        .iter()
        .enumerate()
        .map(|(r, &(_, scheme, n))| {
            let errors: Vec<Option<Vec<f64>>> = outcomes.iter().map(|o| o.1[r].clone()).collect();
            Curve {
                scheme: scheme.label().into(),
                resampling: scheme.resampling.name().into(),
                n,
                failed: errors.iter().filter(|e| e.is_none()).count(),
                steps: step_stats(&errors, config.steps),
            }
        })
        .collect();

    let mut report = ExperimentReport {
        model: config.model.clone(),
        trials: config.trials,
        steps: config.steps,
        base_seed: config.base_seed,
        reference: Reference::Truth,
        regenerated_sequences,
        curves,
        comparisons: vec![],
        efficiency_gains: vec![],
        spreads: vec![],
        skipped,
    };
    report.summarize("pf", "lpf");
    Ok(report)
}

/// Weighted-mean state per frame from one large plain-filter run with
/// residual resampling, used as the reference posterior mean.
pub fn ground_truth_mean<M: StateSpaceModel>(
    sequence: &Sequence<M::Observation>,
    model: &M,
    n_large: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ExperimentError> {
    let cfg = FilterConfig::new(n_large, Proposal::Pseudorandom, Resampling::Residual, seed);
    run_filter(model, &cfg, &sequence.states[0], &sequence.observations).map_err(ExperimentError::Reference)
}

/// Mean estimates of repeated runs on one fixed sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRuns {
    /// `estimates[run][t]`, `None` for runs that lost track.
    pub estimates: Vec<Option<Vec<Vec<f64>>>>,
}

impl EnsembleRuns {
    pub fn failed(&self) -> usize {
        self.estimates.iter().filter(|e| e.is_none()).count()
    }

    /// Per-step, per-dimension sample standard deviation of the estimates,
    /// mean absolute deviation from `reference`, and mean estimate.
    pub fn spread(&self, reference: &[Vec<f64>]) -> Vec<SpreadStep> {
        let ok: Vec<&Vec<Vec<f64>>> = self.estimates.iter().flatten().collect();
        let k = ok.len() as f64;
        reference
            .iter()
            .enumerate()
            .map(|(t, r)| {
                let dims = r.len();
                let mut mean = vec![0.0; dims];
                let mut mad = vec![0.0; dims];
                for run in &ok {
                    for d in 0..dims {
                        mean[d] += run[t][d] / k;
                        mad[d] += (run[t][d] - r[d]).abs() / k;
                    }
                }
                let std = (0..dims)
                    .map(|d| {
                        if ok.len() < 2 {
                            return 0.0;
                        }
                        let ss: f64 = ok.iter().map(|run| (run[t][d] - mean[d]).powi(2)).sum();
                        (ss / (k - 1.0)).sqrt()
                    })
                    .collect();
                SpreadStep {
                    t,
                    std,
                    mean_abs_dev: mad,
                    mean_estimate: mean,
                }
            })
            .collect()
    }
}

/// Runs `scheme` `runs` times on the same sequence with seeds derived from
/// `(base_seed, run, stream)`.
pub fn ensemble_spread<M: StateSpaceModel>(
    model: &M,
    sequence: &Sequence<M::Observation>,
    config: &FilterConfig,
    runs: usize,
    base_seed: u64,
    stream: u64,
) -> Result<EnsembleRuns, ExperimentError> {
    if runs < 2 {
        return Err(ExperimentError::Config("ensemble needs at least 2 runs".into()));
    }
    config
        .lattice_rule(model.state_dim())
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let estimates = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut cfg = config.clone();
            cfg.seed = derive_seed(base_seed, &[run, stream, config.n_particles as u64]);
            match run_filter(model, &cfg, &sequence.states[0], &sequence.observations) {
                Ok(m) => Some(m),
                Err(FilterError::DegenerateWeights { .. }) => None,
                Err(e) => panic!("validated filter configuration failed: {e}"),
            }
        })
        .collect();
    Ok(EnsembleRuns { estimates })
}

/// Spread experiment: one simulated sequence, a reference posterior mean from
/// a plain filter with 16 times the largest particle count, then `trials`
/// repeated runs of every scheme. Curves measure error against the reference.
pub fn run_spread<M: StateSpaceModel>(
    model: &M,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let (runs, skipped) = config.runs(model.state_dim());
    if runs.is_empty() {
        return Err(ExperimentError::Config(format!(
            "no runnable scheme/particle-count combination: {}",
            skipped.join("; ")
        )));
    }
    let (sequence, regenerated) = simulate_trial(model, config.steps, config.base_seed, 0)?;
    let n_max = runs.iter().map(|r| r.2).max().unwrap_or(1);
    let reference = ground_truth_mean(
        &sequence,
        model,
        16 * n_max,
        derive_seed(config.base_seed, &[REFERENCE_STREAM]),
    )?;

    let mut curves = Vec::new();
    let mut spreads = Vec::new();
    for &(k, scheme, n) in &runs {
        let cfg = config.filter_config(scheme, n, 0);
        let ensemble = ensemble_spread(model, &sequence, &cfg, config.trials, config.base_seed, 1 + k as u64)?;
        let errors: Vec<Option<Vec<f64>>> = ensemble
            .estimates
            .iter()
            .map(|e| {
                e.as_ref()
                    .map(|m| m.iter().zip(&reference).map(|(a, b)| euclidean(a, b)).collect())
            })
            .collect();
        let spread_steps = ensemble.spread(&reference);
        let ok = config.trials - ensemble.failed();
        let mut steps = step_stats(&errors, config.steps);
        // Ensemble spread of the estimate itself: RMS over dimensions of the per-dimension std.
        for (s, sp) in steps.iter_mut().zip(&spread_steps) {
            if ok > 0 {
                let var = sp.std.iter().map(|v| v * v).sum::<f64>() / sp.std.len() as f64;
                s.ensemble_std = Some(var.sqrt());
                s.std_error = Some(var.sqrt() / (ok as f64).sqrt());
            }
        }
        curves.push(Curve {
            scheme: scheme.label().into(),
            resampling: scheme.resampling.name().into(),
            n,
            failed: ensemble.failed(),
            steps,
        });
        spreads.push(Spread {
            scheme: scheme.label().into(),
            n,
            runs: config.trials,
            failed: ensemble.failed(),
            steps: spread_steps,
        });
    }

    let mut report = ExperimentReport {
        model: config.model.clone(),
        trials: config.trials,
        steps: config.steps,
        base_seed: config.base_seed,
        reference: Reference::PosteriorMean,
        regenerated_sequences: regenerated,
        curves,
        comparisons: vec![],
        efficiency_gains: vec![],
        spreads,
        skipped,
    };
    report.summarize("pf", "lpf");
    Ok(report)
}
