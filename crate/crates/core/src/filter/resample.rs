//! Ancestor selection. Indices are zero-based.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ParticleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    Multinomial,
    Residual,
}

impl Resampling {
    pub fn name(self) -> &'static str {
        match self {
            Self::Multinomial => "multinomial",
            Self::Residual => "residual",
        }
    }

    pub fn resample<R: Rng + ?Sized>(self, weights: &[f64], rng: &mut R) -> Vec<usize> {
        match self {
            Self::Multinomial => multinomial_indices(weights, weights.len(), rng),
            Self::Residual => residual_indices(weights, rng),
        }
    }
}

impl std::str::FromStr for Resampling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multinomial" => Ok(Self::Multinomial),
            "residual" => Ok(Self::Residual),
            other => Err(format!("unknown resampling scheme `{other}` (expected multinomial|residual)")),
        }
    }
}

/// `count` i.i.d. draws from the categorical distribution proportional to
/// `weights`. Consumes exactly `count` `f64` draws.
fn multinomial_indices<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut total = 0.0;
    for &w in weights {
        total += w;
        cumulative.push(total);
    }
    let last = weights.len() - 1;
    (0..count)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            // First index whose cumulative weight exceeds the target; zero-weight
            // entries are never selected because their cumulative value equals
            // their predecessor's.
            cumulative.partition_point(|&c| c <= target).min(last)
        })
        .collect()
}

/// Floor-count replication followed by multinomial sampling of the
/// fractional remainders. Deterministic copies come first, in index order.
fn residual_indices<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    let scaled: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut out = Vec::with_capacity(n);
    for (j, &s) in scaled.iter().enumerate() {
        let copies = (s.floor() as usize).min(n - out.len());
        out.extend(std::iter::repeat_n(j, copies));
    }
    let remaining = n - out.len();
    if remaining > 0 {
        let residual: Vec<f64> = scaled.iter().map(|s| (s - s.floor()).max(0.0)).collect();
        let source = if residual.iter().sum::<f64>() > 0.0 {
            &residual[..]
        } else {
            weights
        };
        out.extend(multinomial_indices(source, remaining, rng));
    }
    out
}

pub fn multinomial_resample<R: Rng + ?Sized>(particles: &ParticleSet, rng: &mut R) -> Vec<usize> {
    Resampling::Multinomial.resample(particles.weights(), rng)
}

pub fn residual_resample<R: Rng + ?Sized>(particles: &ParticleSet, rng: &mut R) -> Vec<usize> {
    Resampling::Residual.resample(particles.weights(), rng)
}
