use super::FilterError;

/// Tolerance on `sum(weights) == 1` for a valid set.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// `n` weighted states, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    dim: usize,
    states: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleSet {
    pub fn new(states: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, FilterError> {
        let dim = states.first().map(Vec::len).unwrap_or(0);
        if states.iter().any(|s| s.len() != dim) {
            return Err(FilterError::Invalid("states have differing dimensions".into()));
        }
        Self::from_flat(dim, states.concat(), weights)
    }

    pub fn from_flat(dim: usize, states: Vec<f64>, weights: Vec<f64>) -> Result<Self, FilterError> {
        let n = weights.len();
        if n == 0 || dim == 0 {
            return Err(FilterError::Invalid("particle set must be non-empty".into()));
        }
        if states.len() != n * dim {
            return Err(FilterError::Invalid(format!(
                "{} state values for {n} particles of dimension {dim}",
                states.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(FilterError::Invalid("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FilterError::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, states, weights })
    }

    /// `n` copies of `state` with uniform weights.
    pub fn replicate(state: &[f64], n: usize) -> Self {
        assert!(n >= 1 && !state.is_empty());
        Self {
            dim: state.len(),
            states: state.repeat(n),
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub(crate) fn from_parts_unchecked(dim: usize, states: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(states.len(), dim * weights.len());
        Self { dim, states, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn flat_states(&self) -> &[f64] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Weighted average `sum_i w_i f(x_i)`.
    pub fn estimate<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut acc: Vec<f64> = Vec::new();
        for (x, &w) in self.states().zip(&self.weights) {
            let v = f(x);
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            for (a, vi) in acc.iter_mut().zip(v) {
                *a += w * vi;
            }
        }
        acc
    }

    /// Weighted mean state.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for (x, &w) in self.states().zip(&self.weights) {
            for (a, &xi) in acc.iter_mut().zip(x) {
                *a += w * xi;
            }
        }
        acc
    }
}

/// Free-function form of [`ParticleSet::estimate`].
pub fn estimate<F>(particles: &ParticleSet, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    particles.estimate(f)
}
