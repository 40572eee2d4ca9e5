//! Maps from uniform variates to model noise.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

/// Inputs are clamped to `[CLAMP_EPS, 1 - CLAMP_EPS]` before inversion in
/// [`gaussian_step`], so a lattice coordinate of exactly 0 stays finite.
pub const CLAMP_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("inverse normal CDF argument {0} outside (0, 1)")]
    Domain(f64),
    #[error("uniform coordinate {0} outside [0, 1)")]
    NotUniform(f64),
    #[error("dimension mismatch: u has {u}, x_prev has {x}, sigma has {sigma}")]
    Dimension { u: usize, x: usize, sigma: usize },
    #[error("standard deviation {0} must be positive")]
    NonPositiveSigma(f64),
}

/// A point of the unit cube `[0, 1)^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformVector(Vec<f64>);

impl UniformVector {
    pub fn new(coords: Vec<f64>) -> Result<Self, TransformError> {
        match coords.iter().find(|u| !(0.0..1.0).contains(*u)) {
            Some(&bad) => Err(TransformError::NotUniform(bad)),
            None => Ok(Self(coords)),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for UniformVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

// Rational approximation coefficients (Acklam); ~1.15e-9 relative error
// before refinement.
#[allow(clippy::excessive_precision)]
const A: [f64; 6] = [
    -3.969683028665376e1,
    2.209460984245205e2,
    -2.759285104469687e2,
    1.383577518672690e2,
    -3.066479806614716e1,
    2.506628277459239e0,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 5] = [
    -5.447609879822406e1,
    1.615858368580409e2,
    -1.556989798598866e2,
    6.680131188771972e1,
    -1.328068155288572e1,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 6] = [
    -7.784894002430293e-3,
    -3.223964580411365e-1,
    -2.400758277161838e0,
    -2.549732539343734e0,
    4.374664141464968e0,
    2.938163982698783e0,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 4] = [
    7.784695709041462e-3,
    3.224671290700398e-1,
    2.445134137142996e0,
    3.754408661907416e0,
];
const P_LOW: f64 = 0.02425;

fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Quantile of the standard normal without domain checks. `p` must lie in `(0, 1)`.
#[inline]
fn quantile_unchecked(p: f64) -> f64 {
    let x = acklam(p);
    // One Halley step against the erfc-based CDF.
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Inverse of the standard normal CDF.
pub fn inv_normal_cdf(u: f64) -> Result<f64, TransformError> {
    if u > 0.0 && u < 1.0 {
        Ok(quantile_unchecked(u))
    } else {
        Err(TransformError::Domain(u))
    }
}

/// Inverse normal CDF after clamping `u` into `[CLAMP_EPS, 1 - CLAMP_EPS]`.
#[inline]
pub fn clamped_normal_quantile(u: f64) -> f64 {
    quantile_unchecked(u.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS))
}

/// Gaussian random-walk step: `x_prev[k] + sigma[k] * Phi^{-1}(u[k])`.
pub fn gaussian_step(u: &[f64], x_prev: &[f64], sigma: &[f64]) -> Result<Vec<f64>, TransformError> {
    if u.len() != x_prev.len() || u.len() != sigma.len() {
        return Err(TransformError::Dimension {
            u: u.len(),
            x: x_prev.len(),
            sigma: sigma.len(),
        });
    }
    if let Some(&s) = sigma.iter().find(|s| s.is_nan() || **s <= 0.0) {
        return Err(TransformError::NonPositiveSigma(s));
    }
    if let Some(&bad) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(TransformError::Domain(bad));
    }
    Ok(u.iter()
        .zip(x_prev)
        .zip(sigma)
        .map(|((&u, &x), &s)| x + s * clamped_normal_quantile(u))
        .collect())
}

/// In-place variant with a shared standard deviation, used by the built-in
/// random-walk models.
#[inline]
pub(crate) fn isotropic_step_into(u: &[f64], x_prev: &[f64], sigma: f64, out: &mut [f64]) {
    for ((o, &u), &x) in out.iter_mut().zip(u).zip(x_prev) {
        *o = x + sigma * clamped_normal_quantile(u);
    }
}
