//! A binary disk drifting over a noisy image.
//!
//! Pixel `(col, row)` sits at integer coordinates; the scene value is 1 iff
//! the pixel lies within `radius` of the disk center. The likelihood of a
//! candidate center is the Gaussian pixel-noise likelihood of the whole
//! image against the candidate's rendered template. Expanding the squared
//! error,
//!
//! ```text
//! sum (I - m)^2 = sum I^2 - 2 sum_{r in disk} I(r) + |disk|
//! ```
//!
//! so with per-row prefix sums of the observed image only the rows crossed
//! by the candidate disk are visited.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{require_nonnegative, require_positive, ModelError};
use crate::filter::StateSpaceModel;
use crate::transforms::isotropic_step_into;

#[derive(Debug, Clone, PartialEq)]
pub struct DiskModel {
    pub width: usize,
    pub height: usize,
    pub radius: f64,
    /// Standard deviation of the simulated (true) random walk, per axis.
    pub sigma_x: f64,
    /// Standard deviation of the filter's transition density, per axis.
    pub sigma_d: f64,
    /// Pixel noise standard deviation.
    pub sigma_nu: f64,
    /// Simulated centers must stay at least this far from every image edge.
    pub margin: f64,
}

impl Default for DiskModel {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            radius: 16.0,
            sigma_x: 3.0,
            sigma_d: 5.0,
            sigma_nu: 0.25,
            margin: 20.0,
        }
    }
}

/// An observed image with the sums needed for fast likelihood evaluation.
#[derive(Debug, Clone)]
pub struct DiskFrame {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    /// `row_prefix[row * (width + 1) + k]` is the sum of the first `k` pixels of `row`.
    row_prefix: Vec<f64>,
    sum_sq: f64,
}

impl DiskFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), width * height, "image size mismatch");
        let mut row_prefix = Vec::with_capacity(height * (width + 1));
        for row in pixels.chunks_exact(width) {
            let mut acc = 0.0;
            row_prefix.push(0.0);
            for &p in row {
                acc += p;
                row_prefix.push(acc);
            }
        }
        let sum_sq = pixels.iter().map(|p| p * p).sum();
        Self {
            width,
            height,
            pixels,
            row_prefix,
            sum_sq,
        }
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn row_sum(&self, row: usize, first: usize, last: usize) -> f64 {
        let base = row * (self.width + 1);
        self.row_prefix[base + last + 1] - self.row_prefix[base + first]
    }
}

impl DiskModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.width == 0 || self.height == 0 {
            return Err(ModelError::InvalidParameter {
                name: "image_size",
                reason: "must be positive".into(),
            });
        }
        require_positive("radius", self.radius)?;
        require_nonnegative("sigma_x", self.sigma_x)?;
        require_positive("sigma_d", self.sigma_d)?;
        require_nonnegative("sigma_nu", self.sigma_nu)?;
        require_nonnegative("margin", self.margin)
    }

    /// Image center, where simulated disks start.
    pub fn start(&self) -> [f64; 2] {
        [self.width as f64 / 2.0, self.height as f64 / 2.0]
    }

    #[inline]
    fn inside(&self, col: f64, row: f64, center: &[f64]) -> bool {
        let dx = col - center[0];
        let dy = row - center[1];
        dx * dx + dy * dy <= self.radius * self.radius
    }

    /// Inclusive column range of disk pixels in `row`, clipped to the image.
    fn row_span(&self, row: usize, center: &[f64]) -> Option<(usize, usize)> {
        let y = row as f64;
        let dy = y - center[1];
        let r2 = self.radius * self.radius;
        if dy * dy > r2 {
            return None;
        }
        let half = (r2 - dy * dy).sqrt();
        let mut lo = (center[0] - half).ceil();
        let mut hi = (center[0] + half).floor();
        // sqrt rounding can misplace an edge pixel by one; settle against the exact predicate.
        if self.inside(lo - 1.0, y, center) {
            lo -= 1.0;
        } else if !self.inside(lo, y, center) {
            lo += 1.0;
        }
        if self.inside(hi + 1.0, y, center) {
            hi += 1.0;
        } else if !self.inside(hi, y, center) {
            hi -= 1.0;
        }
        let lo = lo.max(0.0);
        let hi = hi.min(self.width as f64 - 1.0);
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    fn rows(&self, center: &[f64]) -> std::ops::RangeInclusive<usize> {
        let top = (center[1] - self.radius).ceil().max(0.0);
        let bottom = (center[1] + self.radius).floor().min(self.height as f64 - 1.0);
        if top > bottom || !top.is_finite() || !bottom.is_finite() {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        top as usize..=bottom as usize
    }

    /// Binary scene image, row-major.
    pub fn render(&self, center: &[f64]) -> Vec<f64> {
        let mut img = vec![0.0; self.width * self.height];
        for (row, line) in img.chunks_exact_mut(self.width).enumerate() {
            for (col, px) in line.iter_mut().enumerate() {
                if self.inside(col as f64, row as f64, center) {
                    *px = 1.0;
                }
            }
        }
        img
    }

    /// Number of image pixels covered by a disk at `center`.
    pub fn pixel_count(&self, center: &[f64]) -> usize {
        self.rows(center)
            .filter_map(|row| self.row_span(row, center))
            .map(|(lo, hi)| hi - lo + 1)
            .sum()
    }

    /// Rendered scene plus i.i.d. `N(0, sigma_nu^2)` pixel noise.
    pub fn observe(&self, center: &[f64], rng: &mut dyn RngCore) -> DiskFrame {
        let mut img = self.render(center);
        if self.sigma_nu > 0.0 {
            for px in &mut img {
                let z: f64 = StandardNormal.sample(rng);
                *px += self.sigma_nu * z;
            }
        }
        DiskFrame::new(self.width, self.height, img)
    }

    /// `-sum_r (I(r) - m(r; center))^2 / (2 sigma_nu^2)` over the full image.
    pub fn log_likelihood(&self, frame: &DiskFrame, center: &[f64]) -> f64 {
        assert_eq!((frame.width, frame.height), (self.width, self.height));
        let mut covered = 0.0;
        let mut count = 0usize;
        for row in self.rows(center) {
            if let Some((lo, hi)) = self.row_span(row, center) {
                covered += frame.row_sum(row, lo, hi);
                count += hi - lo + 1;
            }
        }
        let sse = frame.sum_sq - 2.0 * covered + count as f64;
        if self.sigma_nu == 0.0 {
            // Noise-free limit: only an exact template match is possible.
            return if sse == 0.0 { 0.0 } else { f64::NEG_INFINITY };
        }
        -sse / (2.0 * self.sigma_nu * self.sigma_nu)
    }
}

impl StateSpaceModel for DiskModel {
    type Observation = DiskFrame;

    fn state_dim(&self) -> usize {
        2
    }

    fn initial_state(&self) -> Vec<f64> {
        self.start().to_vec()
    }

    fn transform(&self, u: &[f64], prev: &[f64], out: &mut [f64]) {
        isotropic_step_into(u, prev, self.sigma_d, out);
    }

    fn log_likelihood(&self, y: &DiskFrame, x: &[f64]) -> f64 {
        DiskModel::log_likelihood(self, y, x)
    }

    fn simulate_transition(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        x.iter()
            .map(|&c| {
                let z: f64 = StandardNormal.sample(rng);
                c + self.sigma_x * z
            })
            .collect()
    }

    fn simulate_observation(&self, x: &[f64], rng: &mut dyn RngCore) -> DiskFrame {
        self.observe(x, rng)
    }

    fn accepts_truth(&self, x: &[f64]) -> bool {
        let m = self.margin;
        (m..=self.width as f64 - m).contains(&x[0]) && (m..=self.height as f64 - m).contains(&x[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_count(model: &DiskModel, center: &[f64]) -> usize {
        model.render(center).iter().filter(|&&p| p == 1.0).count()
    }

    #[test]
    fn center_and_boundary_pixels() {
        let m = DiskModel::default();
        let img = m.render(&[64.0, 64.0]);
        assert_eq!(img[64 * 128 + 64], 1.0);
        assert_eq!(img[64 * 128 + 80], 1.0); // distance exactly 16
        assert_eq!(img[64 * 128 + 81], 0.0);
        let shifted = m.render(&[64.0 - 0.001, 64.0]);
        assert_eq!(shifted[64 * 128 + 80], 0.0); // distance 16.001
    }

    #[test]
    fn integer_centers_cover_the_same_count() {
        let m = DiskModel::default();
        let base = brute_count(&m, &[64.0, 64.0]);
        assert_eq!(base, 797);
        for c in [[40.0, 50.0], [30.0, 90.0], [100.0, 100.0]] {
            assert_eq!(brute_count(&m, &c), base);
        }
    }

    #[test]
    fn spans_match_rendering() {
        let m = DiskModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            // Include centers near and beyond the edges to exercise clipping.
            let c = [rng.random::<f64>() * 170.0 - 20.0, rng.random::<f64>() * 170.0 - 20.0];
            assert_eq!(m.pixel_count(&c), brute_count(&m, &c), "{c:?}");
        }
        for c in [[64.0, 64.0], [64.5, 63.5], [10.0, 0.0], [0.0, 0.0]] {
            assert_eq!(m.pixel_count(&c), brute_count(&m, &c), "{c:?}");
        }
    }

    fn full_sum_log_likelihood(m: &DiskModel, frame: &DiskFrame, c: &[f64]) -> f64 {
        let tmpl = m.render(c);
        let sse: f64 = frame.pixels().iter().zip(&tmpl).map(|(i, t)| (i - t) * (i - t)).sum();
        -sse / (2.0 * m.sigma_nu * m.sigma_nu)
    }

    #[test]
    fn fast_likelihood_matches_full_image_sum() {
        let m = DiskModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let frame = m.observe(&[60.3, 70.9], &mut rng);
        for _ in 0..100 {
            let c = [rng.random::<f64>() * 140.0 - 6.0, rng.random::<f64>() * 140.0 - 6.0];
            let fast = m.log_likelihood(&frame, &c);
            let slow = full_sum_log_likelihood(&m, &frame, &c);
            assert!((fast - slow).abs() < 1e-8 * slow.abs().max(1.0), "{fast} {slow}");
        }
    }

    #[test]
    fn noiseless_truth_is_zero_and_far_is_double_count() {
        let m = DiskModel {
            sigma_nu: 0.25,
            ..Default::default()
        };
        let c = [50.0, 50.0];
        let frame = DiskFrame::new(128, 128, m.render(&c));
        assert_eq!(m.log_likelihood(&frame, &c), 0.0);
        let far = [100.0, 100.0];
        let count = brute_count(&m, &c) as f64;
        let expected = -2.0 * count / (2.0 * 0.25 * 0.25);
        assert_eq!(m.log_likelihood(&frame, &far), expected);
    }

    #[test]
    fn symmetric_in_candidate_and_truth() {
        let m = DiskModel::default();
        let a = [50.2, 61.7];
        let b = [55.9, 58.1];
        let fa = DiskFrame::new(128, 128, m.render(&a));
        let fb = DiskFrame::new(128, 128, m.render(&b));
        assert_eq!(m.log_likelihood(&fa, &b), m.log_likelihood(&fb, &a));
        assert!(m.log_likelihood(&fa, &b) < 0.0);
    }

    #[test]
    fn zero_noise_observation_is_render() {
        let m = DiskModel {
            sigma_nu: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(m.observe(&[64.0, 64.0], &mut rng).pixels(), &m.render(&[64.0, 64.0])[..]);
    }

    #[test]
    fn margin_check() {
        let m = DiskModel::default();
        assert!(m.accepts_truth(&[64.0, 64.0]));
        assert!(m.accepts_truth(&[20.0, 108.0]));
        assert!(!m.accepts_truth(&[19.9, 64.0]));
        assert!(!m.accepts_truth(&[64.0, 108.5]));
    }
}
