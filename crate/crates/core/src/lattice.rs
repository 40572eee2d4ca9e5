//! Shifted Korobov lattice rules.
//!
//! A rank-1 Korobov rule with `n` points and generator `a` in `s` dimensions
//! places point `i` (zero-based) at
//!
//! ```text
//! U_i = (i/n * (1, a, a^2, ..., a^(s-1)) + shift) mod 1
//! ```
//!
//! The multipliers `a^k mod n` are kept as exact integers so the unshifted
//! lattice carries no floating-point drift; the only rounding happens when
//! the integer residue is divided by `n` and the shift is added.

use rand::Rng;
use thiserror::Error;

/// Smallest tabulated `log2 n`.
pub const MIN_LOG2_N: u32 = 4;
/// Largest tabulated `log2 n`.
pub const MAX_LOG2_N: u32 = 21;
/// Largest state dimension covered by the generator table.
pub const MAX_TABLE_DIM: usize = 32;
/// State dimensions up to this value use the low-dimension column.
pub const LOW_BAND_MAX_DIM: usize = 8;

/// Generators indexed by `log2 n - MIN_LOG2_N`: `(low band, high band)`.
const GENERATORS: [(u64, u64); 18] = [
    (3, 3),
    (5, 5),
    (11, 5),
    (13, 11),
    (25, 75),
    (55, 51),
    (43, 139),
    (259, 519),
    (307, 1081),
    (699, 1289),
    (2087, 2961),
    (7243, 2149),
    (11035, 21553),
    (27891, 27383),
    (18373, 3597),
    (21643, 120079),
    (201579, 172565),
    (431119, 232501),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error(
        "unsupported sample count n={n}: n must be a power of two 2^k with valid log2 N values \
         {MIN_LOG2_N}..={MAX_LOG2_N} (n = 16..=2097152)"
    )]
    UnsupportedSampleCount { n: usize },
    #[error("unsupported dimension {dims}: generator table covers dimensions 1..={MAX_TABLE_DIM}")]
    UnsupportedDimension { dims: usize },
    #[error("invalid generator a={a} for n={n}: need 1 <= a < n and gcd(a, n) = 1")]
    InvalidGenerator { n: usize, a: u64 },
    #[error("shift has {got} components, rule has dimension {expected}")]
    ShiftDimension { expected: usize, got: usize },
    #[error("shift component {value} outside [0, 1)")]
    ShiftOutOfRange { value: f64 },
    #[error("point index {index} out of range for n={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("time step {t} out of range for a schedule of {steps} steps")]
    StepOutOfRange { t: usize, steps: usize },
    #[error("schedule has n={schedule} but rule has n={rule}")]
    ScheduleMismatch { schedule: usize, rule: usize },
}

/// Which column of the generator table a state dimension falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionBand {
    /// Dimensions 1..=8.
    Low,
    /// Dimensions 9..=32.
    High,
}

impl DimensionBand {
    pub fn for_dim(state_dim: usize) -> Result<Self, LatticeError> {
        match state_dim {
            1..=LOW_BAND_MAX_DIM => Ok(Self::Low),
            d if d <= MAX_TABLE_DIM => Ok(Self::High),
            d => Err(LatticeError::UnsupportedDimension { dims: d }),
        }
    }
}

/// Read-only view of the tabulated generators.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeneratorTable;

impl GeneratorTable {
    /// All `(log2 n, band, a)` entries.
    pub fn entries(&self) -> impl Iterator<Item = (u32, DimensionBand, u64)> {
        GENERATORS.iter().enumerate().flat_map(|(k, &(low, high))| {
            let log2 = MIN_LOG2_N + k as u32;
            [(log2, DimensionBand::Low, low), (log2, DimensionBand::High, high)]
        })
    }

    pub fn get(&self, log2_n: u32, band: DimensionBand) -> Option<u64> {
        if !(MIN_LOG2_N..=MAX_LOG2_N).contains(&log2_n) {
            return None;
        }
        let (low, high) = GENERATORS[(log2_n - MIN_LOG2_N) as usize];
        Some(match band {
            DimensionBand::Low => low,
            DimensionBand::High => high,
        })
    }
}

/// Returns `log2 n` when `n` is a tabulated power of two.
pub fn tabulated_log2(n: usize) -> Option<u32> {
    if n.is_power_of_two() {
        let k = n.trailing_zeros();
        (MIN_LOG2_N..=MAX_LOG2_N).contains(&k).then_some(k)
    } else {
        None
    }
}

/// Looks up the generator for `n` points in a `state_dim`-dimensional state space.
pub fn generator_for(n: usize, state_dim: usize) -> Result<u64, LatticeError> {
    let log2 = tabulated_log2(n).ok_or(LatticeError::UnsupportedSampleCount { n })?;
    if state_dim == 0 {
        return Err(LatticeError::UnsupportedDimension { dims: 0 });
    }
    let band = DimensionBand::for_dim(state_dim)?;
    Ok(GeneratorTable.get(log2, band).expect("log2 checked above"))
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A shifted Korobov lattice rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRule {
    n: usize,
    generator: u64,
    shift: Vec<f64>,
    /// `a^k mod n` for `k = 0..dims`.
    multipliers: Vec<u64>,
}

impl LatticeRule {
    /// Builds a rule with an explicit generator. Any `n >= 1` is accepted as
    /// long as `gcd(a, n) = 1`; for `n = 1` the only valid generator is 1.
    pub fn new(n: usize, generator: u64, dims: usize, shift: Vec<f64>) -> Result<Self, LatticeError> {
        if n == 0 {
            return Err(LatticeError::UnsupportedSampleCount { n });
        }
        if dims == 0 {
            return Err(LatticeError::UnsupportedDimension { dims });
        }
        let n64 = n as u64;
        let generator_ok = if n == 1 {
            generator == 1
        } else {
            (1..n64).contains(&generator) && gcd(generator, n64) == 1
        };
        if !generator_ok {
            return Err(LatticeError::InvalidGenerator { n, a: generator });
        }
        if shift.len() != dims {
            return Err(LatticeError::ShiftDimension {
                expected: dims,
                got: shift.len(),
            });
        }
        if let Some(&value) = shift.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(LatticeError::ShiftOutOfRange { value });
        }
        let mut multipliers = Vec::with_capacity(dims);
        let mut power = 1 % n64;
        for _ in 0..dims {
            multipliers.push(power);
            power = (power * (generator % n64)) % n64;
        }
        Ok(Self {
            n,
            generator,
            shift,
            multipliers,
        })
    }

    /// Builds a rule using the tabulated generator for `(n, dims)`.
    pub fn from_table(n: usize, dims: usize, shift: Vec<f64>) -> Result<Self, LatticeError> {
        let a = generator_for(n, dims)?;
        Self::new(n, a, dims, shift)
    }

    /// Same rule with zero shift.
    pub fn unshifted(n: usize, generator: u64, dims: usize) -> Result<Self, LatticeError> {
        Self::new(n, generator, dims, vec![0.0; dims])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    pub fn dims(&self) -> usize {
        self.multipliers.len()
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Returns a copy of this rule with a different shift.
    pub fn with_shift(&self, shift: Vec<f64>) -> Result<Self, LatticeError> {
        Self::new(self.n, self.generator, self.dims(), shift)
    }

    /// Integer residues `(index * a^k) mod n` of the unshifted point.
    pub fn residues(&self, index: usize) -> impl Iterator<Item = u64> + '_ {
        let i = index as u64;
        self.multipliers.iter().map(move |&m| (i * m) % self.n as u64)
    }

    /// Writes point `index` (zero-based) into `out`.
    ///
    /// Panics if `index >= n` or `out.len() != dims`.
    pub fn point_into(&self, index: usize, out: &mut [f64]) {
        assert!(index < self.n, "point index {index} out of range for n={}", self.n);
        assert_eq!(out.len(), self.dims());
        let n = self.n as f64;
        for ((slot, residue), shift) in out.iter_mut().zip(self.residues(index)).zip(&self.shift) {
            *slot = wrap_unit(residue as f64 / n + shift);
        }
    }

    /// Point `index` (zero-based).
    pub fn point(&self, index: usize) -> Result<Vec<f64>, LatticeError> {
        if index >= self.n {
            return Err(LatticeError::IndexOutOfRange { index, n: self.n });
        }
        let mut out = vec![0.0; self.dims()];
        self.point_into(index, &mut out);
        Ok(out)
    }

    /// All `n` points in index order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let mut p = vec![0.0; self.dims()];
                self.point_into(i, &mut p);
                p
            })
            .collect()
    }
}

/// `x mod 1` for `x` in `[0, 2)`, always landing in `[0, 1)`.
#[inline]
fn wrap_unit(x: f64) -> f64 {
    // x - 1 is exact on [1, 2).
    if x >= 1.0 {
        x - 1.0
    } else {
        x
    }
}

/// Draws a uniform shift on `[0, 1)^dims`, consuming exactly `dims` `f64`
/// draws from `rng`.
pub fn draw_shift<R: Rng + ?Sized>(dims: usize, rng: &mut R) -> Vec<f64> {
    (0..dims).map(|_| rng.random::<f64>()).collect()
}

/// Uniform random permutation of `0..n` by Fisher-Yates.
///
/// Consumes exactly `n - 1` bounded integer draws (`random_range(0..=i)` for
/// `i = n-1` down to `1`).
pub fn draw_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// One permutation per time step, drawn independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSchedule {
    n: usize,
    perms: Vec<Vec<usize>>,
}

impl PermutationSchedule {
    pub fn draw<R: Rng + ?Sized>(n: usize, steps: usize, rng: &mut R) -> Self {
        let perms = (0..steps).map(|_| draw_permutation(n, rng)).collect();
        Self { n, perms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.perms.len()
    }

    pub fn permutation(&self, t: usize) -> Option<&[usize]> {
        self.perms.get(t).map(Vec::as_slice)
    }
}

/// The proposal point for particle `i` at step `t`: lattice point `gamma_t(i)`
/// of `rule`, where `rule` already carries the shift drawn for step `t`.
pub fn lpf_point(
    t: usize,
    i: usize,
    rule: &LatticeRule,
    schedule: &PermutationSchedule,
) -> Result<Vec<f64>, LatticeError> {
    if schedule.n != rule.n {
        return Err(LatticeError::ScheduleMismatch {
            schedule: schedule.n,
            rule: rule.n,
        });
    }
    let perm = schedule.permutation(t).ok_or(LatticeError::StepOutOfRange {
        t,
        steps: schedule.steps(),
    })?;
    let &gamma = perm
        .get(i)
        .ok_or(LatticeError::IndexOutOfRange { index: i, n: rule.n })?;
    rule.point(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_lookups() {
        assert_eq!(generator_for(256, 2), Ok(25));
        assert_eq!(generator_for(1024, 10), Ok(139));
        assert_eq!(generator_for(32, 30), Ok(5));
        assert_eq!(generator_for(16, 8), Ok(3));
        assert_eq!(generator_for(1 << 21, 32), Ok(232501));
        assert_eq!(generator_for(1 << 21, 1), Ok(431119));
    }

    #[test]
    fn table_rejects_out_of_range() {
        assert!(matches!(
            generator_for(100, 2),
            Err(LatticeError::UnsupportedSampleCount { n: 100 })
        ));
        assert!(generator_for(8, 2).is_err());
        assert!(generator_for(1 << 22, 2).is_err());
        assert!(matches!(
            generator_for(64, 33),
            Err(LatticeError::UnsupportedDimension { dims: 33 })
        ));
        assert!(generator_for(64, 0).is_err());
        let msg = generator_for(100, 2).unwrap_err().to_string();
        assert!(msg.contains("4..=21"), "{msg}");
    }

    #[test]
    fn every_table_entry_is_coprime() {
        let entries: Vec<_> = GeneratorTable.entries().collect();
        assert_eq!(entries.len(), 36);
        for (log2, _, a) in entries {
            let n = 1u64 << log2;
            assert!(a >= 1 && a < n);
            assert_eq!(gcd(a, n), 1);
        }
    }

    #[test]
    fn diagonal_rule() {
        let rule = LatticeRule::unshifted(4, 1, 2).unwrap();
        assert_eq!(
            rule.points(),
            vec![vec![0.0, 0.0], vec![0.25, 0.25], vec![0.5, 0.5], vec![0.75, 0.75]]
        );
    }

    #[test]
    fn korobov_second_point() {
        let rule = LatticeRule::unshifted(256, 25, 2).unwrap();
        assert_eq!(rule.point(1).unwrap(), vec![1.0 / 256.0, 25.0 / 256.0]);
    }

    #[test]
    fn shift_wraps() {
        let rule = LatticeRule::new(2, 1, 1, vec![0.9]).unwrap();
        let pts = rule.points();
        assert_eq!(pts[0], vec![0.9]);
        assert!((pts[1][0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(LatticeRule::unshifted(16, 4, 2).is_err());
        assert!(LatticeRule::unshifted(16, 16, 2).is_err());
        assert!(LatticeRule::unshifted(16, 0, 2).is_err());
        assert!(LatticeRule::new(16, 3, 2, vec![0.1]).is_err());
        assert!(LatticeRule::new(16, 3, 1, vec![1.0]).is_err());
        assert!(LatticeRule::unshifted(1, 1, 3).is_ok());
        assert!(LatticeRule::unshifted(10, 1, 1).is_ok());
    }

    #[test]
    fn large_powers_do_not_overflow() {
        let rule = LatticeRule::from_table(1 << 21, 32, vec![0.0; 32]).unwrap();
        let p = rule.point((1 << 21) - 1).unwrap();
        assert!(p.iter().all(|x| (0.0..1.0).contains(x)));
        // a^k mod n computed by repeated multiplication matches modular exponentiation.
        let n = 1u128 << 21;
        for (k, m) in rule.multipliers.iter().enumerate() {
            let mut expect = 1u128;
            for _ in 0..k {
                expect = expect * 232501 % n;
            }
            assert_eq!(*m as u128, expect);
        }
    }

    #[test]
    fn point_index_out_of_range() {
        let rule = LatticeRule::unshifted(16, 3, 2).unwrap();
        assert!(matches!(rule.point(16), Err(LatticeError::IndexOutOfRange { .. })));
    }

    #[test]
    fn permutation_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(draw_permutation(1, &mut rng), vec![0]);
        assert!(draw_permutation(0, &mut rng).is_empty());
        let mut p = draw_permutation(50, &mut rng);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn lpf_point_uses_permuted_index() {
        let rule = LatticeRule::unshifted(256, 25, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let schedule = PermutationSchedule::draw(256, 3, &mut rng);
        let perm = schedule.permutation(1).unwrap();
        let i = perm.iter().position(|&g| g == 1).unwrap();
        assert_eq!(
            lpf_point(1, i, &rule, &schedule).unwrap(),
            vec![1.0 / 256.0, 25.0 / 256.0]
        );
        let j = perm.iter().position(|&g| g == 0).unwrap();
        assert_eq!(lpf_point(1, j, &rule, &schedule).unwrap(), vec![0.0, 0.0]);
        assert!(lpf_point(3, 0, &rule, &schedule).is_err());
        assert!(lpf_point(0, 256, &rule, &schedule).is_err());
    }
}
