use lpf_core::transforms::{gaussian_step, inv_normal_cdf};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// erfc by Taylor series of erf near zero and a continued fraction in the tail.
fn erfc_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_oracle(-x);
    }
    if x < 2.5 {
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        while term.abs() > 1e-18 * sum.abs() {
            k += 1.0;
            term *= -x * x / k;
            sum += term / (2.0 * k + 1.0);
        }
        1.0 - FRAC_2_SQRT_PI * sum
    } else {
        let mut f = x;
        for k in (1..=120).rev() {
            f = x + (k as f64 / 2.0) / f;
        }
        (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
    }
}

/// Upper tail probability `P(Z > z)`.
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc_oracle(z / std::f64::consts::SQRT_2)
}

#[test]
fn oracle_sanity() {
    assert!((upper_tail(0.0) - 0.5).abs() < 1e-16);
    assert!((upper_tail(1.959963984540054) - 0.025).abs() < 1e-14);
    assert!((upper_tail(3.0) / 1.3498980316300946e-3 - 1.0).abs() < 1e-13);
}

#[test]
fn quantile_round_trips_through_independent_cdf() {
    let m = 10_000;
    let (lo, hi) = (1e-7f64, 1.0 - 1e-7);
    let mut prev = f64::NEG_INFINITY;
    for k in 0..m {
        let u = lo + (hi - lo) * k as f64 / (m - 1) as f64;
        let z = inv_normal_cdf(u).unwrap();
        assert!(z > prev, "not increasing at u={u}");
        prev = z;
        // Compare the smaller tail, where relative accuracy matters.
        let (tail, target) = if u < 0.5 { (upper_tail(-z), u) } else { (upper_tail(z), 1.0 - u) };
        assert!((tail - target).abs() <= 1e-9 * target, "u={u}: {tail} vs {target}");
        assert!((tail - target).abs() < 1e-9);
    }
}

#[test]
fn gaussian_step_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = 100_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..m {
        let x = gaussian_step(&[rng.random()], &[1.0], &[2.0]).unwrap()[0];
        s1 += x;
        s2 += x * x;
    }
    let mean = s1 / m as f64;
    let var = s2 / m as f64 - mean * mean;
    assert!((mean - 1.0).abs() < 3.0 * 2.0 / (m as f64).sqrt());
    assert!((var - 4.0).abs() < 3.0 * 4.0 * (2.0 / m as f64).sqrt());
}

#[test]
fn gaussian_step_rejects_bad_input() {
    assert!(gaussian_step(&[1.5], &[0.0], &[1.0]).is_err());
    assert!(gaussian_step(&[1.0], &[0.0], &[1.0]).unwrap()[0].is_finite());
    assert!(gaussian_step(&[0.5, 0.5], &[0.0], &[1.0]).is_err());
    assert!(gaussian_step(&[0.5], &[0.0], &[0.0]).is_err());
    assert!(inv_normal_cdf(0.0).is_err());
    assert!(inv_normal_cdf(1.0).is_err());
    assert_eq!(gaussian_step(&[0.5, 0.5], &[3.0, -1.0], &[1.0, 7.0]).unwrap(), vec![3.0, -1.0]);
}

proptest! {
    #[test]
    fn quantile_is_odd(u in 1e-9f64..0.5) {
        let v = 1.0 - u;
        // 1 - v is exact, so both arguments are exact complements.
        let a = inv_normal_cdf(1.0 - v).unwrap();
        let b = inv_normal_cdf(v).unwrap();
        prop_assert!((a + b).abs() < 1e-9 * (1.0 + a.abs()), "{} {}", a, b);
    }
}
