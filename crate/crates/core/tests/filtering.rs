use lpf_core::filter::{normalize_log_weights, propagate, reweight, run_filter, StepPoints};
use lpf_core::models::{DiskModel, ToyBinaryModel};
use lpf_core::{
    lpf_step, pf_step, FilterConfig, FilterError, LatticeRule, ParticleFilter, ParticleSet, Proposal, Resampling,
    StateSpaceModel,
};
use proptest::prelude::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// States are the raw uniform points; every state is equally likely.
struct Identity(usize);

impl StateSpaceModel for Identity {
    type Observation = ();
    fn state_dim(&self) -> usize {
        self.0
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.0]
    }
    fn transform(&self, u: &[f64], _prev: &[f64], out: &mut [f64]) {
        out.copy_from_slice(u);
    }
    fn log_likelihood(&self, _y: &(), _x: &[f64]) -> f64 {
        0.0
    }
    fn simulate_transition(&self, x: &[f64], _rng: &mut dyn RngCore) -> Vec<f64> {
        x.to_vec()
    }
    fn simulate_observation(&self, _x: &[f64], _rng: &mut dyn RngCore) {}
}

fn sorted_rows(flat: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = flat.chunks(dim).map(<[f64]>::to_vec).collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rows
}

#[test]
fn lpf_step_places_particles_on_the_shifted_rule() {
    let model = Identity(2);
    let rule = LatticeRule::from_table(64, 2, vec![0.0, 0.0]).unwrap();
    let particles = ParticleSet::replicate(&[0.0, 0.0], 64);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut replay = rng.clone();
    let next = lpf_step(&particles, &(), &model, Resampling::Multinomial, &rule, &mut rng, 1).unwrap();

    // Same consumption order: resampling first, then shift and permutation.
    Resampling::Multinomial.resample(particles.weights(), &mut replay);
    let step = StepPoints::draw(&rule, &mut replay);
    let expected = rule.with_shift(step.shift.clone()).unwrap().points().concat();
    assert_eq!(sorted_rows(next.flat_states(), 2), sorted_rows(&expected, 2));
    assert_eq!(next.flat_states(), &step.points[..]);
    assert_eq!(rng.next_u64(), replay.next_u64());
}

#[test]
fn filters_differ_only_in_point_source() {
    let model = DiskModel::default();
    let mut sim = ChaCha8Rng::seed_from_u64(1);
    let frame = model.observe(&[66.0, 63.0], &mut sim);
    let start = ParticleSet::replicate(&[64.0, 64.0], 32);
    let rule = LatticeRule::from_table(32, 2, vec![0.0; 2]).unwrap();

    for resampling in [Resampling::Multinomial, Resampling::Residual] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut replay = rng.clone();
        let pf = pf_step(&start, &frame, &model, resampling, &mut rng, 1).unwrap();
        let idx = resampling.resample(start.weights(), &mut replay);
        let points: Vec<f64> = (0..64).map(|_| replay.random::<f64>()).collect();
        let manual = reweight(&propagate(&start, &idx, &points, &model), &frame, &model, 1).unwrap();
        assert_eq!(pf, manual);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut replay = rng.clone();
        let lpf = lpf_step(&start, &frame, &model, resampling, &rule, &mut rng, 1).unwrap();
        let idx = resampling.resample(start.weights(), &mut replay);
        let step = StepPoints::draw(&rule, &mut replay);
        let manual = reweight(&propagate(&start, &idx, &step.points, &model), &frame, &model, 1).unwrap();
        assert_eq!(lpf, manual);
    }
}

#[test]
fn propagate_disk_quantile_example() {
    let model = DiskModel::default();
    let p = ParticleSet::replicate(&[40.0, 50.0], 1);
    let next = propagate(&p, &[0], &[0.975, 0.5], &model);
    assert!((next.state(0)[0] - 40.0 - 9.79982).abs() < 1e-5);
    assert_eq!(next.state(0)[1], 50.0);
}

#[test]
fn toy_lattice_always_keeps_two_particles_in_the_region() {
    let model = ToyBinaryModel::default();
    let rule = LatticeRule::unshifted(10, 1, 1).unwrap();
    let mut particles = ParticleSet::replicate(&[0.1], 10);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for t in 1..=2000 {
        particles = lpf_step(&particles, &true, &model, Resampling::Multinomial, &rule, &mut rng, t).unwrap();
        let inside = particles.states().filter(|x| x[0] < 0.2).count();
        assert_eq!(inside, 2, "t={t}");
    }
}

#[test]
fn single_toy_step_has_all_mass_in_region() {
    let model = ToyBinaryModel::default();
    for (proposal, generator) in [(Proposal::Pseudorandom, None), (Proposal::Lattice, Some(1))] {
        let mut cfg = FilterConfig::new(10, proposal, Resampling::Multinomial, 4);
        cfg.generator = generator;
        let mut f = ParticleFilter::new(&model, cfg, &[0.1]).unwrap();
        let p = match f.step(&true) {
            Ok(p) => p,
            // Plain sampling can miss the region entirely.
            Err(FilterError::DegenerateWeights { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let est = p.estimate(|x| vec![if x[0] < 0.2 { 1.0 } else { 0.0 }]);
        assert_eq!(est, vec![1.0]);
    }
}

#[test]
fn all_zero_likelihood_is_degenerate() {
    let model = ToyBinaryModel::default();
    let p = ParticleSet::replicate(&[0.9], 4);
    assert_eq!(reweight(&p, &true, &model, 7), Err(FilterError::DegenerateWeights { t: 7 }));
}

fn counts(indices: &[usize], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for &i in indices {
        c[i] += 1.0;
    }
    c
}

#[test]
fn resampling_is_unbiased() {
    let w = [0.05, 0.3, 0.125, 0.025, 0.5];
    let n = w.len();
    let reps = 10_000;
    for scheme in [Resampling::Multinomial, Resampling::Residual] {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut total = vec![0.0; n];
        for _ in 0..reps {
            for (t, c) in total.iter_mut().zip(counts(&scheme.resample(&w, &mut rng), n)) {
                *t += c;
            }
        }
        for j in 0..n {
            let mean = total[j] / reps as f64;
            let expect = n as f64 * w[j];
            // Multinomial standard error; residual sampling is tighter.
            let se = (n as f64 * w[j] * (1.0 - w[j]) / reps as f64).sqrt();
            assert!((mean - expect).abs() < 3.0 * se, "{scheme:?} j={j}: {mean} vs {expect}");
        }
    }
}

#[test]
fn residual_copies_are_deterministic() {
    let w = [0.5, 0.25, 0.25];
    let mut a = ChaCha8Rng::seed_from_u64(1);
    let mut b = ChaCha8Rng::seed_from_u64(2);
    let x = Resampling::Residual.resample(&[0.5, 0.25, 0.25, 0.0], &mut a);
    assert_eq!(x, vec![0, 0, 1, 2]);
    assert_eq!(
        counts(&Resampling::Residual.resample(&w, &mut b), 3).iter().filter(|&&c| c >= 1.0).count(),
        3
    );
}

#[test]
fn run_filter_reports_initial_frame() {
    let model = DiskModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let obs: Vec<_> = (0..3).map(|_| model.observe(&[64.0, 64.0], &mut rng)).collect();
    let cfg = FilterConfig::new(16, Proposal::Lattice, Resampling::Residual, 1);
    let means = run_filter(&model, &cfg, &[64.0, 64.0], &obs).unwrap();
    assert_eq!(means.len(), 3);
    assert_eq!(means[0], vec![64.0, 64.0]);
    let bad = FilterConfig::new(100, Proposal::Lattice, Resampling::Residual, 1);
    assert!(matches!(
        run_filter(&model, &bad, &[64.0, 64.0], &obs),
        Err(FilterError::Lattice(_))
    ));
}

proptest! {
    #[test]
    fn normalized_weights_sum_to_one(logs in proptest::collection::vec(-700.0f64..0.0, 1..64)) {
        let w = normalize_log_weights(&logs).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = logs.iter().map(|l| l - top + 3.0).collect();
        let w2 = normalize_log_weights(&shifted).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn resampled_indices_are_in_range(ws in proptest::collection::vec(0.0f64..1.0, 1..40), seed in any::<u64>()) {
        let total: f64 = ws.iter().sum();
        prop_assume!(total > 0.0);
        let w: Vec<f64> = ws.iter().map(|x| x / total).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for scheme in [Resampling::Multinomial, Resampling::Residual] {
            let idx = scheme.resample(&w, &mut rng);
            prop_assert_eq!(idx.len(), w.len());
            prop_assert!(idx.iter().all(|&i| w[i] > 0.0));
        }
    }
}
