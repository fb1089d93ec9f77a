use proptest::prelude::*;
use std::f64::consts::PI;
use tweezer_clock::noise::{sample_trajectory, ClockPsd};
use tweezer_clock::statevec::{ghz_state, overlap, QuantumState};

fn angles() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((0usize..4, -PI..PI, -PI..PI), 1..12)
}

fn rotated(n: usize, ops: &[(usize, f64, f64)]) -> QuantumState {
    let mut s = QuantumState::new(n, 2, &vec![0; n]).unwrap();
    for &(a, theta, phi) in ops {
        s.apply_rotation(&[a % n], theta, phi).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_preserve_the_norm(n in 1usize..=4, ops in angles()) {
        let s = rotated(n, &ops);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((s.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_about_one_axis_compose(a in -PI..PI, b in -PI..PI, phi in -PI..PI) {
        let mut s = QuantumState::new(1, 2, &[0]).unwrap();
        s.apply_rotation(&[0], a, phi).unwrap();
        s.apply_rotation(&[0], b, phi).unwrap();
        let mut t = QuantumState::new(1, 2, &[0]).unwrap();
        t.apply_rotation(&[0], a + b, phi).unwrap();
        prop_assert!((overlap(&s, &t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_is_one_minus_twice_the_odd_weight(n in 1usize..=4, ops in angles(), mask in 1usize..16) {
        let s = rotated(n, &ops);
        let atoms: Vec<usize> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
        let p = s.parity(&atoms).unwrap();
        let odd: f64 = s
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| atoms.iter().filter(|&&a| s.digit(*i, a) == 1).count() % 2 == 1)
            .map(|(_, p)| p)
            .sum();
        prop_assert!((-1.0..=1.0).contains(&p));
        prop_assert!((p - (1.0 - 2.0 * odd)).abs() < 1e-12);
    }

    #[test]
    fn shots_are_reproducible_from_the_seed(n in 1usize..=3, ops in angles(), seed in 0u64..1000) {
        let s = rotated(n, &ops);
        prop_assert_eq!(s.measure_shots(50, seed), s.measure_shots(50, seed));
    }

    #[test]
    fn scaling_the_psd_scales_the_trajectory(k in 0.1f64..10.0, seed in 0u64..100) {
        let psd = ClockPsd::example();
        let a = sample_trajectory(&psd, 0.05, 2e4, seed).unwrap();
        let b = sample_trajectory(&psd.scaled(k), 0.05, 2e4, seed).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            prop_assert!((y - k.sqrt() * x).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn ghz_parity_flips_with_odd_size() {
    for n in 1..=5 {
        let s = ghz_state(n);
        let all: Vec<usize> = (0..n).collect();
        // |0..0> and |1..1> have equal weight; the second contributes (-1)^n
        let expect = if n % 2 == 0 { 1.0 } else { 0.0 };
        assert!((s.parity(&all).unwrap() - expect).abs() < 1e-12, "n = {n}");
    }
}

#[test]
fn shot_frequencies_follow_the_probabilities() {
    let mut s = QuantumState::new(1, 2, &[0]).unwrap();
    s.apply_rotation(&[0], 2.0 * (0.3f64).sqrt().asin(), 0.0).unwrap();
    let (even, total) = s.measure_shots(20_000, 11).even_parity_counts(&[0]);
    let p1 = 1.0 - even as f64 / total as f64;
    assert!((p1 - 0.3).abs() < 4.0 * (0.3f64 * 0.7 / 20_000.0).sqrt(), "{p1}");
}

#[test]
fn out_of_range_atoms_are_rejected() {
    let mut s = QuantumState::new(2, 2, &[0, 0]).unwrap();
    assert!(s.apply_rotation(&[2], 1.0, 0.0).is_err());
    assert!(s.parity(&[5]).is_err());
    assert!(QuantumState::new(2, 2, &[0]).is_err());
}
