use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::f64::consts::PI;
use tweezer_clock::analysis::{
    bell_fidelity, gaussian_points, ghz_fidelity, ghz_overlap, measurement_correct, measurement_forward, mle_parity_fit,
    phase_from_quadratures, state_prep_correct, state_prep_forward, wls_fit, GaussianPoint, ParityPoint, SpamModel,
};
use tweezer_clock::{rng, Error};

fn spam() -> impl Strategy<Value = SpamModel> {
    (0.95f64..1.0, 0.95f64..1.0, 0.9f64..1.0, 0.0f64..0.02, 0.0f64..0.02).prop_map(|(f0, f1, b, eps_l, eps_d)| SpamModel {
        f0,
        f1,
        b,
        eps_l,
        eps_d,
    })
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1 << n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

fn synthetic(contrast: f64, freq: f64, phase: f64, phases: &[f64], shots: u64, seed: u64) -> Vec<ParityPoint> {
    let mut r = rng::stream(seed, 0);
    phases
        .iter()
        .map(|&x| {
            let q = (1.0 + contrast * (freq * x + phase).sin()) / 2.0;
            ParityPoint { phase: x, even: Binomial::new(shots, q).unwrap().sample(&mut r), total: shots }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn readout_correction_inverts_forward_model(s in spam(), n in 1usize..=3, seed in 0u64..1000) {
        let mut r = rng::stream(seed, 0);
        let mut p: Vec<f64> = (0..1 << n).map(|_| r.gen_range(0.01..1.0)).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        let raw = measurement_forward(&p, &s).unwrap();
        prop_assert!((raw.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let back = measurement_correct(&raw, &s).unwrap();
        for (a, b) in p.iter().zip(&back.unclipped) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn corrected_probabilities_are_normalized(s in spam(), raw in distribution(2)) {
        let c = measurement_correct(&raw, &s).unwrap();
        prop_assert!((c.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(c.probs.iter().all(|&x| x >= 0.0));
        prop_assert_eq!(c.clipped, c.unclipped.iter().any(|&x| x < 0.0));
    }

    #[test]
    fn preparation_correction_inverts_its_forward_model(
        s in spam(),
        p00 in 0.3f64..0.6,
        p11 in 0.3f64..0.6,
        c in 0.5f64..1.0,
    ) {
        let (a, b, k) = state_prep_forward(p00, p11, c, &s);
        let back = state_prep_correct(a, b, k, &s).unwrap();
        prop_assert!((back.p00 - p00).abs() < 1e-12 && (back.p11 - p11).abs() < 1e-12 && (back.contrast - c).abs() < 1e-12);
    }

    #[test]
    fn wls_recovers_noiseless_fringes(
        offset in -0.1f64..0.1,
        contrast in 0.2f64..1.0,
        phase in -3.0f64..3.0,
        freq in 1.0f64..4.0,
        detune in -0.02f64..0.02,
    ) {
        let pts: Vec<GaussianPoint> = (0..40)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / 40.0;
                GaussianPoint { phase: x, value: offset + contrast * (freq * x + phase).sin(), sigma: 0.01 }
            })
            .collect();
        let f = wls_fit(&pts, freq * (1.0 + detune)).unwrap();
        prop_assert!((f.contrast - contrast).abs() < 1e-5, "{f:?}");
        prop_assert!((f.frequency - freq).abs() < 1e-5);
        let dphi = (f.phase - phase + PI).rem_euclid(2.0 * PI) - PI;
        prop_assert!(dphi.abs() < 1e-4);
    }
}

#[test]
fn mle_error_bars_are_calibrated() {
    let phases: Vec<f64> = (0..20).map(|i| PI * i as f64 / 20.0).collect();
    let pulls: Vec<f64> = (0..200)
        .map(|k| {
            let f = mle_parity_fit(&synthetic(0.8, 2.0, 0.3, &phases, 200, k), 2.0).unwrap();
            (f.contrast - 0.8) / f.contrast_err
        })
        .collect();
    let mean = pulls.iter().sum::<f64>() / pulls.len() as f64;
    let sd = (pulls.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (pulls.len() - 1) as f64).sqrt();
    assert!(mean.abs() < 0.3, "pull mean {mean}");
    assert!((0.8..1.25).contains(&sd), "pull sd {sd}");
}

#[test]
fn mle_and_wls_agree_away_from_the_boundary() {
    let phases: Vec<f64> = (0..24).map(|i| 2.0 * PI * i as f64 / 24.0).collect();
    let data = synthetic(0.6, 1.0, -0.7, &phases, 2000, 5);
    let m = mle_parity_fit(&data, 1.0).unwrap();
    let w = wls_fit(&gaussian_points(&data), 1.0).unwrap();
    assert!((m.contrast - w.contrast).abs() < m.contrast_err, "{} vs {}", m.contrast, w.contrast);
    assert!((m.contrast - 0.6).abs() < 4.0 * m.contrast_err);
}

#[test]
fn fits_reject_thin_data() {
    let data = synthetic(0.8, 2.0, 0.0, &[0.0, 0.5, 1.0], 100, 1);
    assert!(matches!(mle_parity_fit(&data, 2.0), Err(Error::InvalidParameter(_))));
    let pts = vec![GaussianPoint { phase: 0.0, value: 0.0, sigma: 0.0 }; 8];
    assert!(wls_fit(&pts, 1.0).is_err());
}

#[test]
fn readout_errors() {
    assert!(measurement_correct(&[0.5, 0.4], &SpamModel::apparatus()).is_err());
    let bad = SpamModel { f0: 0.5, f1: 0.4, ..SpamModel::apparatus() };
    assert!(matches!(measurement_correct(&[0.5, 0.5], &bad), Err(Error::SingularSpam)));
    // a raw distribution outside the model's range gets clipped
    let s = SpamModel { f0: 0.95, f1: 0.95, b: 1.0, eps_l: 0.0, eps_d: 0.0 };
    let c = measurement_correct(&[0.999, 0.001], &s).unwrap();
    assert!(c.clipped && c.unclipped[1] < 0.0 && c.probs[1] == 0.0);
    let big = SpamModel { eps_l: 0.06, ..SpamModel::apparatus() };
    assert!(state_prep_correct(0.5, 0.5, 1.0, &big).is_err());
}

#[test]
fn fidelity_identities() {
    assert!((bell_fidelity(0.5, 0.5, 1.0) - 1.0).abs() < 1e-15);
    let f = ghz_fidelity(0.9, 0.8);
    assert!((ghz_overlap(f, 0.8) - 0.9).abs() < 1e-15);
    assert!((phase_from_quadratures(0.0, 1.0) - PI / 2.0).abs() < 1e-15);
    assert!((phase_from_quadratures(-1.0, 0.0) - PI).abs() < 1e-15);
}
