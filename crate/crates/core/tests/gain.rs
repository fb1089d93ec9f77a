use proptest::prelude::*;
use std::f64::consts::PI;
use tweezer_clock::gain::{
    asymptotic_gain, copies_required, even_probability, threshold_search, CascadeLayout, ContrastModel, GainProblem, Knob, PriorMode,
};
use tweezer_clock::Error;

fn outcomes(l: &CascadeLayout) -> Vec<Vec<usize>> {
    let ranges: Vec<usize> = (0..l.sizes.len())
        .flat_map(|j| [l.x_copies[j], l.y_copies(j)])
        .filter(|&m| m > 0)
        .collect();
    let mut all = vec![vec![]];
    for m in ranges {
        all = all.into_iter().flat_map(|v| (0..=m).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    all
}

fn small_layout() -> impl Strategy<Value = CascadeLayout> {
    (1usize..=3, prop::collection::vec(1usize..=3, 3)).prop_map(|(m, c)| {
        let sizes: Vec<usize> = (0..m).map(|j| 1 << j).collect();
        CascadeLayout::new(sizes, c[..m].to_vec()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn likelihood_sums_to_one(l in small_layout(), phi in -PI..PI, f0 in 0.5f64..1.0) {
        let p = GainProblem::new(l.clone(), ContrastModel::PerQubitFidelity { f0 }, 0.7);
        let s: f64 = outcomes(&l).iter().map(|o| p.outcome_likelihood(o, phi).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_contrast_outcomes_are_binomial_halves(l in small_layout(), phi in -PI..PI) {
        let values = vec![0.0; l.sizes.len()];
        let p = GainProblem::new(l.clone(), ContrastModel::PerSize { values }, 0.7);
        let zero = vec![0; outcomes(&l)[0].len()];
        let copies: usize = l.copies.iter().sum();
        prop_assert!((p.outcome_likelihood(&zero, phi).unwrap() - 0.5f64.powi(copies as i32)).abs() < 1e-15);
    }

    #[test]
    fn gain_is_monotone_in_each_contrast(
        l in small_layout(),
        base in prop::collection::vec(0.3f64..0.9, 3),
        j in 0usize..3,
        bump in 0.01f64..0.1,
    ) {
        let m = l.sizes.len();
        let j = j % m;
        let lo = base[..m].to_vec();
        let mut hi = lo.clone();
        hi[j] += bump;
        let p = |v: Vec<f64>| GainProblem::new(l.clone(), ContrastModel::PerSize { values: v }, 0.7);
        let (a, b) = (p(lo.clone()), p(hi.clone()));
        // the cascade error falls with every contrast
        prop_assert!(b.exact_mse().unwrap() <= a.exact_mse().unwrap() * (1.0 + 1e-12));
        // the baseline also uses C(1), so the gain is monotone only in the larger sizes
        let (ga, gb) = (a.gain_fast().unwrap(), b.gain_fast().unwrap());
        prop_assert!(ga > 0.0);
        if l.sizes[j] > 1 {
            prop_assert!(gb >= ga * (1.0 - 1e-12), "{ga} -> {gb}");
        }
    }

    #[test]
    fn swapping_even_splits_leaves_gain_unchanged(c in prop::collection::vec(1usize..=2, 3), f0 in 0.9f64..1.0) {
        let copies: Vec<usize> = c.iter().map(|n| 2 * n).collect();
        let l = CascadeLayout::new(vec![1, 2, 4], copies).unwrap();
        let p = GainProblem::new(l.clone(), ContrastModel::PerQubitFidelity { f0 }, 0.7);
        let q = GainProblem::new(l.swapped(), ContrastModel::PerQubitFidelity { f0 }, 0.7);
        prop_assert!((p.gain_fast().unwrap() - q.gain_fast().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn posterior_of_no_signal_is_the_prior(width in 0.2f64..1.0) {
        let l = CascadeLayout::new(vec![1], vec![2]).unwrap();
        let p = GainProblem::new(l, ContrastModel::PerSize { values: vec![0.0] }, width);
        let (mean, var) = p.posterior_stats(&[1, 0]).unwrap();
        prop_assert!(mean.abs() < 1e-12);
        // truncation at pi shrinks the variance only for the widest priors
        prop_assert!(var <= width * width + 1e-12 && var > 0.9 * width * width);
    }
}

#[test]
fn likelihood_examples() {
    assert!((even_probability(4, 1.0, 0.0, false) - 1.0).abs() < 1e-15);
    assert!((even_probability(4, 1.0, 0.0, true) - 0.5).abs() < 1e-15);
    let l = CascadeLayout::uniform(3, 2).unwrap();
    let p = GainProblem::new(l, ContrastModel::Perfect, 0.7);
    // X copies at the fringe maximum are all even
    assert!((p.outcome_likelihood(&[1, 0, 1, 0, 1, 0], 0.0).unwrap() - 0.125).abs() < 1e-15);
}

#[test]
fn layout_invariants() {
    for m in 1..=5 {
        for n0 in 1..=9 {
            let l = CascadeLayout::uniform(m, n0).unwrap();
            assert_eq!(l.total_atoms(), n0 * ((1 << m) - 1));
            for j in 0..m {
                assert_eq!(l.x_copies[j] + l.y_copies(j), n0);
                assert!(l.x_copies[j] >= l.y_copies(j));
            }
        }
    }
    assert!(CascadeLayout::with_split(vec![1], vec![2], vec![3]).is_err());
    assert!(CascadeLayout::new(vec![], vec![]).is_err());
}

#[test]
fn copies_and_asymptotic_gain() {
    assert_eq!(copies_required(42).unwrap(), 6);
    assert_eq!(copies_required(1).unwrap(), 1);
    let g = asymptotic_gain(42);
    assert!((g - PI * PI * 42.0 / (64.0 * 42f64.ln())).abs() < 1e-12);
}

#[test]
fn perfect_cascade_beats_uncorrelated_atoms() {
    let p = GainProblem::new(CascadeLayout::uniform(3, 6).unwrap(), ContrastModel::Perfect, 0.7);
    let r = p.estimate_gain().unwrap();
    assert_eq!(r.n_atoms, 42);
    assert!(r.gain > 1.0);
    assert!((r.gain_db - 10.0 * r.gain.log10()).abs() < 1e-12);
    assert!((r.figure_of_merit - r.mse_correlated.sqrt() / 0.7).abs() < 1e-12);
}

#[test]
fn narrow_prior_gain_approaches_ghz_size() {
    // a single N-atom GHZ group with enough copies that the data dominate a 0.05 rad prior
    for (n, copies) in [(2usize, 1200usize), (4, 800)] {
        let l = CascadeLayout::new(vec![n], vec![copies]).unwrap();
        let g = GainProblem::new(l, ContrastModel::Perfect, 0.05).gain_fast().unwrap();
        assert!((g / n as f64 - 1.0).abs() < 0.10, "N = {n}: g = {g}");
    }
}

#[test]
fn wrapped_and_truncated_priors_agree_at_the_default_width() {
    let p = GainProblem::new(CascadeLayout::uniform(3, 6).unwrap(), ContrastModel::Perfect, 0.7);
    let w = GainProblem { prior_mode: PriorMode::Wrapped, ..p.clone() };
    let (a, b) = (p.gain_fast().unwrap(), w.gain_fast().unwrap());
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn monte_carlo_matches_enumeration() {
    let p = GainProblem::new(CascadeLayout::uniform(2, 3).unwrap(), ContrastModel::PerQubitFidelity { f0: 0.97 }, 0.7);
    let exact = p.exact_mse().unwrap();
    let (mc, se) = p.monte_carlo_mse(20_000, 3).unwrap();
    assert!((mc - exact).abs() < 3.0 * se, "{mc} +- {se} vs {exact}");
}

#[test]
fn threshold_brackets_are_checked() {
    let p = GainProblem::new(CascadeLayout::uniform(3, 6).unwrap(), ContrastModel::Perfect, 0.7);
    // the gain stays above 1 across this bracket
    assert!(matches!(threshold_search(&p, Knob::Fidelity, 0.99, 1.0), Err(Error::NonMonotone(..))));
    assert!(threshold_search(&p, Knob::Fidelity, 1.0, 0.9).is_err());
    let t = threshold_search(&p, Knob::Contrast { index: 2 }, 0.3, 1.0).unwrap();
    let g = |c: f64| {
        GainProblem::new(p.layout.clone(), ContrastModel::PerSize { values: vec![1.0, 1.0, c] }, 0.7).gain_fast().unwrap()
    };
    assert!(g(t - 2e-3) < 1.0 && g(t + 2e-3) > 1.0);
}

#[test]
fn invalid_problems_are_rejected() {
    let l = CascadeLayout::uniform(2, 2).unwrap();
    assert!(GainProblem::new(l.clone(), ContrastModel::Perfect, 0.0).estimate_gain().is_err());
    assert!(GainProblem::new(l.clone(), ContrastModel::PerSize { values: vec![1.0] }, 0.7).estimate_gain().is_err());
    assert!(GainProblem::new(l, ContrastModel::PerQubitFidelity { f0: 1.2 }, 0.7).estimate_gain().is_err());
}
