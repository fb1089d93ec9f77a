//! Comparisons of the oracles against the production crate.

use crate::gain_brute::{brute_gain, BruteLayout};
use crate::parity::{closed_form_parity, ghz_offset};
use crate::spam_tree::{forward_spam_tree, lost_atom_p00, BellStats, TreeSpam};
use crate::stabilizer::{bell_states, enumerate_all, global_orbit_of_one_one, swap_symmetric, Pauli};
use num_complex::Complex64 as C;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use tweezer_clock::analysis::{correct_parity_contrast, measurement_correct, state_prep_correct, SpamModel};
use tweezer_clock::benchmarking::{all_stabilizer_states, enumerate_symmetric_stabilizers, single_qubit_cliffords};
use tweezer_clock::gain::{CascadeLayout, ContrastModel, GainProblem};
use tweezer_clock::statevec::ghz_state;

pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

/// Signs of the 15 positive Paulis on a state vector, rounded to -1, 0, 1.
fn signature_of(v: &[C]) -> Option<Vec<i8>> {
    (1..16u8)
        .map(|k| {
            let m = Pauli::from_letters(false, [k >> 2, k & 3]).matrix();
            let e: C = (0..4).map(|i| v[i].conj() * (0..4).map(|j| m[i][j] * v[j]).sum::<C>()).sum();
            let r = e.re.round();
            ((e.re - r).abs() < 1e-9 && e.im.abs() < 1e-9).then_some(r as i8)
        })
        .collect()
}

pub fn stabilizer_census() -> Vec<Outcome> {
    let oracle_all = enumerate_all();
    let oracle_all_sig: BTreeSet<Vec<i8>> = oracle_all.iter().map(|s| s.signature()).collect();
    let core_all: Option<BTreeSet<Vec<i8>>> =
        all_stabilizer_states(&single_qubit_cliffords()).iter().map(|v| signature_of(v)).collect();
    let sym: BTreeSet<Vec<i8>> = {
        let orbit = global_orbit_of_one_one();
        swap_symmetric(&oracle_all).into_iter().filter(|s| orbit.contains(s)).map(|s| s.signature()).collect()
    };
    let core_sym: Option<BTreeSet<Vec<i8>>> =
        enumerate_symmetric_stabilizers().map(|s| s.states.iter().map(|v| signature_of(v)).collect()).ok().flatten();
    let bells = bell_states().iter().all(|b| oracle_all.contains(b));
    vec![
        outcome(
            "stabilizer states",
            oracle_all.len() == 60 && core_all.as_ref() == Some(&oracle_all_sig),
            format!("oracle {}, production {}", oracle_all.len(), core_all.map_or(0, |s| s.len())),
        ),
        outcome(
            "symmetric orbit of |11>",
            sym.len() == 12 && core_sym.as_ref() == Some(&sym),
            format!("oracle {}, production {}", sym.len(), core_sym.map_or(0, |s| s.len())),
        ),
        outcome("Bell states are stabilizer states", bells, "4 of 4".into()),
    ]
}

fn tree(k: f64) -> TreeSpam {
    TreeSpam { f0: 0.99997, f1: 0.99995, b: 0.9989, eps_l: 0.0027 * k, eps_d: 0.0037 * k }
}

/// Largest deviation after pushing ideal Phi+ statistics through the tree and
/// back through the production corrections.
pub fn spam_residual(k: f64) -> f64 {
    let t = tree(k);
    let truth = BellStats { probs: [0.5, 0.0, 0.0, 0.5], contrast: 1.0 };
    let raw = forward_spam_tree(&truth, &t);
    let spam = SpamModel { f0: t.f0, f1: t.f1, b: t.b, eps_l: t.eps_l, eps_d: t.eps_d };
    let m = measurement_correct(&raw.probs, &spam).expect("valid spam").unclipped;
    let c = correct_parity_contrast(raw.contrast, 2, &spam);
    let p = state_prep_correct(m[0], m[3], c, &spam).expect("small errors");
    [(p.p00 - 0.5).abs(), (p.p11 - 0.5).abs(), (p.contrast - 1.0).abs()].into_iter().fold(0.0, f64::max)
}

pub fn spam_tree() -> Vec<Outcome> {
    let exact = spam_residual(0.0);
    let (r1, r2) = (spam_residual(1.0), spam_residual(2.0));
    let ratio = r2 / r1;
    let t = tree(1.0);
    let lost = lost_atom_p00(&t) / (2.0 * t.eps_l * (1.0 - t.eps_l - t.eps_d));
    vec![
        outcome("readout correction inverts the tree", exact < 1e-12, format!("residual {exact:.1e}")),
        outcome(
            "preparation correction is first order",
            r1 < 1e-4 && (2.5..5.5).contains(&ratio),
            format!("residual {r1:.2e} at the apparatus eps, ratio {ratio:.2} at 2 eps"),
        ),
        outcome(
            "lost-atom weight on P00",
            (lost - (PI / 8.0).cos().powi(2)).abs() < 1e-12,
            format!("{lost:.6} vs cos^2(pi/8)"),
        ),
    ]
}

pub fn parity_fringes() -> Vec<Outcome> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for j in 0..7 {
            let phi = 0.37 * j as f64 - 1.1;
            let mut s = ghz_state(n);
            let atoms: Vec<usize> = (0..n).collect();
            s.apply_rotation(&atoms, PI / 2.0, phi).expect("rotation");
            let p = s.parity(&atoms).expect("parity");
            worst = worst.max((p - closed_form_parity(n, 1.0, phi, ghz_offset(n))).abs());
        }
    }
    vec![outcome("GHZ parity closed form", worst < 1e-12, format!("max deviation {worst:.1e} for N = 1..6"))]
}

pub fn small_gains() -> Vec<Outcome> {
    let cases: [(Vec<usize>, Vec<usize>, Vec<f64>); 3] = [
        (vec![1, 2], vec![2, 2], vec![1.0, 1.0]),
        (vec![1, 2, 4], vec![2, 2, 2], vec![0.99, 0.97, 0.9]),
        (vec![1, 2, 4], vec![1, 3, 2], vec![1.0, 0.95, 0.8]),
    ];
    let mut worst = 0.0f64;
    let mut text = Vec::new();
    for (sizes, copies, contrasts) in cases {
        let layout = CascadeLayout::new(sizes.clone(), copies.clone()).expect("layout");
        let brute = BruteLayout { sizes, copies, x_copies: layout.x_copies.clone(), contrasts: contrasts.clone() };
        let b = brute_gain(&brute, contrasts[0], 0.7, 2000);
        let p = GainProblem::new(layout, ContrastModel::PerSize { values: contrasts }, 0.7);
        let g = p.estimate_gain().map(|r| r.gain).unwrap_or(f64::NAN);
        let rel = ((g - b) / b).abs();
        worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
        text.push(format!("{b:.5}/{g:.5}"));
    }
    vec![outcome("small-layout gain", worst < 1e-3, format!("brute/production {}", text.join(", ")))]
}

pub fn all() -> Vec<Outcome> {
    let mut v = stabilizer_census();
    v.extend(spam_tree());
    v.extend(parity_fringes());
    v.extend(small_gains());
    v
}
