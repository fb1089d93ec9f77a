//! Forward probability tree for the Bell-pair preparation and readout.
//!
//! Each atom starts in |1> (probability 1 - eps_l - eps_d), decayed to |0>
//! (eps_d) or lost (eps_l). Every combination, including the second-order
//! ones, is propagated through a perfect circuit: global pi/2, CZ, global pi/4,
//! and for coherence a global analysis pi/2 at azimuth phi. A lost atom reads as
//! an empty site and leaves its partner with single-atom rotations only. Readout
//! then pushes out |0> with probability `b` and images with true-negative `f0`
//! and true-positive `f1`.

use num_complex::Complex64 as C;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSpam {
    pub f0: f64,
    pub f1: f64,
    pub b: f64,
    pub eps_l: f64,
    pub eps_d: f64,
}

/// Populations `[P00, P01, P10, P11]` (atom 0 first) and frequency-2 parity contrast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellStats {
    pub probs: [f64; 4],
    pub contrast: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Start {
    One,
    Zero,
    Lost,
}

type M2 = [[C; 2]; 2];

fn rot(theta: f64, phi: f64) -> M2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let mi = C::new(0.0, -1.0);
    [[C::new(c, 0.0), mi * C::from_polar(s, -phi)], [mi * C::from_polar(s, phi), C::new(c, 0.0)]]
}

fn apply1(m: &M2, v: [C; 2]) -> [C; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn apply_both(m: &M2, v: [C; 4]) -> [C; 4] {
    let mut out = [C::new(0.0, 0.0); 4];
    for i in 0..4 {
        for j in 0..4 {
            let (i0, i1, j0, j1) = (i >> 1, i & 1, j >> 1, j & 1);
            out[i] += m[i0][j0] * m[i1][j1] * v[j];
        }
    }
    out
}

fn basis(bit: usize) -> [C; 2] {
    if bit == 0 {
        [C::new(1.0, 0.0), C::new(0.0, 0.0)]
    } else {
        [C::new(0.0, 0.0), C::new(1.0, 0.0)]
    }
}

/// Probability that each atom reads 1 (occupied and bright) in each branch of
/// its measured bit, for a present atom, plus the empty-site value.
fn bright_given(bit: Option<usize>, s: &TreeSpam) -> f64 {
    match bit {
        Some(1) => s.f1,
        Some(_) => s.b * (1.0 - s.f0) + (1.0 - s.b) * s.f1,
        None => 1.0 - s.f0,
    }
}

/// Distribution over the true bits of each atom (None marks an empty site),
/// optionally after an analysis pulse at `phi`.
fn branch(a: Start, b: Start, phi: Option<f64>) -> Vec<([Option<usize>; 2], f64)> {
    let bit = |s: Start| if s == Start::One { 1 } else { 0 };
    let r1 = rot(PI / 2.0, 0.0);
    let r2 = rot(PI / 4.0, 0.0);
    match (a, b) {
        (Start::Lost, Start::Lost) => vec![([None, None], 1.0)],
        (Start::Lost, o) | (o, Start::Lost) => {
            let mut v = apply1(&r2, apply1(&r1, basis(bit(o))));
            if let Some(p) = phi {
                v = apply1(&rot(PI / 2.0, p), v);
            }
            let lost_first = a == Start::Lost;
            (0..2)
                .map(|k| (if lost_first { [None, Some(k)] } else { [Some(k), None] }, v[k].norm_sqr()))
                .collect()
        }
        _ => {
            let (x, y) = (basis(bit(a)), basis(bit(b)));
            let mut v = [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]];
            v = apply_both(&r1, v);
            v[3] = -v[3];
            v = apply_both(&r2, v);
            if let Some(p) = phi {
                v = apply_both(&rot(PI / 2.0, p), v);
            }
            (0..4).map(|k| ([Some(k >> 1), Some(k & 1)], v[k].norm_sqr())).collect()
        }
    }
}

fn starts(s: &TreeSpam) -> [(Start, f64); 3] {
    [(Start::One, 1.0 - s.eps_l - s.eps_d), (Start::Zero, s.eps_d), (Start::Lost, s.eps_l)]
}

/// Raw readout distribution of one branch.
fn readout(dist: &[([Option<usize>; 2], f64)], s: &TreeSpam) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (bits, p) in dist {
        let q: Vec<f64> = bits.iter().map(|b| bright_given(*b, s)).collect();
        for (k, o) in out.iter_mut().enumerate() {
            let (r0, r1) = (k >> 1, k & 1);
            let w0 = if r0 == 1 { q[0] } else { 1.0 - q[0] };
            let w1 = if r1 == 1 { q[1] } else { 1.0 - q[1] };
            *o += p * w0 * w1;
        }
    }
    out
}

/// Complex frequency-2 Fourier component of the raw parity over the analysis phase.
fn parity_component(a: Start, b: Start, s: &TreeSpam) -> C {
    let m = 32;
    (0..m)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / m as f64;
            let r = readout(&branch(a, b, Some(phi)), s);
            let parity = r[0] + r[3] - r[1] - r[2];
            C::from_polar(parity * 2.0 / m as f64, -2.0 * phi)
        })
        .sum()
}

/// Raw statistics produced by the tree when perfectly prepared pairs would show `truth`.
///
/// Branches with a wrong start are propagated through the perfect circuit; the
/// perfect-start branch contributes `truth` after readout.
pub fn forward_spam_tree(truth: &BellStats, s: &TreeSpam) -> BellStats {
    let mut probs = [0.0; 4];
    let ideal = parity_component(Start::One, Start::One, &TreeSpam { f0: 1.0, f1: 1.0, b: 1.0, ..*s });
    let axis = ideal / ideal.norm();
    let mut z = C::new(0.0, 0.0);
    for (a, pa) in starts(s) {
        for (b, pb) in starts(s) {
            let w = pa * pb;
            if a == Start::One && b == Start::One {
                let dist: Vec<([Option<usize>; 2], f64)> =
                    (0..4).map(|k| ([Some(k >> 1), Some(k & 1)], truth.probs[k])).collect();
                let r = readout(&dist, s);
                probs.iter_mut().zip(r).for_each(|(p, x)| *p += w * x);
                // a present atom's parity is scaled by its readout contrast
                let scale = (s.f1 - bright_given(Some(0), s)).powi(2);
                z += axis * (w * truth.contrast * scale);
            } else {
                let r = readout(&branch(a, b, None), s);
                probs.iter_mut().zip(r).for_each(|(p, x)| *p += w * x);
                z += parity_component(a, b, s) * w;
            }
        }
    }
    BellStats { probs, contrast: (z * axis.conj()).re }
}

/// Contribution weight of the one-lost-atom branches to P00 after a perfect circuit.
pub fn lost_atom_p00(s: &TreeSpam) -> f64 {
    let perfect = TreeSpam { f0: 1.0, f1: 1.0, b: 1.0, ..*s };
    let w = 2.0 * s.eps_l * (1.0 - s.eps_l - s.eps_d);
    w * readout(&branch(Start::Lost, Start::One, None), &perfect)[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apparatus() -> TreeSpam {
        TreeSpam { f0: 0.99997, f1: 0.99995, b: 0.9989, eps_l: 0.0027, eps_d: 0.0037 }
    }

    #[test]
    fn zero_error_is_identity() {
        let t = BellStats { probs: [0.47, 0.02, 0.03, 0.48], contrast: 0.9 };
        let s = TreeSpam { f0: 1.0, f1: 1.0, b: 1.0, eps_l: 0.0, eps_d: 0.0 };
        let m = forward_spam_tree(&t, &s);
        for k in 0..4 {
            assert!((m.probs[k] - t.probs[k]).abs() < 1e-12);
        }
        assert!((m.contrast - 0.9).abs() < 1e-12);
    }

    #[test]
    fn lost_branch_weight() {
        let s = apparatus();
        let expect = (PI / 8.0).cos().powi(2) * 2.0 * s.eps_l * (1.0 - s.eps_l - s.eps_d);
        assert!((lost_atom_p00(&s) - expect).abs() < 1e-15);
    }

    #[test]
    fn ideal_pair_is_bell() {
        let s = TreeSpam { f0: 1.0, f1: 1.0, b: 1.0, eps_l: 0.0, eps_d: 0.0 };
        let r = readout(&branch(Start::One, Start::One, None), &s);
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[3] - 0.5).abs() < 1e-12);
        assert!((parity_component(Start::One, Start::One, &s).norm() - 1.0).abs() < 1e-12);
        // a decayed atom halves the contrast and flips its sign
        let d = parity_component(Start::Zero, Start::One, &s);
        let i = parity_component(Start::One, Start::One, &s);
        assert!(((d * i.conj()).re + 0.5).abs() < 1e-12);
    }
}
