//! Two-qubit stabilizer states in the symplectic picture.
//!
//! A Pauli is `i^r X^x Z^z` with bit masks over the two qubits (bit q for qubit q).
//! A state is the abelian group generated by two independent commuting Hermitian
//! Paulis; it is stored as its three non-identity elements in sorted order.

use num_complex::Complex64 as C;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pauli {
    pub r: u8,
    pub x: u8,
    pub z: u8,
}

impl Pauli {
    pub const I: Pauli = Pauli { r: 0, x: 0, z: 0 };

    pub fn mul(self, o: Pauli) -> Pauli {
        // X^x1 Z^z1 X^x2 Z^z2 = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2}
        let swaps = (self.z & o.x).count_ones() as u8;
        Pauli { r: (self.r + o.r + 2 * swaps) % 4, x: self.x ^ o.x, z: self.z ^ o.z }
    }

    pub fn commutes(self, o: Pauli) -> bool {
        ((self.x & o.z).count_ones() + (self.z & o.x).count_ones()) % 2 == 0
    }

    pub fn is_hermitian(self) -> bool {
        (self.r as u32 + (self.x & self.z).count_ones()) % 2 == 0
    }

    /// Hermitian Pauli from a sign and per-qubit letters (0 = I, 1 = X, 2 = Y, 3 = Z).
    pub fn from_letters(negative: bool, letters: [u8; 2]) -> Pauli {
        let mut p = Pauli { r: if negative { 2 } else { 0 }, x: 0, z: 0 };
        for (q, &l) in letters.iter().enumerate() {
            let f = match l {
                1 => Pauli { r: 0, x: 1 << q, z: 0 },
                2 => Pauli { r: 1, x: 1 << q, z: 1 << q },
                3 => Pauli { r: 0, x: 0, z: 1 << q },
                _ => Pauli::I,
            };
            p = p.mul(f);
        }
        p
    }

    /// Dense 4x4 matrix, basis index `2 * b0 + b1` (qubit 0 most significant).
    pub fn matrix(self) -> [[C; 4]; 4] {
        let mut m = [[C::new(0.0, 0.0); 4]; 4];
        let phase = C::i().powu(self.r as u32);
        for col in 0..4usize {
            let bits = |i: usize| [(i >> 1) & 1, i & 1];
            let b = bits(col);
            // Z acts first, then X
            let mut sign = 1.0;
            for q in 0..2 {
                if (self.z >> q) & 1 == 1 && b[q] == 1 {
                    sign = -sign;
                }
            }
            let mut out = b;
            for q in 0..2 {
                if (self.x >> q) & 1 == 1 {
                    out[q] ^= 1;
                }
            }
            m[2 * out[0] + out[1]][col] = phase * sign;
        }
        m
    }
}

/// Clifford gates given by their action on X_q and Z_q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    S(usize),
    Cz,
}

fn image(g: Gate, x_gen: bool, q: usize) -> Pauli {
    let x = |m: u8| Pauli { r: 0, x: m, z: 0 };
    let z = |m: u8| Pauli { r: 0, x: 0, z: m };
    let bit = 1u8 << q;
    match (g, x_gen) {
        (Gate::H(t), true) if t == q => z(bit),
        (Gate::H(t), false) if t == q => x(bit),
        (Gate::S(t), true) if t == q => Pauli { r: 1, x: bit, z: bit },
        (Gate::Cz, true) => Pauli { r: 0, x: bit, z: 1 << (1 - q) },
        (_, true) => x(bit),
        (_, false) => z(bit),
    }
}

/// `U P U^dagger` for a Clifford gate `U`.
pub fn conjugate(g: Gate, p: Pauli) -> Pauli {
    let mut out = Pauli { r: p.r, x: 0, z: 0 };
    for q in 0..2 {
        if (p.x >> q) & 1 == 1 {
            out = out.mul(image(g, true, q));
        }
    }
    for q in 0..2 {
        if (p.z >> q) & 1 == 1 {
            out = out.mul(image(g, false, q));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StabilizerState {
    /// The three non-identity group elements, sorted.
    pub elements: [Pauli; 3],
}

impl StabilizerState {
    pub fn from_generators(a: Pauli, b: Pauli) -> Option<Self> {
        if !a.is_hermitian() || !b.is_hermitian() || !a.commutes(b) {
            return None;
        }
        let ab = a.mul(b);
        if (a.x, a.z) == (0, 0) || (b.x, b.z) == (0, 0) || (ab.x, ab.z) == (0, 0) {
            return None;
        }
        let mut e = [a, b, ab];
        e.sort();
        Some(StabilizerState { elements: e })
    }

    pub fn apply(&self, g: Gate) -> Self {
        Self::from_generators(conjugate(g, self.elements[0]), conjugate(g, self.elements[1])).expect("Cliffords preserve groups")
    }

    pub fn swapped(&self) -> Self {
        let sw = |p: Pauli| {
            let f = |m: u8| ((m & 1) << 1) | ((m >> 1) & 1);
            Pauli { r: p.r, x: f(p.x), z: f(p.z) }
        };
        Self::from_generators(sw(self.elements[0]), sw(self.elements[1])).expect("swap preserves groups")
    }

    /// The state as the +1 eigenvector of the group projector, with the first
    /// nonzero amplitude real and positive.
    pub fn state_vector(&self) -> [C; 4] {
        let mut proj = [[C::new(0.0, 0.0); 4]; 4];
        for (i, row) in proj.iter_mut().enumerate() {
            row[i] = C::new(0.25, 0.0);
        }
        for p in &self.elements {
            let m = p.matrix();
            for i in 0..4 {
                for j in 0..4 {
                    proj[i][j] += m[i][j] * 0.25;
                }
            }
        }
        // the projector has rank one: take its largest column
        let col = (0..4)
            .max_by(|&a, &b| proj[a][a].re.total_cmp(&proj[b][b].re))
            .expect("four columns");
        let mut v: [C; 4] = std::array::from_fn(|i| proj[i][col]);
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let lead = v.iter().find(|c| c.norm() > 1e-9).copied().expect("nonzero projector");
        let phase = lead.conj() / lead.norm();
        for c in &mut v {
            *c = *c * phase / norm;
        }
        v
    }

    /// Expectation values `<psi|P|psi>` of all 15 non-identity Hermitian Paulis
    /// with positive sign: +1 or -1 on group members, 0 otherwise.
    pub fn signature(&self) -> Vec<i8> {
        letters()
            .map(|l| {
                let p = Pauli::from_letters(false, l);
                let mut n = p;
                n.r = (n.r + 2) % 4;
                if self.elements.contains(&p) {
                    1
                } else if self.elements.contains(&n) {
                    -1
                } else {
                    0
                }
            })
            .collect()
    }
}

fn letters() -> impl Iterator<Item = [u8; 2]> {
    (1..16u8).map(|k| [k >> 2, k & 3])
}

/// Every two-qubit stabilizer state, by exhaustive search over generator pairs.
pub fn enumerate_all() -> Vec<StabilizerState> {
    let paulis: Vec<Pauli> = letters().flat_map(|l| [Pauli::from_letters(false, l), Pauli::from_letters(true, l)]).collect();
    let mut set = BTreeSet::new();
    for &a in &paulis {
        for &b in &paulis {
            if let Some(s) = StabilizerState::from_generators(a, b) {
                set.insert(s);
            }
        }
    }
    set.into_iter().collect()
}

/// States left exactly unchanged by exchanging the qubits.
///
/// An invariant group only means SWAP eigenvalue +-1; `<SWAP> = (1 + <XX> + <YY> + <ZZ>) / 2`
/// drops the singlet.
pub fn swap_symmetric(all: &[StabilizerState]) -> Vec<StabilizerState> {
    let expect = |s: &StabilizerState, l: [u8; 2]| {
        let p = Pauli::from_letters(false, l);
        let mut n = p;
        n.r = (n.r + 2) % 4;
        if s.elements.contains(&p) {
            1
        } else if s.elements.contains(&n) {
            -1
        } else {
            0
        }
    };
    all.iter()
        .filter(|s| s.swapped() == **s && 1 + expect(s, [1, 1]) + expect(s, [2, 2]) + expect(s, [3, 3]) > 0)
        .cloned()
        .collect()
}

pub fn one_one() -> StabilizerState {
    StabilizerState::from_generators(Pauli::from_letters(true, [3, 0]), Pauli::from_letters(true, [0, 3])).expect("valid")
}

/// Orbit of |11> under Cliffords applied identically to both qubits and CZ.
pub fn global_orbit_of_one_one() -> Vec<StabilizerState> {
    let moves: [&[Gate]; 3] = [&[Gate::H(0), Gate::H(1)], &[Gate::S(0), Gate::S(1)], &[Gate::Cz]];
    let mut seen = BTreeSet::from([one_one()]);
    let mut frontier = vec![one_one()];
    while let Some(s) = frontier.pop() {
        for m in moves {
            let n = m.iter().fold(s.clone(), |acc, &g| acc.apply(g));
            if seen.insert(n.clone()) {
                frontier.push(n);
            }
        }
    }
    seen.into_iter().collect()
}

pub fn bell_states() -> [StabilizerState; 4] {
    let g = |sx: bool, sz: bool| {
        StabilizerState::from_generators(Pauli::from_letters(sx, [1, 1]), Pauli::from_letters(sz, [3, 3])).expect("valid")
    };
    [g(false, false), g(true, false), g(false, true), g(true, true)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let all = enumerate_all();
        assert_eq!(all.len(), 60);
        let sym = swap_symmetric(&all);
        assert_eq!(sym.len(), 15);
        let orbit = global_orbit_of_one_one();
        let both: Vec<_> = orbit.iter().filter(|s| sym.contains(s)).collect();
        assert_eq!(orbit.len(), 12);
        assert_eq!(both.len(), 12);
        for b in bell_states() {
            assert!(all.contains(&b));
        }
    }

    #[test]
    fn state_vectors_are_eigenvectors() {
        for s in enumerate_all() {
            let v = s.state_vector();
            for p in s.elements {
                let m = p.matrix();
                for i in 0..4 {
                    let mv: C = (0..4).map(|j| m[i][j] * v[j]).sum();
                    assert!((mv - v[i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn y_squares_to_identity() {
        let y = Pauli::from_letters(false, [2, 0]);
        assert_eq!(y.mul(y), Pauli::I);
        let x = Pauli::from_letters(false, [1, 0]);
        let z = Pauli::from_letters(false, [3, 0]);
        // ZX = -XZ and XZ = -iY
        assert_eq!(z.mul(x), Pauli { r: 2, ..x.mul(z) });
        assert_eq!(x.mul(z), Pauli { r: 0, ..y });
    }
}
