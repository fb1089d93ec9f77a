//! Dense state vectors over registers of two- or three-level atoms.
//!
//! Basis ordering: atom 0 is the most significant digit, so for two qubits
//! the amplitude order is |00>, |01>, |10>, |11>. Level 2 is the Rydberg
//! state |r>.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Mat2, I, ONE, ZERO};
use crate::shots::{ShotMetadata, ShotRecord, ShotTable};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const RYDBERG: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    num_atoms: usize,
    levels: usize,
    amplitudes: Vec<C64>,
    /// Accumulated wall-clock time in seconds.
    pub global_time: f64,
    /// Atoms that decayed into the absorbing 3P2 manifold.
    leaked: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    ParityAllZ,
    /// Parity restricted to a subset of atoms.
    Parity(Vec<usize>),
    Population(Vec<usize>),
    Overlap(QuantumState),
}

/// Single-qubit rotation by `theta` about the equatorial axis at azimuth `phi`.
pub fn rotation_matrix(theta: f64, phi: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let e = C64::from_polar(1.0, phi);
    [
        [C64::new(c, 0.0), -I * e.conj() * s],
        [-I * e * s, C64::new(c, 0.0)],
    ]
}

pub fn phase_matrix(alpha: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, C64::from_polar(1.0, alpha)]]
}

/// Parse a bitstring such as "0110" or "1r" into level indices.
pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            'r' | 'R' | '2' => Ok(RYDBERG),
            other => Err(Error::InvalidParameter(format!("bad level symbol {other:?}"))),
        })
        .collect()
}

impl QuantumState {
    pub fn new(num_atoms: usize, levels: usize, bitstring: &[usize]) -> Result<Self> {
        if !(2..=3).contains(&levels) {
            return Err(Error::InvalidParameter(format!("levels must be 2 or 3, got {levels}")));
        }
        if bitstring.len() != num_atoms {
            return Err(Error::DimensionMismatch { expected: num_atoms, got: bitstring.len() });
        }
        if num_atoms > 12 {
            return Err(Error::InvalidParameter("registers above 12 atoms are not supported".into()));
        }
        let mut index = 0;
        for &b in bitstring {
            if b >= levels {
                return Err(Error::InvalidLevel { level: b, levels });
            }
            index = index * levels + b;
        }
        let mut amplitudes = vec![ZERO; levels.pow(num_atoms as u32)];
        amplitudes[index] = ONE;
        Ok(QuantumState { num_atoms, levels, amplitudes, global_time: 0.0, leaked: vec![false; num_atoms] })
    }

    pub fn from_str_levels(levels: usize, bits: &str) -> Result<Self> {
        let v = parse_levels(bits)?;
        Self::new(v.len(), levels, &v)
    }

    pub fn from_amplitudes(num_atoms: usize, levels: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let expected = levels.pow(num_atoms as u32);
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: amplitudes.len() });
        }
        Ok(QuantumState { num_atoms, levels, amplitudes, global_time: 0.0, leaked: vec![false; num_atoms] })
    }

    pub fn num_atoms(&self) -> usize {
        self.num_atoms
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn leaked(&self) -> &[bool] {
        &self.leaked
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    /// Copy of this register widened to three levels per atom.
    pub fn to_three_level(&self) -> QuantumState {
        if self.levels == 3 {
            return self.clone();
        }
        let n = self.num_atoms;
        let mut amps = vec![ZERO; 3usize.pow(n as u32)];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let mut j = 0;
            for k in 0..n {
                j = j * 3 + ((i >> (n - 1 - k)) & 1);
            }
            amps[j] = *a;
        }
        QuantumState { num_atoms: n, levels: 3, amplitudes: amps, global_time: self.global_time, leaked: self.leaked.clone() }
    }

    /// Project back onto the qubit subspace, dropping Rydberg amplitude.
    pub fn to_two_level(&self) -> QuantumState {
        if self.levels == 2 {
            return self.clone();
        }
        let n = self.num_atoms;
        let mut amps = vec![ZERO; 1 << n];
        for (j, slot) in amps.iter_mut().enumerate() {
            let mut i = 0;
            for k in 0..n {
                i = i * 3 + ((j >> (n - 1 - k)) & 1);
            }
            *slot = self.amplitudes[i];
        }
        QuantumState { num_atoms: n, levels: 2, amplitudes: amps, global_time: self.global_time, leaked: self.leaked.clone() }
    }

    fn check_atom(&self, a: usize) -> Result<()> {
        if a >= self.num_atoms {
            return Err(Error::AtomOutOfRange { index: a, num_atoms: self.num_atoms });
        }
        Ok(())
    }

    fn stride(&self, atom: usize) -> usize {
        self.levels.pow((self.num_atoms - 1 - atom) as u32)
    }

    /// Level of `atom` in basis index `index`.
    pub fn digit(&self, index: usize, atom: usize) -> usize {
        (index / self.stride(atom)) % self.levels
    }

    /// Apply a 2x2 matrix on the |0>,|1> subspace of one atom. Leaked atoms are skipped.
    pub fn apply_single(&mut self, atom: usize, m: &Mat2) -> Result<()> {
        self.check_atom(atom)?;
        if self.leaked[atom] {
            return Ok(());
        }
        let s = self.stride(atom);
        let block = s * self.levels;
        for hi in (0..self.amplitudes.len()).step_by(block) {
            for lo in 0..s {
                let i0 = hi + lo;
                let i1 = i0 + s;
                let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_rotation(&mut self, atoms: &[usize], theta: f64, phi: f64) -> Result<()> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidParameter("rotation angles must be finite".into()));
        }
        for &a in atoms {
            self.check_atom(a)?;
        }
        let m = rotation_matrix(theta, phi);
        for &a in atoms {
            self.apply_single(a, &m)?;
        }
        Ok(())
    }

    pub fn apply_local_phase(&mut self, atoms: &[usize], phase: f64) -> Result<()> {
        for &a in atoms {
            self.check_atom(a)?;
        }
        let m = phase_matrix(phase);
        for &a in atoms {
            self.apply_single(a, &m)?;
        }
        Ok(())
    }

    /// Multiply every basis amplitude by `f(levels of the pair)`; cheap diagonal path.
    pub fn apply_pair_diagonal(&mut self, pair: (usize, usize), f: impl Fn(usize, usize) -> C64) -> Result<()> {
        self.check_atom(pair.0)?;
        self.check_atom(pair.1)?;
        for i in 0..self.amplitudes.len() {
            let (x, y) = (self.digit(i, pair.0), self.digit(i, pair.1));
            self.amplitudes[i] *= f(x, y);
        }
        Ok(())
    }

    /// Apply a 4x4 (qubit) or 9x9 (three-level) unitary to an ordered atom pair.
    ///
    /// A 4x4 matrix on a three-level register acts on the qubit block only.
    pub fn apply_two_qubit_unitary(&mut self, pair: (usize, usize), u: &CMatrix) -> Result<()> {
        let err = u.unitarity_error();
        if err > 1e-10 {
            return Err(Error::NonUnitary(err));
        }
        self.apply_pair_matrix(pair, u)
    }

    /// Same as [`apply_two_qubit_unitary`](Self::apply_two_qubit_unitary) without the
    /// unitarity check (used for non-Hermitian trajectory propagators).
    pub fn apply_pair_matrix(&mut self, pair: (usize, usize), u: &CMatrix) -> Result<()> {
        let (a, b) = pair;
        self.check_atom(a)?;
        self.check_atom(b)?;
        if a == b {
            return Err(Error::InvalidParameter("pair atoms must differ".into()));
        }
        let local = match u.dim() {
            4 => 2,
            9 if self.levels == 3 => 3,
            d => return Err(Error::DimensionMismatch { expected: self.levels * self.levels, got: d }),
        };
        let (sa, sb) = (self.stride(a), self.stride(b));
        let mut buf = vec![ZERO; local * local];
        for base in 0..self.amplitudes.len() {
            if self.digit(base, a) != 0 || self.digit(base, b) != 0 {
                continue;
            }
            let idx = |x: usize, y: usize| base + x * sa + y * sb;
            for x in 0..local {
                for y in 0..local {
                    buf[x * local + y] = self.amplitudes[idx(x, y)];
                }
            }
            for x in 0..local {
                for y in 0..local {
                    let r = x * local + y;
                    let mut acc = ZERO;
                    for (c, v) in buf.iter().enumerate() {
                        acc += u.get(r, c) * v;
                    }
                    self.amplitudes[idx(x, y)] = acc;
                }
            }
        }
        Ok(())
    }

    /// Collapse `atom` onto `level` (unnormalized probability returned), then renormalize.
    pub fn project(&mut self, atom: usize, level: usize) -> Result<f64> {
        self.check_atom(atom)?;
        let mut p = 0.0;
        for i in 0..self.amplitudes.len() {
            if self.digit(i, atom) == level {
                p += self.amplitudes[i].norm_sqr();
            } else {
                self.amplitudes[i] = ZERO;
            }
        }
        if p > 0.0 {
            self.normalize();
        }
        Ok(p)
    }

    /// Probability of finding `atom` in `level`.
    pub fn level_population(&self, atom: usize, level: usize) -> f64 {
        (0..self.amplitudes.len())
            .filter(|&i| self.digit(i, atom) == level)
            .map(|i| self.amplitudes[i].norm_sqr())
            .sum()
    }

    /// Move an atom's population into the absorbing leaked flag: the atom is
    /// re-parked at |0> so it no longer takes part in the dynamics.
    pub fn mark_leaked(&mut self, atom: usize) -> Result<()> {
        self.check_atom(atom)?;
        let s = self.stride(atom);
        let mut out = vec![ZERO; self.amplitudes.len()];
        for i in 0..self.amplitudes.len() {
            let d = self.digit(i, atom);
            out[i - d * s] += self.amplitudes[i];
        }
        self.amplitudes = out;
        self.normalize();
        self.leaked[atom] = true;
        Ok(())
    }

    /// Reset an atom to `level` (used for ancilla replacement).
    pub fn reset_atom(&mut self, atom: usize, level: usize) -> Result<()> {
        self.check_atom(atom)?;
        if level >= self.levels {
            return Err(Error::InvalidLevel { level, levels: self.levels });
        }
        let s = self.stride(atom);
        let mut out = vec![ZERO; self.amplitudes.len()];
        // Exact only when the atom is already in a definite level (after projection).
        for i in 0..self.amplitudes.len() {
            let d = self.digit(i, atom);
            out[i - d * s + level * s] += self.amplitudes[i];
        }
        self.amplitudes = out;
        self.normalize();
        self.leaked[atom] = false;
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn levels_of(&self, index: usize) -> Vec<usize> {
        (0..self.num_atoms).map(|a| self.digit(index, a)).collect()
    }

    pub fn index_of(&self, levels: &[usize]) -> usize {
        levels.iter().fold(0, |acc, &l| acc * self.levels + l)
    }

    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        match obs {
            Observable::ParityAllZ => {
                let all: Vec<usize> = (0..self.num_atoms).collect();
                self.parity(&all)
            }
            Observable::Parity(atoms) => self.parity(atoms),
            Observable::Population(bits) => {
                if bits.len() != self.num_atoms {
                    return Err(Error::DimensionMismatch { expected: self.num_atoms, got: bits.len() });
                }
                Ok(self.amplitudes[self.index_of(bits)].norm_sqr())
            }
            Observable::Overlap(other) => {
                if other.amplitudes.len() != self.amplitudes.len() {
                    return Err(Error::DimensionMismatch { expected: self.amplitudes.len(), got: other.amplitudes.len() });
                }
                let ov: C64 = other.amplitudes.iter().zip(&self.amplitudes).map(|(a, b)| a.conj() * b).sum();
                Ok(ov.norm_sqr())
            }
        }
    }

    /// Exact expectation of the product of Z over `atoms` with Z|0> = +1, Z|1> = -1.
    /// Rydberg population counts as |0> (dark); leaked atoms count as |1> (bright).
    pub fn parity(&self, atoms: &[usize]) -> Result<f64> {
        for &a in atoms {
            self.check_atom(a)?;
        }
        let mut total = 0.0;
        for (i, amp) in self.amplitudes.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut sign = 1.0;
            for &a in atoms {
                let bright = if self.leaked[a] { true } else { self.digit(i, a) == 1 };
                if bright {
                    sign = -sign;
                }
            }
            total += sign * p;
        }
        Ok(total.clamp(-1.0, 1.0))
    }

    /// Sample one readout: returns (bits, leak flags).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<u8>, Vec<bool>) {
        let idx = sample_index(&self.amplitudes, rng);
        self.readout(idx)
    }

    fn readout(&self, idx: usize) -> (Vec<u8>, Vec<bool>) {
        let mut bits = Vec::with_capacity(self.num_atoms);
        let mut leak = Vec::with_capacity(self.num_atoms);
        for a in 0..self.num_atoms {
            if self.leaked[a] {
                bits.push(1);
                leak.push(true);
                continue;
            }
            match self.digit(idx, a) {
                RYDBERG => {
                    bits.push(0);
                    leak.push(true);
                }
                d => {
                    bits.push(d as u8);
                    leak.push(false);
                }
            }
        }
        (bits, leak)
    }

    pub fn measure_shots(&self, num_shots: usize, seed: u64) -> ShotTable {
        let mut rng = crate::rng::stream(seed, 0);
        let cdf = cumulative(&self.amplitudes);
        let shots = (0..num_shots)
            .map(|_| {
                let idx = search_cdf(&cdf, rng.gen::<f64>());
                let (bits, leaked) = self.readout(idx);
                ShotRecord::new(bits, leaked)
            })
            .collect();
        ShotTable::new(self.num_atoms, shots, ShotMetadata { seed, ..Default::default() })
    }
}

fn cumulative(amps: &[C64]) -> Vec<f64> {
    let mut acc = 0.0;
    amps.iter()
        .map(|a| {
            acc += a.norm_sqr();
            acc
        })
        .collect()
}

fn search_cdf(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap_or(&1.0);
    let x = u * total;
    let i = cdf.partition_point(|&c| c <= x);
    // Skip trailing zero-probability entries that tie with the total.
    i.min(cdf.len() - 1)
}

pub(crate) fn sample_index<R: Rng + ?Sized>(amps: &[C64], rng: &mut R) -> usize {
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let mut x = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            last = i;
            if x < p {
                return i;
            }
            x -= p;
        }
    }
    last
}

/// (|0..0> + |1..1>)/sqrt(2) on `n` qubits.
pub fn ghz_state(n: usize) -> QuantumState {
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = amps[0];
    QuantumState::from_amplitudes(n, 2, amps).expect("ghz dimension")
}

/// Bell states on two qubits.
pub fn bell_state(kind: Bell) -> QuantumState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match kind {
        Bell::PhiPlus => [h, 0.0, 0.0, h],
        Bell::PhiMinus => [h, 0.0, 0.0, -h],
        Bell::PsiPlus => [0.0, h, h, 0.0],
        Bell::PsiMinus => [0.0, h, -h, 0.0],
    };
    QuantumState::from_amplitudes(2, 2, amps.iter().map(|&x| C64::new(x, 0.0)).collect()).expect("bell dimension")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// Fidelity |<a|b>|^2 between two registers of equal shape.
pub fn overlap(a: &QuantumState, b: &QuantumState) -> f64 {
    a.expectation(&Observable::Overlap(b.clone())).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_pulse_flips() {
        let mut s = QuantumState::from_str_levels(2, "0").unwrap();
        s.apply_rotation(&[0], PI, 0.0).unwrap();
        assert!((s.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn echo_pair_returns_populations() {
        let mut s = QuantumState::from_str_levels(2, "1").unwrap();
        s.apply_rotation(&[0], PI / 2.0, 0.0).unwrap();
        s.apply_rotation(&[0], PI / 2.0, PI).unwrap();
        assert!((s.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rydberg_basis_state() {
        let s = QuantumState::from_str_levels(3, "r").unwrap();
        assert_eq!(s.amplitudes()[2], ONE);
        assert!(QuantumState::new(1, 2, &[2]).is_err());
        assert!(QuantumState::new(2, 2, &[1]).is_err());
    }

    #[test]
    fn cz_on_11() {
        let mut s = QuantumState::from_str_levels(2, "11").unwrap();
        let cz = CMatrix::diagonal(&[ONE, ONE, ONE, -ONE]);
        s.apply_two_qubit_unitary((0, 1), &cz).unwrap();
        assert!((s.amplitudes()[3] + ONE).norm() < 1e-15);
        let bad = CMatrix::diagonal(&[ONE, ONE, ONE, C64::new(2.0, 0.0)]);
        assert!(matches!(s.apply_two_qubit_unitary((0, 1), &bad), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn pair_ordering_respected() {
        // CNOT with control atom 1 (second), target atom 0.
        let mut m = CMatrix::zeros(4);
        for (r, c) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
            m.set(r, c, ONE);
        }
        let mut s = QuantumState::from_str_levels(2, "01").unwrap();
        s.apply_two_qubit_unitary((0, 1), &m).unwrap();
        assert_eq!(s.amplitudes()[3], ONE);
        let mut t = QuantumState::from_str_levels(2, "10").unwrap();
        t.apply_two_qubit_unitary((1, 0), &m).unwrap();
        assert_eq!(t.amplitudes()[3], ONE);
    }

    #[test]
    fn parity_and_leak() {
        let s = QuantumState::from_str_levels(2, "11").unwrap();
        assert_eq!(s.parity(&[0, 1]).unwrap(), 1.0);
        let mut r = QuantumState::from_str_levels(3, "r1").unwrap();
        assert_eq!(r.parity(&[0, 1]).unwrap(), -1.0);
        r.mark_leaked(0).unwrap();
        assert_eq!(r.parity(&[0, 1]).unwrap(), 1.0);
        let (bits, leak) = r.sample(&mut crate::rng::stream(1, 0));
        assert_eq!(bits, vec![1, 1]);
        assert_eq!(leak, vec![true, false]);
    }

    #[test]
    fn level_conversion_round_trip() {
        let g = ghz_state(3);
        let back = g.to_three_level().to_two_level();
        assert!((overlap(&g, &back) - 1.0).abs() < 1e-14);
    }
}
