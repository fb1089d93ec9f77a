//! Per-shot measurement records, the common input to every analysis routine.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub index: u64,
    pub bits: Vec<u8>,
    /// Per-atom herald; false marks a failed shelving or erasure event.
    pub herald: Vec<bool>,
    /// Ancilla outcomes, one vector per mid-circuit readout round.
    pub ancilla: Vec<Vec<u8>>,
    pub leaked: Vec<bool>,
}

impl ShotRecord {
    pub fn new(bits: Vec<u8>, leaked: Vec<bool>) -> Self {
        let n = bits.len();
        ShotRecord { index: 0, bits, herald: vec![true; n], ancilla: Vec::new(), leaked }
    }

    pub fn all_heralded(&self) -> bool {
        self.herald.iter().all(|&h| h)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShotMetadata {
    pub circuit_id: String,
    pub seed: u64,
    pub scan_variable: Option<String>,
    pub scan_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTable {
    pub num_atoms: usize,
    pub shots: Vec<ShotRecord>,
    pub metadata: ShotMetadata,
}

impl ShotTable {
    pub fn new(num_atoms: usize, mut shots: Vec<ShotRecord>, metadata: ShotMetadata) -> Self {
        for (i, s) in shots.iter_mut().enumerate() {
            s.index = i as u64;
        }
        ShotTable { num_atoms, shots, metadata }
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    /// Keep only rows where `mask` is true. Columns are untouched.
    pub fn filter(&self, mask: &[bool]) -> ShotTable {
        assert_eq!(mask.len(), self.shots.len(), "mask length must match shot count");
        let shots = self.shots.iter().zip(mask).filter(|(_, &m)| m).map(|(s, _)| s.clone()).collect();
        ShotTable { num_atoms: self.num_atoms, shots, metadata: self.metadata.clone() }
    }

    pub fn filter_by(&self, pred: impl Fn(&ShotRecord) -> bool) -> ShotTable {
        let mask: Vec<bool> = self.shots.iter().map(pred).collect();
        self.filter(&mask)
    }

    pub fn heralded_mask(&self) -> Vec<bool> {
        self.shots.iter().map(ShotRecord::all_heralded).collect()
    }

    /// Shots whose ancilla outcome at `round` (first ancilla) equals `value`.
    pub fn ancilla_mask(&self, round: usize, value: u8) -> Vec<bool> {
        self.shots
            .iter()
            .map(|s| s.ancilla.get(round).and_then(|r| r.first()).map(|&v| v == value).unwrap_or(false))
            .collect()
    }

    /// Concatenate tables and order rows by shot index.
    pub fn merge(&self, other: &ShotTable) -> ShotTable {
        assert_eq!(self.num_atoms, other.num_atoms);
        let mut shots: Vec<ShotRecord> = self.shots.iter().chain(&other.shots).cloned().collect();
        shots.sort_by_key(|s| s.index);
        ShotTable { num_atoms: self.num_atoms, shots, metadata: self.metadata.clone() }
    }

    pub fn counts(&self, atoms: &[usize]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for s in &self.shots {
            let key: String = atoms.iter().map(|&a| char::from(b'0' + s.bits[a])).collect();
            *m.entry(key).or_insert(0) += 1;
        }
        m
    }

    pub fn probability(&self, atoms: &[usize], bits: &[u8]) -> f64 {
        if self.shots.is_empty() {
            return 0.0;
        }
        let hits = self
            .shots
            .iter()
            .filter(|s| atoms.iter().zip(bits).all(|(&a, &b)| s.bits[a] == b))
            .count();
        hits as f64 / self.shots.len() as f64
    }

    /// Number of shots with even parity over `atoms` and the total count.
    pub fn even_parity_counts(&self, atoms: &[usize]) -> (usize, usize) {
        let even = self
            .shots
            .iter()
            .filter(|s| atoms.iter().map(|&a| s.bits[a] as usize).sum::<usize>() % 2 == 0)
            .count();
        (even, self.shots.len())
    }

    /// Mean parity and its binomial standard error.
    pub fn parity(&self, atoms: &[usize]) -> (f64, f64) {
        let (k, n) = self.even_parity_counts(atoms);
        if n == 0 {
            return (0.0, 0.0);
        }
        let p = k as f64 / n as f64;
        (2.0 * p - 1.0, 2.0 * (p * (1.0 - p) / n as f64).sqrt())
    }

    pub fn leak_fraction(&self) -> f64 {
        if self.shots.is_empty() {
            return 0.0;
        }
        self.shots.iter().filter(|s| s.leaked.iter().any(|&l| l)).count() as f64 / self.shots.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("shot,bits,herald,leaked,ancilla\n");
        for s in &self.shots {
            let bits: String = s.bits.iter().map(|b| char::from(b'0' + b)).collect();
            let herald: String = s.herald.iter().map(|&h| if h { '1' } else { '0' }).collect();
            let leak: String = s.leaked.iter().map(|&h| if h { '1' } else { '0' }).collect();
            let anc: Vec<String> = s.ancilla.iter().map(|r| r.iter().map(|b| char::from(b'0' + b)).collect()).collect();
            let _ = writeln!(out, "{},{},{},{},{}", s.index, bits, herald, leak, anc.join(";"));
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ShotTable {
        let rows = vec![
            ShotRecord::new(vec![0, 0], vec![false; 2]),
            ShotRecord::new(vec![1, 1], vec![false; 2]),
            ShotRecord::new(vec![0, 1], vec![false; 2]),
            ShotRecord::new(vec![1, 1], vec![true, false]),
        ];
        ShotTable::new(2, rows, ShotMetadata::default())
    }

    #[test]
    fn all_true_mask_is_identity() {
        let t = table();
        let f = t.filter(&vec![true; t.len()]);
        assert_eq!(f, t);
        assert_eq!(f.parity(&[0, 1]), t.parity(&[0, 1]));
    }

    #[test]
    fn counts_and_parity() {
        let t = table();
        assert_eq!(t.even_parity_counts(&[0, 1]), (3, 4));
        assert_eq!(t.counts(&[0, 1])["11"], 2);
        assert_eq!(t.leak_fraction(), 0.25);
    }

    #[test]
    fn merge_orders_by_index() {
        let t = table();
        let a = t.filter(&[true, false, true, false]);
        let b = t.filter(&[false, true, false, true]);
        assert_eq!(b.merge(&a).shots, t.shots);
        assert_eq!(a.merge(&b), b.merge(&a).clone_with_meta(&a));
    }

    impl ShotTable {
        fn clone_with_meta(&self, other: &ShotTable) -> ShotTable {
            ShotTable { metadata: other.metadata.clone(), ..self.clone() }
        }
    }
}
