//! Randomized two-qubit benchmarking on the symmetric stabilizer states, the
//! echo-circuit variant, and the single-qubit pi/2 benchmark.
//!
//! Benchmark circuits have a fixed number of layers; `n_cz` of them carry a CZ.
//! The number of single-qubit gates therefore does not depend on `n_cz`.

use crate::circuit::{execute, Circuit, ClockNoise, CzModel, NoiseContext, Timing};
use crate::noise::ClockPsd;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::optim::{hessian, invert, nelder_mead_restarts};
use crate::rng;
use crate::statevec::{phase_matrix, rotation_matrix};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type Vec4 = [C64; 4];

/// Generators of the single-qubit Clifford group used to build circuits:
/// `R(pi/2, 0)`, `R(pi/2, pi/2)` and a virtual `Z(pi/2)`.
fn generator(g: u8) -> Mat2 {
    match g {
        0 => rotation_matrix(PI / 2.0, 0.0),
        1 => rotation_matrix(PI / 2.0, PI / 2.0),
        _ => phase_matrix(PI / 2.0),
    }
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    crate::linalg::mat2_mul(a, b)
}

fn same_up_to_phase(a: &[C64], b: &[C64]) -> bool {
    let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    (ip.norm() - 1.0).abs() < 1e-9
}

/// A single-qubit Clifford with a shortest generator word.
#[derive(Debug, Clone)]
pub struct Clifford {
    pub matrix: Mat2,
    pub word: Vec<u8>,
}

/// The 24 single-qubit Cliffords up to global phase, by breadth-first search.
pub fn single_qubit_cliffords() -> Vec<Clifford> {
    let mut out = vec![Clifford { matrix: [[ONE, ZERO], [ZERO, ONE]], word: vec![] }];
    let mut frontier = 0;
    while frontier < out.len() {
        let cur = out[frontier].clone();
        for g in 0..3u8 {
            let m = mat_mul(&generator(g), &cur.matrix);
            let flat = [m[0][0], m[0][1], m[1][0], m[1][1]];
            let known = out.iter().any(|c| {
                let f = [c.matrix[0][0], c.matrix[0][1], c.matrix[1][0], c.matrix[1][1]];
                let ip: C64 = f.iter().zip(&flat).map(|(x, y)| x.conj() * y).sum();
                (ip.norm() - 2.0).abs() < 1e-9
            });
            if !known {
                let mut word = cur.word.clone();
                word.push(g);
                out.push(Clifford { matrix: m, word });
            }
        }
        frontier += 1;
    }
    out
}

fn local(m: &Mat2, v: &Vec4) -> Vec4 {
    // m applied to both atoms
    let mut out = [ZERO; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let (a, b) = (i >> 1, i & 1);
        for j in 0..4 {
            let (c, d) = (j >> 1, j & 1);
            *o += m[a][c] * m[b][d] * v[j];
        }
    }
    out
}

fn local_pair(m0: &Mat2, m1: &Mat2, v: &Vec4) -> Vec4 {
    let mut out = [ZERO; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let (a, b) = (i >> 1, i & 1);
        for j in 0..4 {
            let (c, d) = (j >> 1, j & 1);
            *o += m0[a][c] * m1[b][d] * v[j];
        }
    }
    out
}

fn cz(v: &Vec4) -> Vec4 {
    [v[0], v[1], v[2], -v[3]]
}

/// One benchmarking layer: a global Clifford then an optional CZ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub clifford: usize,
    pub cz: bool,
}

/// The 12 swap-symmetric two-qubit stabilizer states reachable from |11> with
/// global Cliffords and CZ, with their layer action table.
#[derive(Debug, Clone)]
pub struct SymmetricStabilizerSet {
    pub states: Vec<Vec4>,
    pub cliffords: Vec<Clifford>,
    /// `action[s][c][z]`: index reached from state `s` by Clifford `c` on both atoms, then CZ if `z == 1`.
    pub action: Vec<Vec<[usize; 2]>>,
    /// Preparation from |11>: (first Clifford, optional CZ + second Clifford).
    pub prep: Vec<(usize, Option<usize>)>,
    /// Recovery to |11>.
    pub recover: Vec<(usize, Option<usize>)>,
}

/// All two-qubit stabilizer states up to global phase: the orbit of |00> under
/// local Cliffords and CZ.
pub fn all_stabilizer_states(cliffords: &[Clifford]) -> Vec<Vec4> {
    let mut states: Vec<Vec4> = vec![[ONE, ZERO, ZERO, ZERO]];
    let mut frontier = 0;
    while frontier < states.len() {
        let s = states[frontier];
        let mut next = vec![cz(&s)];
        for g in 0..3u8 {
            let id = [[ONE, ZERO], [ZERO, ONE]];
            next.push(local_pair(&generator(g), &id, &s));
            next.push(local_pair(&id, &generator(g), &s));
        }
        for n in next {
            if !states.iter().any(|t| same_up_to_phase(t, &n)) {
                states.push(n);
            }
        }
        frontier += 1;
    }
    debug_assert!(cliffords.len() == 24);
    states
}

fn is_swap_symmetric(v: &Vec4) -> bool {
    (v[1] - v[2]).norm() < 1e-12
}

/// Enumerate the symmetric set. Any count other than 12 is a generator error.
pub fn enumerate_symmetric_stabilizers() -> Result<SymmetricStabilizerSet> {
    let cliffords = single_qubit_cliffords();
    if cliffords.len() != 24 {
        return Err(Error::Generator(format!("{} single-qubit Cliffords", cliffords.len())));
    }
    let all = all_stabilizer_states(&cliffords);
    if all.len() != 60 {
        return Err(Error::Generator(format!("{} two-qubit stabilizer states", all.len())));
    }
    // fix the global phase so that SWAP symmetry is an exact equality
    let states: Vec<Vec4> = all
        .iter()
        .map(|v| {
            let k = v.iter().position(|a| a.norm() > 1e-9).expect("non-zero state");
            let ph = v[k] / v[k].norm();
            let mut w = *v;
            w.iter_mut().for_each(|a| *a /= ph);
            w
        })
        .filter(is_swap_symmetric)
        .collect();
    // keep the orbit of |11> under global Cliffords and CZ
    let mut orbit: Vec<Vec4> = vec![[ZERO, ZERO, ZERO, ONE]];
    let mut frontier = 0;
    while frontier < orbit.len() {
        let s = orbit[frontier];
        let mut next = vec![cz(&s)];
        next.extend((0..3u8).map(|g| local(&generator(g), &s)));
        for n in next {
            if !orbit.iter().any(|t| same_up_to_phase(t, &n)) {
                orbit.push(n);
            }
        }
        frontier += 1;
    }
    let states: Vec<Vec4> = states.into_iter().filter(|s| orbit.iter().any(|o| same_up_to_phase(o, s))).collect();
    if states.len() != 12 || orbit.len() != 12 {
        return Err(Error::Generator(format!("{} symmetric stabilizer states", states.len())));
    }
    let find = |v: &Vec4| -> Result<usize> {
        states
            .iter()
            .position(|s| same_up_to_phase(s, v))
            .ok_or_else(|| Error::Generator("layer left the symmetric set".into()))
    };
    let mut action = Vec::with_capacity(12);
    for s in &states {
        let mut row = Vec::with_capacity(24);
        for c in &cliffords {
            let a = local(&c.matrix, s);
            row.push([find(&a)?, find(&cz(&a))?]);
        }
        action.push(row);
    }
    let one_one = find(&[ZERO, ZERO, ZERO, ONE])?;
    let search = |from: usize, to: usize| -> Option<(usize, Option<usize>)> {
        if let Some(c) = (0..24).find(|&c| action[from][c][0] == to) {
            return Some((c, None));
        }
        for c1 in 0..24 {
            let mid = action[from][c1][1];
            if let Some(c2) = (0..24).find(|&c2| action[mid][c2][0] == to) {
                return Some((c1, Some(c2)));
            }
        }
        None
    };
    let mut prep = Vec::with_capacity(12);
    let mut recover = Vec::with_capacity(12);
    for s in 0..12 {
        prep.push(search(one_one, s).ok_or_else(|| Error::Generator(format!("no preparation for state {s}")))?);
        recover.push(search(s, one_one).ok_or_else(|| Error::Generator(format!("no recovery from state {s}")))?);
    }
    Ok(SymmetricStabilizerSet { states, cliffords, action, prep, recover })
}

impl SymmetricStabilizerSet {
    pub fn index_of(&self, v: &[C64]) -> Option<usize> {
        self.states.iter().position(|s| same_up_to_phase(s, v))
    }

    pub fn one_one(&self) -> usize {
        self.index_of(&[ZERO, ZERO, ZERO, ONE]).expect("|11> is symmetric")
    }

    pub fn apply(&self, state: usize, layer: Layer) -> usize {
        self.action[state][layer.clifford][usize::from(layer.cz)]
    }

    /// True when `layer` permutes the set, so it preserves a uniform distribution.
    pub fn preserves_uniformity(&self, layer: Layer) -> bool {
        let mut hit = [false; 12];
        for s in 0..12 {
            hit[self.apply(s, layer)] = true;
        }
        hit.iter().all(|&h| h)
    }

    fn emit_clifford(&self, c: &mut Circuit, t: &Timing, k: usize) {
        for &g in &self.cliffords[k].word {
            match g {
                0 => c.global_rotation(t, PI / 2.0, 0.0),
                1 => c.global_rotation(t, PI / 2.0, PI / 2.0),
                _ => c.virtual_z(&[0, 1], PI / 2.0),
            };
        }
    }

    fn emit_transfer(&self, c: &mut Circuit, t: &Timing, step: (usize, Option<usize>)) {
        self.emit_clifford(c, t, step.0);
        if let Some(c2) = step.1 {
            c.cz(t, 0, 1);
            self.emit_clifford(c, t, c2);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ssb,
    Echo,
    Pi2Train,
    Pi2Random,
}

/// A generated benchmark circuit with its tracked state sequence.
#[derive(Debug, Clone)]
pub struct BenchmarkCircuit {
    pub circuit: Circuit,
    /// Set index before each layer and after the last one.
    pub trajectory: Vec<usize>,
    /// Bitstring a noiseless run returns.
    pub target: Vec<u8>,
}

fn cz_positions(layers: usize, n_cz: usize, r: &mut rng::Stream) -> Result<Vec<bool>> {
    if n_cz > layers {
        return Err(Error::InvalidParameter(format!("{n_cz} CZ gates do not fit in {layers} layers")));
    }
    let mut pos = vec![false; layers];
    let mut idx: Vec<usize> = (0..layers).collect();
    idx.shuffle(r);
    for &i in &idx[..n_cz] {
        pos[i] = true;
    }
    Ok(pos)
}

/// SSB circuit: uniform random preparation, `layers` random global Clifford
/// layers (`n_cz` of them followed by a CZ), and the tracked recovery to |11>.
pub fn build_ssb_circuit(set: &SymmetricStabilizerSet, t: &Timing, n_cz: usize, layers: usize, seed: u64) -> Result<BenchmarkCircuit> {
    let mut r = rng::stream(seed, 0);
    let pos = cz_positions(layers, n_cz, &mut r)?;
    let mut c = Circuit::new("ssb", 2, vec![1, 1]);
    let start = r.gen_range(0..12);
    set.emit_transfer(&mut c, t, set.prep[start]);
    let mut s = start;
    let mut traj = vec![s];
    for &z in &pos {
        // every candidate permutes the set; the check guards the action table
        let layer = loop {
            let cand = Layer { clifford: r.gen_range(0..24), cz: z };
            if set.preserves_uniformity(cand) {
                break cand;
            }
        };
        set.emit_clifford(&mut c, t, layer.clifford);
        if layer.cz {
            c.cz(t, 0, 1);
        }
        s = set.apply(s, layer);
        traj.push(s);
    }
    set.emit_transfer(&mut c, t, set.recover[s]);
    c.final_measure();
    Ok(BenchmarkCircuit { circuit: c, trajectory: traj, target: vec![1, 1] })
}

/// Echo circuit: from |11>, each layer is a global pi pulse, a random pi/2
/// rotation about an equatorial axis, and a CZ in `n_cz` of the layers.
pub fn build_echo_circuit(set: &SymmetricStabilizerSet, t: &Timing, n_cz: usize, layers: usize, seed: u64) -> Result<BenchmarkCircuit> {
    let mut r = rng::stream(seed, 0);
    let pos = cz_positions(layers, n_cz, &mut r)?;
    let mut c = Circuit::new("echo", 2, vec![1, 1]);
    let mut v: Vec4 = [ZERO, ZERO, ZERO, ONE];
    let mut traj = vec![set.one_one()];
    for &z in &pos {
        c.global_rotation(t, PI, 0.0);
        v = local(&rotation_matrix(PI, 0.0), &v);
        let phi = r.gen_range(0..4) as f64 * PI / 2.0;
        c.global_rotation(t, PI / 2.0, phi);
        v = local(&rotation_matrix(PI / 2.0, phi), &v);
        if z {
            c.cz(t, 0, 1);
            v = cz(&v);
        }
        traj.push(set.index_of(&v).ok_or_else(|| Error::Generator("echo layer left the symmetric set".into()))?);
    }
    let s = *traj.last().expect("non-empty");
    set.emit_transfer(&mut c, t, set.recover[s]);
    c.final_measure();
    Ok(BenchmarkCircuit { circuit: c, trajectory: traj, target: vec![1, 1] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pi2Mode {
    SamePhase,
    RandomAxes,
}

/// Train of `n_pulses` global pi/2 pulses on `atoms` atoms starting in |0>.
///
/// In random-axes mode the azimuths are drawn from {0, pi/2, pi, 3pi/2} and the
/// last pulse is chosen to return the atom to |0>; `n_pulses` must be even in both modes.
pub fn build_pi2_benchmark(t: &Timing, atoms: usize, n_pulses: usize, mode: Pi2Mode, seed: u64) -> Result<BenchmarkCircuit> {
    if n_pulses % 2 == 1 {
        return Err(Error::InvalidParameter("pi/2 trains need an even number of pulses".into()));
    }
    let mut c = Circuit::new("pi2", atoms, vec![0; atoms]);
    let mut r = rng::stream(seed, 0);
    let phases: Vec<f64> = match mode {
        Pi2Mode::SamePhase => vec![0.0; n_pulses],
        Pi2Mode::RandomAxes if n_pulses == 0 => vec![],
        Pi2Mode::RandomAxes => loop {
            let mut ph: Vec<f64> = (0..n_pulses - 1).map(|_| r.gen_range(0..4) as f64 * PI / 2.0).collect();
            let mut m: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
            for &p in &ph {
                m = mat_mul(&rotation_matrix(PI / 2.0, p), &m);
            }
            let last = (0..4).map(|k| k as f64 * PI / 2.0).find(|&p| {
                let f = mat_mul(&rotation_matrix(PI / 2.0, p), &m);
                (f[0][0].norm() - 1.0).abs() < 1e-9
            });
            if let Some(p) = last {
                ph.push(p);
                break ph;
            }
        },
    };
    let mut m: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
    for &p in &phases {
        c.global_rotation(t, PI / 2.0, p);
        m = mat_mul(&rotation_matrix(PI / 2.0, p), &m);
    }
    let bit = u8::from(m[1][0].norm() > 0.5);
    c.final_measure();
    Ok(BenchmarkCircuit { circuit: c, trajectory: vec![], target: vec![bit; atoms] })
}

/// Return probabilities against the number of gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub family: Family,
    pub n_gates: Vec<usize>,
    pub return_prob: Vec<f64>,
    pub errors: Vec<f64>,
    pub shots: Vec<usize>,
}

impl BenchmarkRun {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_gates,return_prob,err\n");
        for i in 0..self.n_gates.len() {
            s.push_str(&format!("{},{:.9},{:.9}\n", self.n_gates[i], self.return_prob[i], self.errors[i]));
        }
        s
    }
}

/// Settings for a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub family: Family,
    pub n_gates: Vec<usize>,
    /// Layers per two-qubit circuit; ignored for pi/2 trains.
    pub layers: usize,
    pub circuits: usize,
    pub shots: usize,
    pub atoms: usize,
}

/// Generate and execute the circuits of `plan` under `ctx`.
///
/// Circuit `j` at depth `n` uses seed `derive(seed, n * 65536 + j)` for generation and
/// execution, so runs with different noise contexts share random numbers.
pub fn run_benchmark(set: &SymmetricStabilizerSet, t: &Timing, plan: &RunPlan, ctx: &NoiseContext, seed: u64) -> Result<BenchmarkRun> {
    let mut run = BenchmarkRun { family: plan.family, n_gates: vec![], return_prob: vec![], errors: vec![], shots: vec![] };
    for &n in &plan.n_gates {
        let mut hits = 0usize;
        let mut total = 0usize;
        for j in 0..plan.circuits {
            let s = rng::derive(seed, (n as u64) * 65536 + j as u64);
            let bc = match plan.family {
                Family::Ssb => build_ssb_circuit(set, t, n, plan.layers, s)?,
                Family::Echo => build_echo_circuit(set, t, n, plan.layers, s)?,
                Family::Pi2Train => build_pi2_benchmark(t, plan.atoms, n, Pi2Mode::SamePhase, s)?,
                Family::Pi2Random => build_pi2_benchmark(t, plan.atoms, n, Pi2Mode::RandomAxes, s)?,
            };
            let tab = execute(&bc.circuit, ctx, plan.shots, rng::derive(s, 1))?;
            match plan.family {
                Family::Pi2Train | Family::Pi2Random => {
                    // each atom is an independent single-qubit benchmark
                    for rec in &tab.shots {
                        hits += rec.bits.iter().zip(&bc.target).filter(|(a, b)| a == b).count();
                        total += rec.bits.len();
                    }
                }
                _ => {
                    hits += tab.shots.iter().filter(|r| r.bits == bc.target).count();
                    total += tab.len();
                }
            }
        }
        let p = hits as f64 / total as f64;
        run.n_gates.push(n);
        run.return_prob.push(p);
        run.errors.push((p * (1.0 - p) / total as f64).sqrt().max(0.5 / total as f64));
        run.shots.push(total);
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub p: f64,
    pub amplitude_err: f64,
    pub p_err: f64,
    /// Set when the data do not decay and `p` was capped at 1.
    pub capped: bool,
}

/// Weighted fit of `A p^N` to return probabilities.
pub fn fit_decay(run: &BenchmarkRun) -> Result<DecayFit> {
    if run.n_gates.len() < 3 {
        return Err(Error::InvalidParameter("decay fit needs at least 3 depths".into()));
    }
    let n: Vec<f64> = run.n_gates.iter().map(|&k| k as f64).collect();
    let y = &run.return_prob;
    let w: Vec<f64> = run.errors.iter().map(|e| 1.0 / (e * e).max(1e-30)).collect();
    let cost = |x: &[f64]| -> f64 {
        n.iter().zip(y).zip(&w).map(|((&k, &v), &wt)| wt * (v - x[0] * x[1].powf(k)).powi(2)).sum::<f64>() / 2.0
    };
    // log-linear start
    let logs: Vec<(f64, f64)> = n.iter().zip(y).filter(|(_, &v)| v > 0.0).map(|(&k, &v)| (k, v.ln())).collect();
    let mk = logs.iter().map(|p| p.0).sum::<f64>() / logs.len() as f64;
    let ml = logs.iter().map(|p| p.1).sum::<f64>() / logs.len() as f64;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mk).powi(2)).sum();
    let slope = if sxx > 0.0 { logs.iter().map(|p| (p.0 - mk) * (p.1 - ml)).sum::<f64>() / sxx } else { 0.0 };
    let start = [(ml - slope * mk).exp(), slope.exp().min(1.0)];
    let m = nelder_mead_restarts(&cost, &start, &[0.01, 0.001], 4000, 4)?;
    let (mut a, mut p) = (m.x[0], m.x[1]);
    let capped = p > 1.0;
    if capped {
        p = 1.0;
        let sw: f64 = w.iter().sum();
        a = y.iter().zip(&w).map(|(v, wt)| v * wt).sum::<f64>() / sw;
    }
    let h = hessian(&|x: &[f64]| cost(x), &[a, p])?;
    let cov = invert(&h).ok_or_else(|| Error::FitFailed("singular decay fit".into()))?;
    Ok(DecayFit { amplitude: a, p, amplitude_err: cov[0][0].max(0.0).sqrt(), p_err: cov[1][1].max(0.0).sqrt(), capped })
}

/// Subtract the false-bright contribution of leakage; errors add in quadrature.
pub fn leakage_correct(fidelity: f64, fidelity_err: f64, leak: f64, leak_err: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.01).contains(&leak) {
        return Err(Error::InvalidParameter(format!("leak per gate {leak} outside [0, 0.01]")));
    }
    Ok((fidelity - leak, fidelity_err.hypot(leak_err)))
}

/// Noise used to compare the two benchmarks: Markovian white clock frequency
/// noise on all single-qubit operations and a stochastic Pauli CZ error. The
/// values are calibration knobs, not measurements.
pub fn separation_noise() -> NoiseContext {
    let mut ctx = NoiseContext::ideal();
    ctx.clock = ClockNoise::Psd { psd: ClockPsd::white(2.0, 50.0, 1e4), sample_rate: 2e4 };
    ctx.cz = CzModel::Fast { error: 0.0036, leak: 0.0 };
    ctx
}

/// Inferred CZ fidelities of both two-qubit benchmarks at nominal and scaled single-qubit error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub factor: f64,
    pub ssb: [DecayFit; 2],
    pub echo: [DecayFit; 2],
    pub runs: Vec<BenchmarkRun>,
}

impl Separation {
    pub fn ssb_shift(&self) -> f64 {
        (self.ssb[0].p - self.ssb[1].p).abs()
    }

    pub fn echo_shift(&self) -> f64 {
        (self.echo[0].p - self.echo[1].p).abs()
    }
}

/// Run SSB and echo benchmarks under `ctx` and under `ctx` with single-qubit
/// error scaled by `factor`. Both runs share seeds.
pub fn benchmark_separation(set: &SymmetricStabilizerSet, t: &Timing, plan: &RunPlan, ctx: &NoiseContext, factor: f64, seed: u64) -> Result<Separation> {
    let mut fits = Vec::with_capacity(4);
    let mut runs = Vec::with_capacity(4);
    for family in [Family::Ssb, Family::Echo] {
        for k in [1.0, factor] {
            let p = RunPlan { family, ..plan.clone() };
            let run = run_benchmark(set, t, &p, &ctx.scale_single_qubit(k), seed)?;
            fits.push(fit_decay(&run)?);
            runs.push(run);
        }
    }
    Ok(Separation {
        factor,
        ssb: [fits[0].clone(), fits[1].clone()],
        echo: [fits[2].clone(), fits[3].clone()],
        runs,
    })
}

/// Histogram of set indices at each depth over `circuits` random circuits with a CZ in every layer.
pub fn census(set: &SymmetricStabilizerSet, t: &Timing, family: Family, depth: usize, circuits: usize, seed: u64) -> Result<Vec<[usize; 12]>> {
    let trajs = rng::par_map(circuits, |j| {
        let s = rng::derive(seed, j as u64);
        match family {
            Family::Ssb => build_ssb_circuit(set, t, depth, depth, s).map(|b| b.trajectory),
            Family::Echo => build_echo_circuit(set, t, depth, depth, s).map(|b| b.trajectory),
            _ => Err(Error::InvalidParameter("census is defined for two-qubit families".into())),
        }
    });
    let mut hist = vec![[0usize; 12]; depth + 1];
    for tr in trajs {
        for (d, &s) in tr?.iter().enumerate() {
            hist[d][s] += 1;
        }
    }
    Ok(hist)
}

/// Pearson chi-square statistic of `counts` against the uniform distribution.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ideal_branch;

    #[test]
    fn twelve_symmetric_states() {
        let set = enumerate_symmetric_stabilizers().unwrap();
        assert_eq!(set.states.len(), 12);
        assert_eq!(set.cliffords.len(), 24);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = [C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        let phi_i = [C64::new(h, 0.0), ZERO, ZERO, C64::new(0.0, h)];
        let singlet = [ZERO, C64::new(h, 0.0), C64::new(-h, 0.0), ZERO];
        // reachable from |11> by global gates only up to a local phase
        assert!(set.index_of(&phi_plus).is_none());
        assert!(set.index_of(&phi_i).is_some());
        assert!(set.index_of(&[ONE, ZERO, ZERO, ZERO]).is_some());
        assert!(set.index_of(&singlet).is_none());
    }

    #[test]
    fn generated_circuits_return() {
        let set = enumerate_symmetric_stabilizers().unwrap();
        let t = Timing::default();
        for seed in 0..40 {
            for n in [0, 3, 10] {
                for bc in [build_ssb_circuit(&set, &t, n, 10, seed).unwrap(), build_echo_circuit(&set, &t, n, 10, seed).unwrap()] {
                    let (s, _) = ideal_branch(&bc.circuit, 0.0, &[]).unwrap();
                    assert!((s.amplitudes()[3].norm_sqr() - 1.0).abs() < 1e-12);
                    assert_eq!(bc.trajectory.len(), 11);
                    assert!(bc.circuit.cz_count() >= n && bc.circuit.cz_count() <= n + 2);
                }
            }
        }
    }

    #[test]
    fn pi2_trains_return() {
        let t = Timing::default();
        for mode in [Pi2Mode::SamePhase, Pi2Mode::RandomAxes] {
            for n in [0, 2, 8, 30] {
                let bc = build_pi2_benchmark(&t, 1, n, mode, n as u64).unwrap();
                let (s, _) = ideal_branch(&bc.circuit, 0.0, &[]).unwrap();
                assert!((s.amplitudes()[bc.target[0] as usize].norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
        assert!(build_pi2_benchmark(&t, 1, 3, Pi2Mode::SamePhase, 0).is_err());
    }

    #[test]
    fn decay_fit_recovers_synthetic() {
        let n = vec![0, 4, 8, 12, 16, 20];
        let y: Vec<f64> = n.iter().map(|&k| 0.98 * 0.996f64.powi(k as i32)).collect();
        let run = BenchmarkRun { family: Family::Ssb, n_gates: n, return_prob: y, errors: vec![1e-3; 6], shots: vec![1000; 6] };
        let f = fit_decay(&run).unwrap();
        assert!((f.p - 0.996).abs() < 1e-6 && (f.amplitude - 0.98).abs() < 1e-6);
        let (c, e) = leakage_correct(0.9964, 3e-4, 1.8e-4, 4e-5).unwrap();
        assert!((c - 0.99622).abs() < 1e-12 && (e - 3e-4f64.hypot(4e-5)).abs() < 1e-15);
    }
}
