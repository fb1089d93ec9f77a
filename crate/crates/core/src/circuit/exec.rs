//! Noisy shot-by-shot execution of circuits.

use super::{Circuit, OpKind};
use crate::error::{Error, Result};
use crate::linalg::{su2_step, CMatrix, Mat2, C64, ONE, ZERO};
use crate::noise::{synthesize, ClockPsd, FrequencyTrajectory, PhaseTrack, ThermalMotion};
use crate::rng::{self, Stream};
use crate::rydberg::{correct_single_atom_phase, run_trajectory, NoiseDraw, RydbergNoise, RydbergPulse};
use crate::shots::{ShotMetadata, ShotRecord, ShotTable};
use crate::statevec::{phase_matrix, rotation_matrix, sample_index, QuantumState};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ClockNoise {
    None,
    /// One trajectory per shot drawn from `psd` at `sample_rate`.
    Psd { psd: ClockPsd, sample_rate: f64 },
    /// Detuning held fixed within a shot, Gaussian across shots.
    QuasiStatic { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CzModel {
    Ideal,
    /// Ideal CZ followed by a random two-qubit Pauli with probability `error`
    /// and leakage of one atom with probability `leak`.
    Fast { error: f64, leak: f64 },
    /// Full trajectory simulation of the calibrated pulse.
    Mcwf { pulse: RydbergPulse, noise: RydbergNoise },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShelvingModel {
    pub success_prob: f64,
    pub unshelve_coherence: f64,
    pub toggle_error: f64,
}

impl Default for ShelvingModel {
    fn default() -> Self {
        ShelvingModel { success_prob: 1.0, unshelve_coherence: 1.0, toggle_error: 0.0 }
    }
}

impl ShelvingModel {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("success_prob", self.success_prob),
            ("unshelve_coherence", self.unshelve_coherence),
            ("toggle_error", self.toggle_error),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Everything the executor needs besides the circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseContext {
    pub clock: ClockNoise,
    /// Frame detuning in Hz, accumulated during idle and transport segments.
    #[serde(default)]
    pub static_detuning: f64,
    #[serde(default = "ThermalMotion::none")]
    pub thermal: ThermalMotion,
    /// Quasi-static fractional error of the clock Rabi frequency, common to all atoms.
    #[serde(default)]
    pub rabi_error_rms: f64,
    pub cz: CzModel,
    #[serde(default)]
    pub shelving: ShelvingModel,
}

impl NoiseContext {
    pub fn ideal() -> Self {
        NoiseContext {
            clock: ClockNoise::None,
            static_detuning: 0.0,
            thermal: ThermalMotion::none(),
            rabi_error_rms: 0.0,
            cz: CzModel::Ideal,
            shelving: ShelvingModel::default(),
        }
    }

    pub fn with_detuning(mut self, d: f64) -> Self {
        self.static_detuning = d;
        self
    }

    /// Scale every single-qubit error source by `k` in error probability.
    pub fn scale_single_qubit(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.rabi_error_rms *= k.sqrt();
        out.clock = match &self.clock {
            ClockNoise::Psd { psd, sample_rate } => ClockNoise::Psd { psd: psd.scaled(k), sample_rate: *sample_rate },
            ClockNoise::QuasiStatic { sigma } => ClockNoise::QuasiStatic { sigma: sigma * k.sqrt() },
            ClockNoise::None => ClockNoise::None,
        };
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let ClockNoise::Psd { psd, sample_rate } = &self.clock {
            psd.validate()?;
            if !(*sample_rate > 0.0) {
                return Err(Error::InvalidParameter("clock sample rate must be positive".into()));
            }
        }
        if let ClockNoise::QuasiStatic { sigma } = self.clock {
            if !(sigma >= 0.0) {
                return Err(Error::InvalidParameter("quasi-static sigma must be non-negative".into()));
            }
        }
        self.thermal.validate()?;
        if !(self.rabi_error_rms >= 0.0) {
            return Err(Error::InvalidParameter("rabi_error_rms must be non-negative".into()));
        }
        match &self.cz {
            CzModel::Fast { error, leak } if !(0.0..=1.0).contains(error) || !(0.0..=1.0).contains(leak) => {
                return Err(Error::InvalidParameter("CZ error probabilities outside [0, 1]".into()))
            }
            CzModel::Mcwf { noise, .. } => noise.validate()?,
            _ => {}
        }
        self.shelving.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Active,
    Shelved,
    Lost,
}

/// Per-shot laser detuning seen by the atoms.
enum Detuning<'a> {
    Zero,
    Constant(f64),
    Track(&'a FrequencyTrajectory, PhaseTrack),
}

impl Detuning<'_> {
    fn at(&self, t: f64) -> f64 {
        match self {
            Detuning::Zero => 0.0,
            Detuning::Constant(d) => *d,
            Detuning::Track(tr, _) => tr.at(t),
        }
    }

    /// Accumulated phase 2 pi * integral of detuning over [t0, t1].
    fn phase(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Detuning::Zero => 0.0,
            Detuning::Constant(d) => 2.0 * PI * d * (t1 - t0),
            Detuning::Track(_, p) => p.between(t0, t1),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Detuning::Zero)
    }

    fn sample_rate(&self) -> Option<f64> {
        match self {
            Detuning::Track(tr, _) => Some(tr.sample_rate),
            _ => None,
        }
    }
}

/// Rotation of one atom under detuning; exact when the detuning is zero.
fn noisy_rotation(theta: f64, phi: f64, factor: f64, det: &Detuning, t0: f64, dur: f64) -> Mat2 {
    if det.is_zero() || dur == 0.0 {
        return rotation_matrix(theta * factor, phi);
    }
    let steps = match det.sample_rate() {
        Some(fs) => ((dur * fs).ceil() as usize).max(1),
        None => 1,
    };
    let dt = dur / steps as f64;
    // Rabi rate chosen so the nominal area is reached in `dur`.
    let w = theta / (2.0 * dur) * factor;
    let (ax, ay) = (w * phi.cos(), w * phi.sin());
    let mut m = [[ONE, ZERO], [ZERO, ONE]];
    for k in 0..steps {
        let d = det.at(t0 + (k as f64 + 0.5) * dt);
        let s = su2_step(ax, ay, -PI * d, dt);
        m = crate::linalg::mat2_mul(&s, &m);
    }
    m
}

fn pauli(k: usize) -> Mat2 {
    let i = C64::new(0.0, 1.0);
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -i], [i, ZERO]],
        _ => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

fn cz_matrix() -> CMatrix {
    CMatrix::diagonal(&[ONE, ONE, ONE, -ONE])
}

struct Shot {
    state: QuantumState,
    status: Vec<Status>,
    rounds: Vec<Vec<u8>>,
    herald: Vec<bool>,
}

impl Shot {
    fn lose(&mut self, atom: usize) -> Result<()> {
        self.status[atom] = Status::Lost;
        self.herald[atom] = false;
        if !self.state.leaked()[atom] {
            self.state.mark_leaked(atom)?;
        }
        Ok(())
    }

    fn idle_phase(&mut self, atoms: impl Iterator<Item = usize>, phase: f64) -> Result<()> {
        if phase != 0.0 {
            let z = phase_matrix(-phase);
            for a in atoms {
                self.state.apply_single(a, &z)?;
            }
        }
        Ok(())
    }

    /// Projective readout of `atom`, returning the recorded bit.
    fn measure(&mut self, atom: usize, rng: &mut Stream) -> Result<u8> {
        if self.status[atom] == Status::Lost {
            return Ok(0);
        }
        if self.state.leaked()[atom] {
            return Ok(1);
        }
        let p1 = self.state.level_population(atom, 1);
        let bit = u8::from(rng.gen::<f64>() < p1);
        self.state.project(atom, bit as usize)?;
        Ok(bit)
    }
}

/// Execute `circuit` for `shots` shots. Shot `i` draws all randomness from stream `(seed, i)`.
pub fn execute(circuit: &Circuit, ctx: &NoiseContext, shots: usize, seed: u64) -> Result<ShotTable> {
    circuit.validate()?;
    ctx.validate()?;
    let results = rng::par_map(shots, |i| run_shot(circuit, ctx, None, &mut rng::stream(seed, i as u64)));
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ShotTable::new(
        circuit.num_atoms,
        records,
        ShotMetadata { circuit_id: circuit.id.clone(), seed, scan_variable: None, scan_value: None },
    ))
}

/// Execute with caller-supplied clock trajectories, one per shot.
pub fn execute_with_trajectories(
    circuit: &Circuit,
    ctx: &NoiseContext,
    trajectories: &[FrequencyTrajectory],
    seed: u64,
) -> Result<ShotTable> {
    circuit.validate()?;
    ctx.validate()?;
    let need = circuit.duration();
    for tr in trajectories {
        if tr.duration() + 1e-12 < need {
            return Err(Error::CircuitTooLong { circuit: need, trajectory: tr.duration() });
        }
    }
    let results =
        rng::par_map(trajectories.len(), |i| run_shot(circuit, ctx, Some(&trajectories[i]), &mut rng::stream(seed, i as u64)));
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ShotTable::new(
        circuit.num_atoms,
        records,
        ShotMetadata { circuit_id: circuit.id.clone(), seed, scan_variable: None, scan_value: None },
    ))
}

fn run_shot(circuit: &Circuit, ctx: &NoiseContext, supplied: Option<&FrequencyTrajectory>, rng: &mut Stream) -> Result<ShotRecord> {
    let n = circuit.num_atoms;
    let total = circuit.duration();
    let owned;
    let det = match (supplied, &ctx.clock) {
        (Some(tr), _) => Detuning::Track(tr, tr.cumulative_phase()),
        (None, ClockNoise::Psd { psd, sample_rate }) if !psd.is_zero() => {
            owned = synthesize(psd, total, *sample_rate, rng)?;
            if owned.duration() + 1e-12 < total {
                return Err(Error::CircuitTooLong { circuit: total, trajectory: owned.duration() });
            }
            Detuning::Track(&owned, owned.cumulative_phase())
        }
        (None, ClockNoise::QuasiStatic { sigma }) if *sigma > 0.0 => {
            Detuning::Constant(sigma * Normal::new(0.0, 1.0).expect("unit normal").sample(rng))
        }
        _ => Detuning::Zero,
    };
    let common = if ctx.rabi_error_rms > 0.0 {
        1.0 + ctx.rabi_error_rms * Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
    } else {
        1.0
    };
    let factors: Vec<f64> = (0..n)
        .map(|_| {
            let thermal = if ctx.thermal.nbar > 0.0 && ctx.thermal.eta > 0.0 {
                crate::noise::sample_thermal_rabi(&ctx.thermal, 1.0, rng)
            } else {
                1.0
            };
            thermal * common
        })
        .collect();

    let init: Vec<usize> = circuit.init.iter().map(|&b| b as usize).collect();
    let mut shot = Shot {
        state: QuantumState::new(n, 2, &init)?,
        status: vec![Status::Active; n],
        rounds: Vec::new(),
        herald: vec![true; n],
    };
    let mut t = 0.0;
    let mut final_bits: Option<Vec<u8>> = None;
    for op in &circuit.ops {
        let t1 = t + op.duration;
        let noise_phase = det.phase(t, t1);
        match &op.kind {
            OpKind::GlobalRotation { theta, phi } | OpKind::LocalRotation { theta, phi } => {
                for a in 0..n {
                    let addressed = op.atoms.contains(&a) && shot.status[a] == Status::Active;
                    if addressed {
                        let m = noisy_rotation(*theta, *phi, factors[a], &det, t, op.duration);
                        shot.state.apply_single(a, &m)?;
                    } else {
                        shot.idle_phase(std::iter::once(a), noise_phase)?;
                    }
                }
            }
            OpKind::LocalPhase { phase } => {
                shot.state.apply_local_phase(&op.atoms, *phase)?;
                shot.idle_phase(0..n, noise_phase)?;
            }
            OpKind::Idle | OpKind::Transport { .. } => {
                if let OpKind::Transport { phase } = op.kind {
                    if phase != 0.0 {
                        shot.state.apply_local_phase(&op.atoms, phase)?;
                    }
                }
                let frame = 2.0 * PI * ctx.static_detuning * op.duration;
                shot.idle_phase(0..n, noise_phase + frame)?;
            }
            OpKind::Cz => {
                let (a, b) = (op.atoms[0], op.atoms[1]);
                if shot.status[a] != Status::Lost && shot.status[b] != Status::Lost {
                    apply_cz(&mut shot.state, &ctx.cz, (a, b), rng)?;
                }
                shot.idle_phase(0..n, noise_phase)?;
            }
            OpKind::Shelve => {
                for &a in &op.atoms {
                    if shot.status[a] != Status::Active {
                        continue;
                    }
                    if rng.gen::<f64>() < ctx.shelving.success_prob {
                        shot.status[a] = Status::Shelved;
                    } else {
                        shot.lose(a)?;
                    }
                }
                shot.idle_phase(0..n, noise_phase)?;
            }
            OpKind::Unshelve => {
                let flip = (1.0 - ctx.shelving.unshelve_coherence) / 2.0;
                for &a in &op.atoms {
                    if shot.status[a] != Status::Shelved {
                        continue;
                    }
                    shot.status[a] = Status::Active;
                    let u: f64 = rng.gen();
                    let v: f64 = rng.gen();
                    let flips = u8::from(u < flip) + u8::from(v < ctx.shelving.toggle_error);
                    if flips % 2 == 1 {
                        shot.state.apply_local_phase(&[a], PI)?;
                    }
                }
                shot.idle_phase(0..n, noise_phase)?;
            }
            OpKind::MidCircuitMeasure { reset, survival } => {
                let mut round = Vec::with_capacity(op.atoms.len());
                for &a in &op.atoms {
                    let bit = shot.measure(a, rng)?;
                    round.push(bit);
                    if *reset && shot.status[a] != Status::Lost {
                        shot.state.reset_atom(a, 0)?;
                    }
                    if rng.gen::<f64>() >= *survival {
                        shot.lose(a)?;
                    }
                }
                shot.rounds.push(round);
                shot.idle_phase(0..n, noise_phase)?;
            }
            OpKind::FinalMeasure => {
                final_bits = Some(final_readout(&mut shot, rng)?);
            }
        }
        t = t1;
    }
    let bits = match final_bits {
        Some(b) => b,
        None => final_readout(&mut shot, rng)?,
    };
    let mut rec = ShotRecord::new(bits, shot.state.leaked().to_vec());
    for (a, s) in shot.status.iter().enumerate() {
        if *s == Status::Lost {
            rec.leaked[a] = false;
        }
    }
    rec.herald = shot.herald;
    rec.ancilla = shot.rounds;
    Ok(rec)
}

fn final_readout(shot: &mut Shot, rng: &mut Stream) -> Result<Vec<u8>> {
    let idx = sample_index(shot.state.amplitudes(), rng);
    let n = shot.state.num_atoms();
    let levels = shot.state.levels_of(idx);
    Ok((0..n)
        .map(|a| match shot.status[a] {
            Status::Lost => 0,
            _ if shot.state.leaked()[a] => 1,
            _ => u8::from(levels[a] == 1),
        })
        .collect())
}

fn apply_cz(state: &mut QuantumState, model: &CzModel, pair: (usize, usize), rng: &mut Stream) -> Result<()> {
    match model {
        CzModel::Ideal => state.apply_two_qubit_unitary(pair, &cz_matrix()),
        CzModel::Fast { error, leak } => {
            state.apply_two_qubit_unitary(pair, &cz_matrix())?;
            if rng.gen::<f64>() < *error {
                let k = rng.gen_range(1..16usize);
                let (pa, pb) = (k / 4, k % 4);
                if pa > 0 {
                    state.apply_single(pair.0, &pauli(pa))?;
                }
                if pb > 0 {
                    state.apply_single(pair.1, &pauli(pb))?;
                }
            }
            if rng.gen::<f64>() < *leak {
                let atom = if rng.gen::<bool>() { pair.0 } else { pair.1 };
                if !state.leaked()[atom] {
                    state.mark_leaked(atom)?;
                }
            }
            Ok(())
        }
        CzModel::Mcwf { pulse, noise } => {
            let mut wide = state.to_three_level();
            let draw = NoiseDraw::sample(pulse, noise, rng)?;
            run_trajectory(pulse, noise, &draw, &mut wide, pair, rng)?;
            correct_single_atom_phase(pulse, &mut wide, pair)?;
            *state = wide.to_two_level();
            state.normalize();
            Ok(())
        }
    }
}

/// Noiseless run that forces mid-circuit outcomes. Returns the post-measurement
/// state and the probability of the forced outcome record. Final measurements are skipped.
/// `detuning` is the frame detuning applied during idle and transport.
pub fn ideal_branch(circuit: &Circuit, detuning: f64, outcomes: &[u8]) -> Result<(QuantumState, f64)> {
    circuit.validate()?;
    let init: Vec<usize> = circuit.init.iter().map(|&b| b as usize).collect();
    let mut s = QuantumState::new(circuit.num_atoms, 2, &init)?;
    let mut prob = 1.0;
    let mut next = outcomes.iter();
    for op in &circuit.ops {
        match &op.kind {
            OpKind::GlobalRotation { theta, phi } | OpKind::LocalRotation { theta, phi } => {
                s.apply_rotation(&op.atoms, *theta, *phi)?
            }
            OpKind::LocalPhase { phase } => s.apply_local_phase(&op.atoms, *phase)?,
            OpKind::Cz => s.apply_two_qubit_unitary((op.atoms[0], op.atoms[1]), &cz_matrix())?,
            OpKind::Idle | OpKind::Transport { .. } => {
                if let OpKind::Transport { phase } = op.kind {
                    s.apply_local_phase(&op.atoms, phase)?;
                }
                let frame = 2.0 * PI * detuning * op.duration;
                if frame != 0.0 {
                    let all: Vec<usize> = (0..circuit.num_atoms).collect();
                    s.apply_local_phase(&all, -frame)?;
                }
            }
            OpKind::MidCircuitMeasure { reset, .. } => {
                for &a in &op.atoms {
                    let bit = *next.next().ok_or_else(|| {
                        Error::InvalidParameter("not enough forced outcomes for mid-circuit readout".into())
                    })? as usize;
                    let p = s.project(a, bit)?;
                    prob *= p;
                    if p == 0.0 {
                        return Ok((s, 0.0));
                    }
                    if *reset {
                        s.reset_atom(a, 0)?;
                    }
                }
            }
            OpKind::Shelve | OpKind::Unshelve | OpKind::FinalMeasure => {}
        }
    }
    Ok((s, prob))
}

/// Exact parity of `atoms` at the end of a noiseless circuit without mid-circuit readout.
pub fn ideal_parity(circuit: &Circuit, detuning: f64, atoms: &[usize]) -> Result<f64> {
    let (s, _) = ideal_branch(circuit, detuning, &[])?;
    s.parity(atoms)
}
