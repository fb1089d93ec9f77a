//! Timed circuit representation, experiment builders and the noisy executor.

pub mod builders;
pub mod exec;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;

pub use builders::*;
pub use exec::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OpKind {
    GlobalRotation { theta: f64, phi: f64 },
    LocalRotation { theta: f64, phi: f64 },
    LocalPhase { phase: f64 },
    Cz,
    /// Reconfiguration; `phase` is the displacement phase imparted on the moved atoms.
    Transport { phase: f64 },
    Idle,
    Shelve,
    Unshelve,
    /// Projective readout; `reset` re-prepares the atoms in |0>, `survival` is
    /// the probability each atom is still trapped afterwards.
    MidCircuitMeasure { reset: bool, survival: f64 },
    FinalMeasure,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::GlobalRotation { .. } => "global_rotation",
            OpKind::LocalRotation { .. } => "local_rotation",
            OpKind::LocalPhase { .. } => "local_phase",
            OpKind::Cz => "cz",
            OpKind::Transport { .. } => "transport",
            OpKind::Idle => "idle",
            OpKind::Shelve => "shelve",
            OpKind::Unshelve => "unshelve",
            OpKind::MidCircuitMeasure { .. } => "mid_circuit_measure",
            OpKind::FinalMeasure => "final_measure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitOp {
    pub kind: OpKind,
    pub atoms: Vec<usize>,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub id: String,
    pub num_atoms: usize,
    /// Initial level of each atom.
    pub init: Vec<u8>,
    pub ops: Vec<CircuitOp>,
}

/// Minimal-jerk transport profile `6t^5 - 15t^4 + 10t^3` on normalized time.
pub fn minimal_jerk_position(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("normalized time {t} outside [0, 1]")));
    }
    Ok(t * t * t * (10.0 + t * (-15.0 + 6.0 * t)))
}

pub fn minimal_jerk_velocity(t: f64) -> f64 {
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

pub fn minimal_jerk_acceleration(t: f64) -> f64 {
    60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    /// Clock wavelength in meters.
    pub lambda: f64,
    pub site_spacing: f64,
    /// Duration of one reconfiguration move in seconds.
    pub move_duration: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { lambda: 698e-9, site_spacing: 19.0 * 698e-9, move_duration: 160e-6 }
    }
}

impl TransportConfig {
    /// Optical phase `2 pi d / lambda` picked up by an atom displaced by `d` meters, wrapped to (-pi, pi].
    pub fn displacement_phase(&self, d: f64) -> f64 {
        wrap(2.0 * std::f64::consts::PI * d / self.lambda)
    }

    pub fn sites_phase(&self, sites: i64) -> f64 {
        self.displacement_phase(sites as f64 * self.site_spacing)
    }
}

fn wrap(x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let r = x.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r - tau
    } else if r.abs() < 1e-9 {
        0.0
    } else {
        r
    }
}

/// Durations and rates used when building circuits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Clock-transition Rabi frequency in Hz.
    pub clock_rabi: f64,
    pub cz_duration: f64,
    /// Time for one locally addressed phase or rotation step, in addition to pulse area.
    pub local_overhead: f64,
    pub transport: TransportConfig,
    pub shelve_duration: f64,
    /// Wall-clock added by a mid-circuit readout with a fresh ancilla.
    pub mcr_dead_time: f64,
    /// Wall-clock added when the imaged ancilla is re-cooled and reused.
    pub reuse_dead_time: f64,
    pub reuse_survival: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            clock_rabi: 2.1e3,
            cz_duration: 0.25e-6,
            local_overhead: 20e-6,
            transport: TransportConfig::default(),
            shelve_duration: 100e-6,
            mcr_dead_time: 2.9e-3,
            reuse_dead_time: 20e-3,
            reuse_survival: 0.965,
        }
    }
}

impl Timing {
    pub fn rotation_duration(&self, theta: f64) -> f64 {
        theta.abs() / (2.0 * std::f64::consts::PI * self.clock_rabi)
    }
}

impl Circuit {
    pub fn new(id: &str, num_atoms: usize, init: Vec<u8>) -> Self {
        assert_eq!(init.len(), num_atoms);
        Circuit { id: id.to_string(), num_atoms, init, ops: Vec::new() }
    }

    pub fn all_atoms(&self) -> Vec<usize> {
        (0..self.num_atoms).collect()
    }

    pub fn push(&mut self, kind: OpKind, atoms: Vec<usize>, duration: f64, label: &str) -> &mut Self {
        self.ops.push(CircuitOp { kind, atoms, duration, label: label.to_string() });
        self
    }

    pub fn global_rotation(&mut self, t: &Timing, theta: f64, phi: f64) -> &mut Self {
        let atoms = self.all_atoms();
        self.push(OpKind::GlobalRotation { theta, phi }, atoms, t.rotation_duration(theta), "")
    }

    pub fn local_rotation(&mut self, t: &Timing, atoms: &[usize], theta: f64, phi: f64) -> &mut Self {
        self.push(OpKind::LocalRotation { theta, phi }, atoms.to_vec(), t.rotation_duration(theta), "")
    }

    pub fn local_phase(&mut self, atoms: &[usize], phase: f64, duration: f64) -> &mut Self {
        self.push(OpKind::LocalPhase { phase }, atoms.to_vec(), duration, "")
    }

    /// Zero-duration phase applied in software to the laser frame.
    pub fn virtual_z(&mut self, atoms: &[usize], phase: f64) -> &mut Self {
        self.push(OpKind::LocalPhase { phase }, atoms.to_vec(), 0.0, "virtual")
    }

    pub fn cz(&mut self, t: &Timing, a: usize, b: usize) -> &mut Self {
        self.push(OpKind::Cz, vec![a, b], t.cz_duration, "")
    }

    pub fn idle(&mut self, duration: f64) -> &mut Self {
        let atoms = self.all_atoms();
        self.push(OpKind::Idle, atoms, duration, "")
    }

    pub fn transport(&mut self, t: &Timing, atoms: &[usize]) -> &mut Self {
        self.push(OpKind::Transport { phase: 0.0 }, atoms.to_vec(), t.transport.move_duration, "")
    }

    pub fn final_measure(&mut self) -> &mut Self {
        let atoms = self.all_atoms();
        self.push(OpKind::FinalMeasure, atoms, 0.0, "")
    }

    /// Label the most recently pushed op.
    pub fn label_last(&mut self, label: &str) -> &mut Self {
        if let Some(op) = self.ops.last_mut() {
            op.label = label.to_string();
        }
        self
    }

    /// Wall-clock duration, the sum of all op durations.
    pub fn duration(&self) -> f64 {
        self.ops.iter().map(|o| o.duration).sum()
    }

    /// Set the azimuth of every rotation labelled "analysis".
    pub fn set_analysis_phase(&mut self, phi_new: f64) {
        for op in &mut self.ops {
            if op.label == "analysis" {
                match &mut op.kind {
                    OpKind::GlobalRotation { phi, .. } | OpKind::LocalRotation { phi, .. } => *phi = phi_new,
                    _ => {}
                }
            }
        }
    }

    pub fn with_analysis_phase(&self, phi: f64) -> Circuit {
        let mut c = self.clone();
        c.set_analysis_phase(phi);
        c
    }

    /// Copy with the analysis pulses removed, for population readout.
    pub fn without_analysis(&self) -> Circuit {
        let mut c = self.clone();
        c.ops.retain(|o| o.label != "analysis");
        c
    }

    /// Number of layers of CZ gates, counting runs of consecutive CZ ops on disjoint atoms.
    pub fn cz_layers(&self) -> usize {
        let mut layers = 0;
        let mut used: Vec<usize> = Vec::new();
        let mut in_layer = false;
        for op in &self.ops {
            match op.kind {
                OpKind::Cz => {
                    if !in_layer || op.atoms.iter().any(|a| used.contains(a)) {
                        layers += 1;
                        used.clear();
                    }
                    used.extend(&op.atoms);
                    in_layer = true;
                }
                OpKind::LocalPhase { .. } if op.duration == 0.0 => {}
                _ => in_layer = false,
            }
        }
        layers
    }

    pub fn cz_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o.kind, OpKind::Cz)).count()
    }

    pub fn validate(&self) -> Result<()> {
        for op in &self.ops {
            if !(op.duration >= 0.0) || !op.duration.is_finite() {
                return Err(Error::InvalidParameter(format!("negative or non-finite duration in {}", op.kind.name())));
            }
            for &a in &op.atoms {
                if a >= self.num_atoms {
                    return Err(Error::AtomOutOfRange { index: a, num_atoms: self.num_atoms });
                }
            }
            if matches!(op.kind, OpKind::Cz) && (op.atoms.len() != 2 || op.atoms[0] == op.atoms[1]) {
                return Err(Error::InvalidParameter("cz needs two distinct atoms".into()));
            }
        }
        Ok(())
    }

    /// Insert a global pi pulse before and after op `index` (an echo around a transport).
    pub fn insert_echo(&mut self, t: &Timing, index: usize) {
        let atoms = self.all_atoms();
        let pulse = CircuitOp {
            kind: OpKind::GlobalRotation { theta: std::f64::consts::PI, phi: 0.0 },
            atoms,
            duration: t.rotation_duration(std::f64::consts::PI),
            label: "echo".into(),
        };
        self.ops.insert(index + 1, pulse.clone());
        self.ops.insert(index, pulse);
    }

    /// One op per line: `kind atoms=.. [params] duration=.. [label=..]`.
    pub fn to_text(&self) -> String {
        let init: String = self.init.iter().map(|b| char::from(b'0' + b)).collect();
        let mut out = format!("circuit {} atoms={} init={}\n", self.id, self.num_atoms, init);
        for op in &self.ops {
            let atoms: Vec<String> = op.atoms.iter().map(|a| a.to_string()).collect();
            let _ = write!(out, "{} atoms={}", op.kind.name(), atoms.join(","));
            match &op.kind {
                OpKind::GlobalRotation { theta, phi } | OpKind::LocalRotation { theta, phi } => {
                    let _ = write!(out, " theta={theta:?} phi={phi:?}");
                }
                OpKind::LocalPhase { phase } | OpKind::Transport { phase } => {
                    let _ = write!(out, " phase={phase:?}");
                }
                OpKind::MidCircuitMeasure { reset, survival } => {
                    let _ = write!(out, " reset={reset} survival={survival:?}");
                }
                _ => {}
            }
            let _ = write!(out, " duration={:?}", op.duration);
            if !op.label.is_empty() {
                let _ = write!(out, " label={}", op.label);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let bad = |m: &str| Error::InvalidParameter(format!("circuit text: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let mut h = header.split_whitespace();
        if h.next() != Some("circuit") {
            return Err(bad("missing header"));
        }
        let id = h.next().ok_or_else(|| bad("missing id"))?.to_string();
        let hk = fields(h)?;
        let num_atoms: usize = get(&hk, "atoms")?;
        let init_s = hk.iter().find(|(k, _)| k == "init").map(|(_, v)| v.clone()).ok_or_else(|| bad("missing init"))?;
        let init: Vec<u8> = init_s.bytes().map(|b| b - b'0').collect();
        if init.len() != num_atoms {
            return Err(bad("init length"));
        }
        let mut c = Circuit::new(&id, num_atoms, init);
        for line in lines {
            let mut parts = line.split_whitespace();
            let name = parts.next().ok_or_else(|| bad("empty op"))?;
            let kv = fields(parts)?;
            let atoms_s = kv.iter().find(|(k, _)| k == "atoms").map(|(_, v)| v.clone()).unwrap_or_default();
            let atoms: Vec<usize> = if atoms_s.is_empty() {
                vec![]
            } else {
                atoms_s.split(',').map(|a| a.parse().map_err(|_| bad("atom index"))).collect::<Result<_>>()?
            };
            let kind = match name {
                "global_rotation" => OpKind::GlobalRotation { theta: get(&kv, "theta")?, phi: get(&kv, "phi")? },
                "local_rotation" => OpKind::LocalRotation { theta: get(&kv, "theta")?, phi: get(&kv, "phi")? },
                "local_phase" => OpKind::LocalPhase { phase: get(&kv, "phase")? },
                "cz" => OpKind::Cz,
                "transport" => OpKind::Transport { phase: get(&kv, "phase")? },
                "idle" => OpKind::Idle,
                "shelve" => OpKind::Shelve,
                "unshelve" => OpKind::Unshelve,
                "mid_circuit_measure" => OpKind::MidCircuitMeasure { reset: get(&kv, "reset")?, survival: get(&kv, "survival")? },
                "final_measure" => OpKind::FinalMeasure,
                other => return Err(bad(&format!("unknown op {other}"))),
            };
            let label = kv.iter().find(|(k, _)| k == "label").map(|(_, v)| v.clone()).unwrap_or_default();
            c.ops.push(CircuitOp { kind, atoms, duration: get(&kv, "duration")?, label });
        }
        c.validate()?;
        Ok(c)
    }
}

fn fields<'a>(it: impl Iterator<Item = &'a str>) -> Result<Vec<(String, String)>> {
    it.map(|p| {
        p.split_once('=')
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .ok_or_else(|| Error::InvalidParameter(format!("circuit text: expected key=value, got {p}")))
    })
    .collect()
}

fn get<T: FromStr>(kv: &[(String, String)], key: &str) -> Result<T> {
    kv.iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| Error::InvalidParameter(format!("circuit text: missing or bad {key}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_jerk_boundaries() {
        assert_eq!(minimal_jerk_position(0.0).unwrap(), 0.0);
        assert_eq!(minimal_jerk_position(0.5).unwrap(), 0.5);
        assert_eq!(minimal_jerk_position(1.0).unwrap(), 1.0);
        for t in [0.0, 1.0] {
            assert_eq!(minimal_jerk_velocity(t), 0.0);
            assert_eq!(minimal_jerk_acceleration(t), 0.0);
        }
        assert!(minimal_jerk_position(1.5).is_err());
    }

    #[test]
    fn displacement_phases() {
        let t = TransportConfig::default();
        assert!((t.displacement_phase(698e-9 / 16.0) - std::f64::consts::PI / 8.0).abs() < 1e-12);
        assert_eq!(t.sites_phase(4), 0.0);
        // four sites of 13 um at 160 us per move
        assert!((4.0 * t.site_spacing - 53.0e-6).abs() < 1e-6);
    }

    #[test]
    fn text_round_trip() {
        let t = Timing::default();
        let mut c = Circuit::new("demo", 3, vec![1, 1, 0]);
        c.global_rotation(&t, 0.5, 0.25).cz(&t, 0, 1).idle(1e-4).transport(&t, &[2]);
        c.push(OpKind::MidCircuitMeasure { reset: true, survival: 0.965 }, vec![2], 2.9e-3, "round0");
        c.local_rotation(&t, &[0], 1.0, 2.0).label_last("analysis").final_measure();
        let back = Circuit::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!((c.duration() - c.ops.iter().map(|o| o.duration).sum::<f64>()).abs() == 0.0);
    }
}
