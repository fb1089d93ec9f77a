//! Builders for the experiment circuits.
//!
//! Conventions: |0> has Z = +1, the CZ is diag(1, 1, 1, -1) with its
//! single-atom phase already absorbed, and rotations are R(theta, phi) on the
//! clock transition. Analysis pulses carry the label "analysis" so scans can
//! rewrite their azimuth.

use super::{ideal_branch, Circuit, OpKind, Timing};
use crate::error::{Error, Result};
use crate::linalg::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// CNOT flipping `t` when `c` is in |1>.
pub fn cnot(circ: &mut Circuit, t: &Timing, c: usize, tgt: usize) {
    circ.local_rotation(t, &[tgt], PI / 2.0, -PI / 2.0);
    circ.cz(t, c, tgt);
    circ.local_rotation(t, &[tgt], PI / 2.0, PI / 2.0);
}

/// CNOT flipping `t` when `c` is in |0>.
pub fn cnot_on_zero(circ: &mut Circuit, t: &Timing, c: usize, tgt: usize) {
    circ.local_rotation(t, &[tgt], PI / 2.0, PI / 2.0);
    circ.cz(t, c, tgt);
    circ.local_rotation(t, &[tgt], PI / 2.0, PI / 2.0);
    circ.virtual_z(&[c], PI);
    circ.virtual_z(&[tgt], PI);
}

fn analysis(circ: &mut Circuit, t: &Timing, atoms: Option<&[usize]>, phi: f64) {
    match atoms {
        None => circ.global_rotation(t, PI / 2.0, phi),
        Some(a) => circ.local_rotation(t, a, PI / 2.0, phi),
    };
    circ.label_last("analysis");
}

/// Bell pair from |11>: global pi/2, CZ, global pi/4, then an optional analysis pulse.
pub fn bell(t: &Timing, analysis_phase: Option<f64>) -> Circuit {
    let mut c = Circuit::new("bell", 2, vec![1, 1]);
    c.global_rotation(t, PI / 2.0, 0.0);
    c.cz(t, 0, 1);
    c.global_rotation(t, PI / 4.0, 0.0);
    if let Some(phi) = analysis_phase {
        analysis(&mut c, t, None, phi);
    }
    c.final_measure();
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeOptions {
    /// Total reconfiguration time between the two entangling stages, in seconds.
    pub idle_time: f64,
    /// Place global pi pulses at the middle and the end of the reconfiguration.
    pub echo: bool,
    /// Keep the single-site phase on the 1-atom register.
    pub single_site_op: bool,
    /// Duration of the single-site operation.
    pub single_site_duration: f64,
    pub analysis_phase: f64,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions { idle_time: 280e-6, echo: true, single_site_op: true, single_site_duration: 240e-6, analysis_phase: 0.0 }
    }
}

/// Atom groups of the 7-atom cascade: sizes 1, 2 and 4.
pub const CASCADE_GROUPS: [&[usize]; 3] = [&[0], &[1, 2], &[3, 4, 5, 6]];

/// Simultaneous preparation of 1-, 2- and 4-atom GHZ states on seven atoms.
///
/// Global pulses act on every register; atoms 3 and 6 receive local pi phases
/// between half pulses so that they stay in |1> while the Bell pairs (1,2) and
/// (4,5) are made, and are then folded into a 4-atom state in the second stage.
pub fn ghz_cascade(t: &Timing, o: &CascadeOptions) -> Result<Circuit> {
    if !(o.idle_time >= 0.0) || !(o.single_site_duration >= 0.0) {
        return Err(Error::InvalidParameter("cascade durations must be non-negative".into()));
    }
    let mut c = Circuit::new("ghz_cascade", 7, vec![1; 7]);
    let spect = [3, 6];
    c.global_rotation(t, PI / 4.0, 0.0);
    c.virtual_z(&spect, PI);
    c.global_rotation(t, PI / 4.0, 0.0);
    c.cz(t, 1, 2).cz(t, 4, 5);
    reconfigure(&mut c, t, o.idle_time, o.echo, &[4, 5]);
    if o.single_site_op {
        c.local_phase(&[0], -PI / 2.0, o.single_site_duration);
        c.label_last("single_site");
    }
    c.global_rotation(t, PI / 4.0, 0.0);
    c.global_rotation(t, PI / 8.0, 0.0);
    c.virtual_z(&spect, PI);
    c.global_rotation(t, PI / 8.0, PI);
    c.cz(t, 3, 4).cz(t, 5, 6);
    c.global_rotation(t, PI / 4.0, PI);
    c.virtual_z(&spect, PI);
    c.global_rotation(t, PI / 4.0, 0.0);
    analysis(&mut c, t, None, o.analysis_phase);
    c.final_measure();
    Ok(c)
}

/// Array reconfiguration of total length `total`: the move itself plus padding idle.
fn reconfigure(c: &mut Circuit, t: &Timing, total: f64, echo: bool, moved: &[usize]) {
    let mv = t.transport.move_duration.min(total);
    let pad = total - mv;
    if echo {
        c.transport(t, moved);
        c.ops.last_mut().expect("transport op").duration = mv / 2.0;
        c.idle(pad / 2.0);
        c.global_rotation(t, PI, 0.0).label_last("echo");
        c.transport(t, moved);
        c.ops.last_mut().expect("transport op").duration = mv / 2.0;
        c.idle(pad / 2.0);
        c.global_rotation(t, PI, 0.0).label_last("echo");
    } else {
        c.transport(t, moved);
        c.ops.last_mut().expect("transport op").duration = mv;
        c.idle(pad);
    }
}

/// GHZ state on a line of atoms: a Bell core, then layers of copy operations.
/// Each copy flips a target held in |1> conditioned on its control.
fn ghz_line(
    c: &mut Circuit,
    t: &Timing,
    core: (usize, usize),
    layers: &[Vec<(usize, usize)>],
    moves_before: &[Option<Vec<usize>>],
) {
    c.local_rotation(t, &[core.0, core.1], PI / 2.0, 0.0);
    c.cz(t, core.0, core.1);
    c.local_rotation(t, &[core.0, core.1], PI / 4.0, 0.0);
    for (k, layer) in layers.iter().enumerate() {
        if let Some(Some(m)) = moves_before.get(k) {
            c.transport(t, m);
        }
        let targets: Vec<usize> = layer.iter().map(|p| p.1).collect();
        c.local_rotation(t, &targets, PI / 2.0, 0.0);
        for &(ctl, tgt) in layer {
            c.cz(t, ctl, tgt);
        }
        c.local_rotation(t, &targets, PI / 2.0, 0.0);
    }
}

/// Append a virtual Z on `atom` making the GHZ coherence on `group` real and positive.
fn fix_coherence(c: &mut Circuit, atom: usize, group: &[usize]) -> Result<()> {
    let (state, _) = ideal_branch(c, 0.0, &[])?;
    let n = c.num_atoms;
    let amps = state.amplitudes();
    // amplitudes of the all-0 and all-1 patterns on `group` with the rest fixed at their majority value
    let mut a0 = C64::new(0.0, 0.0);
    let mut a1 = C64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        let bits: Vec<usize> = (0..n).map(|q| (i >> (n - 1 - q)) & 1).collect();
        if group.iter().all(|&q| bits[q] == 0) && a.norm_sqr() > a0.norm_sqr() {
            a0 = *a;
        }
        if group.iter().all(|&q| bits[q] == 1) && a.norm_sqr() > a1.norm_sqr() {
            a1 = *a;
        }
    }
    let rel = (a1 * a0.conj()).arg();
    if rel.abs() > 1e-12 {
        c.virtual_z(&[atom], -rel);
    }
    Ok(())
}

/// How the second copy in a dual-quadrature readout receives its collective pi/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureShift {
    /// pi/(2N) phase on every atom of the copy.
    PerAtomPhase,
    /// A single atom displaced by a quarter wavelength.
    SingleAtomMove,
}

/// `copies` GHZ states of `size` atoms each, one copy shifted by a collective pi/2
/// before a shared analysis pulse.
pub fn dual_quadrature(t: &Timing, copies: usize, size: usize, shift: QuadratureShift, analysis_phase: f64) -> Result<Circuit> {
    if copies == 0 || copies * size > 12 || !matches!(size, 1 | 2 | 4 | 8) {
        return Err(Error::InvalidParameter(format!("unsupported layout {copies} x {size}")));
    }
    let mut c = Circuit::new("dual_quadrature", copies * size, vec![1; copies * size]);
    for k in 0..copies {
        let base = k * size;
        let group: Vec<usize> = (base..base + size).collect();
        if size == 1 {
            continue;
        }
        let (core, layers, moves) = line_plan(size, base);
        ghz_line(&mut c, t, core, &layers, &moves);
        fix_coherence(&mut c, core.0, &group)?;
    }
    for k in (1..copies).step_by(2) {
        let group: Vec<usize> = (k * size..(k + 1) * size).collect();
        match shift {
            QuadratureShift::PerAtomPhase => {
                c.local_phase(&group, PI / (2.0 * size as f64), t.local_overhead);
            }
            QuadratureShift::SingleAtomMove => {
                let phase = t.transport.displacement_phase(t.transport.lambda / 4.0);
                c.push(OpKind::Transport { phase }, vec![group[0]], t.transport.move_duration, "quarter_wave");
            }
        }
        c.label_last("quadrature");
    }
    analysis(&mut c, t, None, analysis_phase);
    c.final_measure();
    Ok(c)
}

type LinePlan = ((usize, usize), Vec<Vec<(usize, usize)>>, Vec<Option<Vec<usize>>>);

fn line_plan(size: usize, base: usize) -> LinePlan {
    let o = |x: usize| x + base;
    match size {
        2 => ((o(0), o(1)), vec![], vec![]),
        4 => ((o(1), o(2)), vec![vec![(o(1), o(0)), (o(2), o(3))]], vec![]),
        8 => (
            (o(3), o(4)),
            vec![vec![(o(3), o(2)), (o(4), o(5))], vec![(o(3), o(0)), (o(2), o(1)), (o(4), o(7)), (o(5), o(6))]],
            vec![None, Some(vec![o(0), o(7)])],
        ),
        _ => unreachable!("size checked by caller"),
    }
}

/// 8-atom GHZ state on a line using three CZ layers; the outer atoms are moved
/// next to their controls before the last layer.
pub fn ghz8(t: &Timing, analysis_phase: Option<f64>) -> Result<Circuit> {
    let mut c = Circuit::new("ghz8", 8, vec![1; 8]);
    let (core, layers, moves) = line_plan(8, 0);
    ghz_line(&mut c, t, core, &layers, &moves);
    fix_coherence(&mut c, core.0, &(0..8).collect::<Vec<_>>())?;
    if let Some(phi) = analysis_phase {
        analysis(&mut c, t, None, phi);
    }
    c.final_measure();
    Ok(c)
}

/// Atom roles for the logic-spectroscopy circuits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlsRoles {
    pub clock: usize,
    pub ancilla: usize,
    /// Clock atom that sees the same Ramsey pulses but is never mapped.
    pub reference: Option<usize>,
}

impl Default for QlsRoles {
    fn default() -> Self {
        QlsRoles { clock: 0, ancilla: 1, reference: Some(2) }
    }
}

impl QlsRoles {
    fn validate(&self) -> Result<usize> {
        let mut seen = vec![self.clock, self.ancilla];
        if self.clock == self.ancilla {
            return Err(Error::RoleConflict(self.clock));
        }
        if let Some(r) = self.reference {
            if seen.contains(&r) {
                return Err(Error::RoleConflict(r));
            }
            seen.push(r);
        }
        Ok(seen.into_iter().max().expect("non-empty") + 1)
    }

    fn clocks(&self) -> Vec<usize> {
        let mut v = vec![self.clock];
        v.extend(self.reference);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaMode {
    /// A fresh ancilla after each readout.
    Replace,
    /// The imaged ancilla is re-cooled and reused.
    Reuse,
}

/// Map the clock's X basis onto the ancilla, shelve the clocks, read out the ancilla, unshelve.
fn x_measurement(c: &mut Circuit, t: &Timing, roles: &QlsRoles, mode: AncillaMode, round: usize) {
    c.local_rotation(t, &[roles.clock], PI / 2.0, PI / 2.0);
    cnot_on_zero(c, t, roles.clock, roles.ancilla);
    c.local_rotation(t, &[roles.clock], PI / 2.0, -PI / 2.0);
    let clocks = roles.clocks();
    c.push(OpKind::Shelve, clocks.clone(), t.shelve_duration, "");
    let (dead, survival) = match mode {
        AncillaMode::Replace => (t.mcr_dead_time, 1.0),
        AncillaMode::Reuse => (t.reuse_dead_time, t.reuse_survival),
    };
    c.push(OpKind::MidCircuitMeasure { reset: true, survival }, vec![roles.ancilla], dead, &format!("round{round}"));
    c.push(OpKind::Unshelve, clocks, t.shelve_duration, "");
}

/// One round of logic spectroscopy: Ramsey on the clock, X-basis mapping onto
/// the ancilla, mid-circuit ancilla readout, and a final analysis pulse.
pub fn qls_round(t: &Timing, roles: &QlsRoles, evolution_time: f64, analysis_phase: f64) -> Result<Circuit> {
    repeated_qls(t, roles, &[evolution_time], AncillaMode::Replace, 0.0, analysis_phase)
}

/// Several QLS rounds followed by a final Ramsey scan of dark time `final_time`.
pub fn repeated_qls(
    t: &Timing,
    roles: &QlsRoles,
    times: &[f64],
    mode: AncillaMode,
    final_time: f64,
    analysis_phase: f64,
) -> Result<Circuit> {
    let n = roles.validate()?;
    if times.iter().chain([&final_time]).any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidParameter("evolution times must be non-negative".into()));
    }
    let mut c = Circuit::new("qls", n, vec![0; n]);
    let clocks = roles.clocks();
    c.local_rotation(t, &clocks, PI / 2.0, PI / 2.0);
    for (k, &dt) in times.iter().enumerate() {
        c.idle(dt);
        x_measurement(&mut c, t, roles, mode, k);
    }
    c.idle(final_time);
    analysis(&mut c, t, Some(&clocks), analysis_phase);
    c.final_measure();
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityReadout {
    /// Two CNOTs onto the ancilla, which is read mid-circuit.
    Ancilla,
    /// The pair is imaged directly.
    Direct,
}

/// Weight-2 parity: Bell pair on atoms 0 and 1, free evolution, analysis pulse on
/// the pair, and the ZZ parity read on ancilla atom 2 or directly.
pub fn weight2_parity(t: &Timing, evolution_time: f64, readout: ParityReadout, analysis_phase: f64) -> Result<Circuit> {
    if !(evolution_time >= 0.0) {
        return Err(Error::InvalidParameter("evolution time must be non-negative".into()));
    }
    let mut c = Circuit::new("weight2_parity", 3, vec![1, 1, 0]);
    c.local_rotation(t, &[0, 1], PI / 2.0, 0.0);
    c.cz(t, 0, 1);
    c.local_rotation(t, &[0, 1], PI / 4.0, 0.0);
    c.idle(evolution_time);
    analysis(&mut c, t, Some(&[0, 1]), analysis_phase);
    if readout == ParityReadout::Ancilla {
        cnot(&mut c, t, 0, 2);
        cnot(&mut c, t, 1, 2);
        c.push(OpKind::MidCircuitMeasure { reset: false, survival: 1.0 }, vec![2], t.mcr_dead_time, "round0");
    }
    c.final_measure();
    Ok(c)
}

/// Three-atom cluster state from |111>; the middle atom is read in the X basis
/// and the exterior pair is left in a Bell state fixed by that outcome.
pub fn cluster_bell(t: &Timing, analysis_phase: Option<f64>) -> Circuit {
    let mut c = Circuit::new("cluster_bell", 3, vec![1, 1, 1]);
    c.global_rotation(t, PI / 2.0, 0.0);
    c.cz(t, 0, 1).cz(t, 1, 2);
    c.local_rotation(t, &[1], PI / 2.0, 0.0);
    c.push(OpKind::MidCircuitMeasure { reset: false, survival: 1.0 }, vec![1], t.mcr_dead_time, "round0");
    c.virtual_z(&[2], PI);
    if let Some(phi) = analysis_phase {
        analysis(&mut c, t, Some(&[0, 2]), phi);
    }
    c.final_measure();
    c
}

/// Ramsey sequence on `n` independent atoms, the single-atom reference fringe.
pub fn ramsey(t: &Timing, n: usize, dark_time: f64, analysis_phase: f64) -> Circuit {
    let mut c = Circuit::new("ramsey", n, vec![0; n]);
    c.global_rotation(t, PI / 2.0, 0.0);
    c.idle(dark_time);
    analysis(&mut c, t, None, analysis_phase);
    c.final_measure();
    c
}
