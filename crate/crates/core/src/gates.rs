//! The virtual-spin gate set: one-qubit rotations as double-frequency
//! pulses and controlled negations as single π pulses.
//!
//! Logical index is `2·Q + R`. In the virtual encoding `R` toggles across
//! the `ε₁₂`/`ε₃₄` lines and `Q` across `ε₁₃`/`ε₂₄`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::encoding::BasisMap;
use crate::error::{Error, Result};
use crate::pulse::{self, PulseProgram, PulseTone};
use crate::qlin::{CMatrix, C64};
use crate::spectrum::ALLOWED_THRESHOLD;
use crate::spinsys::Eigensystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    RotQ,
    RotR,
    CnotQToR,
    CnotRToQ,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::RotQ => "rot_q",
            GateKind::RotR => "rot_r",
            GateKind::CnotQToR => "cnot_q_to_r",
            GateKind::CnotRToQ => "cnot_r_to_q",
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RotQ | GateKind::RotR)
    }

    /// Level pairs `(j, k)` toggled by the gate, with `j` the label whose
    /// logical bit is 0.
    fn transitions(self) -> &'static [(usize, usize)] {
        match self {
            GateKind::RotQ => &[(1, 3), (2, 4)],
            GateKind::RotR => &[(1, 2), (3, 4)],
            GateKind::CnotQToR => &[(3, 4)],
            GateKind::CnotRToQ => &[(2, 4)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub kind: GateKind,
    /// rad, rotations only
    #[serde(default)]
    pub angle: f64,
    /// rad, rotations only
    #[serde(default)]
    pub axis_phase: f64,
}

impl GateSpec {
    pub fn rot_q(angle: f64, axis_phase: f64) -> Self {
        Self { kind: GateKind::RotQ, angle, axis_phase }
    }

    pub fn rot_r(angle: f64, axis_phase: f64) -> Self {
        Self { kind: GateKind::RotR, angle, axis_phase }
    }

    pub fn cnot_q_to_r() -> Self {
        Self { kind: GateKind::CnotQToR, angle: 0.0, axis_phase: 0.0 }
    }

    pub fn cnot_r_to_q() -> Self {
        Self { kind: GateKind::CnotRToQ, angle: 0.0, axis_phase: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.angle.is_finite() || !self.axis_phase.is_finite() {
            return Err(Error::InvalidArgument("gate angle and axis_phase must be finite".into()));
        }
        if self.kind.is_rotation() && !(self.angle > -2.0 * PI && self.angle <= 2.0 * PI) {
            return Err(Error::InvalidArgument("gate angle must lie in (-2π, 2π]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateReport {
    pub fidelity_raw: f64,
    pub fidelity_phase_opt: f64,
    /// s
    pub duration: f64,
    /// `truth_table[input][output]`, logical indices.
    pub truth_table: [[f64; 4]; 4],
}

/// Tone phase that makes the pair `(j, k)` rotate about `axis` in the
/// logical `(|bit=0⟩, |bit=1⟩)` frame.
fn tone_phase(es: &Eigensystem, j: usize, k: usize, axis: f64) -> f64 {
    let n = pulse::drive_element(es, j, k);
    if es.energy(j) >= es.energy(k) {
        axis + n.arg()
    } else {
        -(axis + n.arg())
    }
}

/// Pulse program realizing `gate` with maximum tone amplitude `omega1`.
pub fn synthesize(gate: &GateSpec, es: &Eigensystem, omega1: f64) -> Result<PulseProgram> {
    gate.validate()?;
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::InvalidArgument("omega1 must be finite and > 0".into()));
    }
    let (angle, axis) = if gate.kind.is_rotation() {
        if gate.angle < 0.0 {
            (-gate.angle, gate.axis_phase + PI)
        } else {
            (gate.angle, gate.axis_phase)
        }
    } else {
        (PI, 0.0)
    };
    if angle == 0.0 {
        return Ok(PulseProgram::empty());
    }

    let pairs = gate.kind.transitions();
    let elements: Vec<f64> = pairs.iter().map(|&(j, k)| pulse::drive_element(es, j, k).norm()).collect();
    for (&(j, k), m) in pairs.iter().zip(&elements) {
        if m * m <= ALLOWED_THRESHOLD {
            return Err(Error::DegenerateDrive(format!(
                "{}: drive element on ({j},{k}) vanishes at delta = {:.3e}",
                gate.kind.name(),
                es.theta * es.phi.cos()
            )));
        }
    }
    let weakest = elements.iter().copied().fold(f64::INFINITY, f64::min);
    let duration = angle / (2.0 * omega1 * weakest);
    let tones = pairs
        .iter()
        .zip(&elements)
        .map(|(&(j, k), m)| PulseTone {
            carrier: es.transition_frequency(j, k).abs(),
            amplitude: omega1 * weakest / m,
            phase: tone_phase(es, j, k, axis),
        })
        .collect();
    Ok(PulseProgram::single(tones, duration))
}

/// Target unitary in the logical basis.
pub fn ideal_unitary(gate: &GateSpec) -> CMatrix {
    let mut u = CMatrix::zeros(4).unwrap();
    match gate.kind {
        GateKind::RotQ | GateKind::RotR => {
            let (c, s) = ((gate.angle / 2.0).cos(), (gate.angle / 2.0).sin());
            let off = C64::new(0.0, -s) * C64::from_polar(1.0, gate.axis_phase);
            let stride = if gate.kind == GateKind::RotQ { 2 } else { 1 };
            for i in 0..4 {
                u[(i, i)] = C64::new(c, 0.0);
                if i & stride == 0 {
                    let f = i | stride;
                    u[(f, i)] = off;
                    u[(i, f)] = -off.conj();
                }
            }
        }
        GateKind::CnotQToR | GateKind::CnotRToQ => {
            let (control, target) = if gate.kind == GateKind::CnotQToR { (2, 1) } else { (1, 2) };
            for i in 0..4 {
                let out = if i & control != 0 { i ^ target } else { i };
                u[(out, i)] = C64::new(1.0, 0.0);
            }
        }
    }
    u
}

/// `|Tr(U_ideal†·U)|² / 16` and the same maximized over a diagonal phase
/// correction `D·U`. The maximum is `(Σᵢ |(U·U_ideal†)ᵢᵢ|)² / 16`.
pub fn fidelities(u: &CMatrix, ideal: &CMatrix) -> (f64, f64) {
    let w = *u * ideal.adjoint();
    let raw = w.trace().norm_sqr() / 16.0;
    let opt = (0..4).map(|i| w[(i, i)].norm()).sum::<f64>().powi(2) / 16.0;
    (raw.min(1.0), opt.min(1.0).max(raw.min(1.0)))
}

/// Lab-frame propagator mapped to the logical frame:
/// `M†·e^{iH₀T}·U·M` with `H₀ = H(V=0)`.
pub fn logical_propagator(program: &PulseProgram, es: &Eigensystem, map: &BasisMap) -> Result<CMatrix> {
    let h0 = es.hamiltonian();
    let u = pulse::lab_propagator(program, &h0, f64::INFINITY)?.matrix;
    Ok(to_logical_frame(&u, program.total_duration(), es, map))
}

/// Removes free precession over `t` from a lab propagator and rewrites it
/// in the logical basis.
pub fn to_logical_frame(u: &CMatrix, t: f64, es: &Eigensystem, map: &BasisMap) -> CMatrix {
    let v = es.state_matrix();
    let mut back = CMatrix::zeros(4).unwrap();
    for k in 0..4 {
        back[(k, k)] = C64::from_polar(1.0, es.energies[k] * t);
    }
    map.to_logical(&(v * back * v.adjoint() * *u))
}

pub fn score(program: &PulseProgram, gate: &GateSpec, es: &Eigensystem, map: &BasisMap) -> Result<GateReport> {
    let u = logical_propagator(program, es, map)?;
    Ok(report_for(&u, gate, program.total_duration()))
}

pub fn report_for(u: &CMatrix, gate: &GateSpec, duration: f64) -> GateReport {
    let (fidelity_raw, fidelity_phase_opt) = fidelities(u, &ideal_unitary(gate));
    let mut truth_table = [[0.0; 4]; 4];
    for (input, row) in truth_table.iter_mut().enumerate() {
        for (output, cell) in row.iter_mut().enumerate() {
            *cell = u[(output, input)].norm_sqr();
        }
    }
    GateReport { fidelity_raw, fidelity_phase_opt, duration, truth_table }
}
