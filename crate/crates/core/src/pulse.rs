//! Resonant RF excitation of the spin pair.
//!
//! A tone of carrier `ω`, amplitude `ω₁` and phase `ϕ` adds
//! `2ω₁·cos(ωt + ϕ)·(I_x + S_x)` to the Hamiltonian, so its co-rotating
//! part has amplitude `ω₁`. On a resonant pair `(j, k)` the population
//! then oscillates at the Rabi frequency `Ω = 2ω₁·|⟨Ψ_j|I_x+S_x|Ψ_k⟩|`.
//!
//! Time is a single global clock starting at zero at the first segment, so
//! tone phases stay continuous across segment boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlin::{self, CMatrix, StateVec, C64};
use crate::spectrum::{ALLOWED_PAIRS, ALLOWED_THRESHOLD};
use crate::spinsys::{build_spin_ops, Eigensystem, SpinOps};

/// Steps never exceed `1 / (STEPS_PER_UNIT_FREQUENCY · max frequency)`.
pub const STEPS_PER_UNIT_FREQUENCY: f64 = 50.0;
/// Relative carrier mismatch still treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;
pub const MAX_TONES: usize = 2;
/// Default amplitude as a fraction of `θ`.
pub const DEFAULT_OMEGA1_OVER_THETA: f64 = 0.02;
/// Amplitude above this fraction of the nearest competing line spacing
/// triggers a selectivity warning.
pub const SELECTIVITY_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTone {
    /// rad/s
    pub carrier: f64,
    /// `ω₁`, rad/s
    pub amplitude: f64,
    /// rad
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub tones: Vec<PulseTone>,
    /// s
    pub duration: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseProgram {
    pub segments: Vec<Segment>,
}

impl PulseProgram {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Free evolution for `duration`.
    pub fn delay(duration: f64) -> Self {
        Self { segments: vec![Segment { tones: vec![], duration }] }
    }

    pub fn single(tones: Vec<PulseTone>, duration: f64) -> Self {
        Self { segments: vec![Segment { tones, duration }] }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// This program followed by `next`.
    pub fn then(mut self, next: &PulseProgram) -> Self {
        self.segments.extend(next.segments.iter().cloned());
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "segment {i}: duration must be finite and > 0"
                )));
            }
            if s.tones.len() > MAX_TONES {
                return Err(Error::InvalidArgument(format!(
                    "segment {i}: at most {MAX_TONES} simultaneous tones"
                )));
            }
            for t in &s.tones {
                if !(t.amplitude >= 0.0) || !t.carrier.is_finite() || !t.phase.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "segment {i}: tone amplitude must be ≥ 0 and all values finite"
                    )));
                }
            }
        }
        Ok(())
    }

    fn max_frequency(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| s.tones.iter())
            .map(|t| t.carrier.abs().max(t.amplitude))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Propagator {
    pub matrix: CMatrix,
}

/// `I_x + S_x`.
pub fn drive_operator(ops: &SpinOps) -> CMatrix {
    ops.total_x()
}

/// `⟨Ψ_j|I_x+S_x|Ψ_k⟩`.
pub fn drive_element(es: &Eigensystem, j: usize, k: usize) -> C64 {
    es.matrix_element(&drive_operator(&build_spin_ops()), j, k)
}

/// `Ω = 2ω₁·|⟨Ψ_j|I_x+S_x|Ψ_k⟩|`.
pub fn rabi_frequency(es: &Eigensystem, j: usize, k: usize, omega1: f64) -> f64 {
    2.0 * omega1 * drive_element(es, j, k).norm()
}

/// Smallest distance from line `(j, k)` to any other allowed line.
pub fn selectivity_gap(es: &Eigensystem, j: usize, k: usize) -> f64 {
    let target = es.transition_frequency(j, k).abs();
    ALLOWED_PAIRS
        .iter()
        .filter(|&&pair| pair != (j, k) && pair != (k, j))
        .map(|&(a, b)| (es.transition_frequency(a, b).abs() - target).abs())
        .fold(f64::INFINITY, f64::min)
}

fn check_selectivity(es: &Eigensystem, j: usize, k: usize, omega1: f64) {
    let gap = selectivity_gap(es, j, k);
    if omega1 > SELECTIVITY_FRACTION * gap {
        log::warn!(
            "amplitude {omega1} on ({j},{k}) exceeds {SELECTIVITY_FRACTION} x line spacing {gap}"
        );
    }
}

/// Step length actually used for a program.
pub fn step_limit(program: &PulseProgram, h0: &CMatrix, dt_max: f64) -> f64 {
    let spectrum = qlin::hermitian_eigensystem(h0).map(|e| {
        let v = e.values();
        (v[v.len() - 1] - v[0]).max(v.iter().map(|x| x.abs()).fold(0.0, f64::max))
    });
    let scale = program.max_frequency().max(spectrum.unwrap_or(0.0));
    if scale > 0.0 {
        dt_max.min(1.0 / (STEPS_PER_UNIT_FREQUENCY * scale))
    } else {
        dt_max
    }
}

/// Lab-frame propagator of the whole program.
pub fn lab_propagator(program: &PulseProgram, h0: &CMatrix, dt_max: f64) -> Result<Propagator> {
    let integ = LabIntegrator::new(program, h0, dt_max)?;
    Ok(Propagator { matrix: integ.propagate(0.0, program.total_duration())? })
}

/// States `U(t)ψ₀` at each of the ascending `times`; past the end of the
/// program the evolution is free.
pub fn lab_trajectory(
    program: &PulseProgram,
    h0: &CMatrix,
    dt_max: f64,
    psi0: &StateVec,
    times: &[f64],
) -> Result<Vec<StateVec>> {
    let integ = LabIntegrator::new(program, h0, dt_max)?;
    let mut out = Vec::with_capacity(times.len());
    let mut psi = *psi0;
    let mut t = 0.0;
    for &next in times {
        if next < t {
            return Err(Error::InvalidArgument("times must be ascending and ≥ 0".into()));
        }
        psi = integ.propagate(t, next)?.apply(&psi);
        t = next;
        out.push(psi);
    }
    Ok(out)
}

/// Midpoint-rule integrator over piecewise-constant step exponentials.
pub struct LabIntegrator<'a> {
    program: &'a PulseProgram,
    h0: CMatrix,
    drive: CMatrix,
    free: qlin::EigenDecomp,
    step: f64,
}

impl<'a> LabIntegrator<'a> {
    pub fn new(program: &'a PulseProgram, h0: &CMatrix, dt_max: f64) -> Result<Self> {
        if !(dt_max > 0.0) {
            return Err(Error::InvalidArgument("dt_max must be > 0".into()));
        }
        program.validate()?;
        let free = qlin::hermitian_eigensystem(h0)?;
        Ok(Self {
            program,
            h0: *h0,
            drive: drive_operator(&build_spin_ops()),
            free,
            step: step_limit(program, h0, dt_max),
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `U(t1, t0)` on the global clock.
    pub fn propagate(&self, t0: f64, t1: f64) -> Result<CMatrix> {
        let mut u = CMatrix::identity(4)?;
        if t1 <= t0 {
            return Ok(u);
        }
        let mut seg_start = 0.0;
        for seg in &self.program.segments {
            let seg_end = seg_start + seg.duration;
            let a = t0.max(seg_start);
            let b = t1.min(seg_end);
            if b > a {
                u = self.piece(seg, a, b)? * u;
            }
            seg_start = seg_end;
            if seg_start >= t1 {
                break;
            }
        }
        let tail_start = t0.max(seg_start);
        if t1 > tail_start {
            u = self.free.evolution(t1 - tail_start) * u;
        }
        Ok(u)
    }

    fn piece(&self, seg: &Segment, a: f64, b: f64) -> Result<CMatrix> {
        let tones: Vec<PulseTone> =
            seg.tones.iter().copied().filter(|t| t.amplitude != 0.0).collect();
        if tones.is_empty() {
            return Ok(self.free.evolution(b - a));
        }
        let n = ((b - a) / self.step).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let mut u = CMatrix::identity(4)?;
        for i in 0..n {
            let tm = a + (i as f64 + 0.5) * h;
            let f: f64 =
                tones.iter().map(|t| 2.0 * t.amplitude * (t.carrier * tm + t.phase).cos()).sum();
            let ham = self.h0 + self.drive.scale_real(f);
            u = qlin::expm_i(&ham, h)? * u;
        }
        Ok(u)
    }
}

/// Labels `(upper, lower)` of the allowed line nearest to `carrier`.
fn resonant_pair(es: &Eigensystem, carrier: f64) -> Result<(usize, usize)> {
    let (j, k, f) = ALLOWED_PAIRS
        .iter()
        .map(|&(j, k)| (j, k, es.transition_frequency(j, k)))
        .min_by(|a, b| (a.2.abs() - carrier).abs().total_cmp(&(b.2.abs() - carrier).abs()))
        .expect("four pairs");
    if (f.abs() - carrier).abs() >= RESONANCE_TOL * f.abs() {
        return Err(Error::NonResonant { carrier, from: j, to: k, frequency: f.abs() });
    }
    Ok(if f >= 0.0 { (j, k) } else { (k, j) })
}

/// Rotating-frame Hamiltonian of one segment in the eigenbasis
/// (0-based indices, Ψ₁ first).
fn rwa_segment_hamiltonian(es: &Eigensystem, seg: &Segment) -> Result<CMatrix> {
    let mut h = CMatrix::zeros(4)?;
    for tone in &seg.tones {
        let (up, lo) = resonant_pair(es, tone.carrier)?;
        let g = drive_element(es, up, lo) * C64::from_polar(tone.amplitude, -tone.phase);
        h[(up - 1, lo - 1)] += g;
        h[(lo - 1, up - 1)] += g.conj();
    }
    Ok(h)
}

/// Interaction-frame RWA propagator in the eigenbasis (`⟨Ψ_j|U_I|Ψ_k⟩`).
pub fn rwa_interaction_propagator(program: &PulseProgram, es: &Eigensystem) -> Result<CMatrix> {
    program.validate()?;
    let mut u = CMatrix::identity(4)?;
    for seg in &program.segments {
        if seg.tones.iter().all(|t| t.amplitude == 0.0) {
            continue;
        }
        let h = rwa_segment_hamiltonian(es, seg)?;
        u = qlin::expm_i(&h, seg.duration)? * u;
    }
    Ok(u)
}

/// RWA propagator transformed back to the lab frame and product basis:
/// `V·e^{-iET}·U_I·V†`.
pub fn rwa_propagator(program: &PulseProgram, es: &Eigensystem) -> Result<Propagator> {
    let ui = rwa_interaction_propagator(program, es)?;
    let t = program.total_duration();
    let mut phases = CMatrix::zeros(4)?;
    for k in 0..4 {
        phases[(k, k)] = C64::from_polar(1.0, -es.energies[k] * t);
    }
    let v = es.state_matrix();
    Ok(Propagator { matrix: v * phases * ui * v.adjoint() })
}

/// Single resonant π pulse on `(j, k)`: carrier `|ε_j − ε_k|`, duration
/// `π / Ω`.
pub fn calibrate_pi(transition: (usize, usize), omega1: f64, es: &Eigensystem) -> Result<PulseProgram> {
    calibrate_rotation(transition, std::f64::consts::PI, 0.0, omega1, es)
}

/// Resonant rotation by `angle` on `(j, k)` with tone phase `phase`.
pub fn calibrate_rotation(
    transition: (usize, usize),
    angle: f64,
    phase: f64,
    omega1: f64,
    es: &Eigensystem,
) -> Result<PulseProgram> {
    let (j, k) = transition;
    if !(1..=4).contains(&j) || !(1..=4).contains(&k) || j == k {
        return Err(Error::InvalidArgument(format!("invalid transition ({j},{k})")));
    }
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::InvalidArgument("omega1 must be finite and > 0".into()));
    }
    if drive_element(es, j, k).norm_sqr() <= ALLOWED_THRESHOLD {
        return Err(Error::ForbiddenTransition(j, k));
    }
    check_selectivity(es, j, k, omega1);
    let carrier = es.transition_frequency(j, k).abs();
    let duration = angle.abs() / rabi_frequency(es, j, k, omega1);
    if duration == 0.0 {
        return Ok(PulseProgram::empty());
    }
    Ok(PulseProgram::single(vec![PulseTone { carrier, amplitude: omega1, phase }], duration))
}

/// `ω₁ = 0.02·θ`.
pub fn default_omega1(es: &Eigensystem) -> f64 {
    DEFAULT_OMEGA1_OVER_THETA * es.theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinsys::{build_hamiltonian, diagonalize, SystemParams};
    use std::f64::consts::PI;

    const DT: f64 = 1e-3;

    fn setup() -> (SystemParams, Eigensystem, CMatrix) {
        let p = SystemParams::new(500.0, 40.0, 30.0);
        let es = diagonalize(&p).unwrap();
        let h0 = build_hamiltonian(&p, false);
        (p, es, h0)
    }

    #[test]
    fn drive_elements() {
        let (_, es, _) = setup();
        assert!((drive_element(&es, 1, 2).re - 0.632455532033676).abs() < 1e-12);
        assert!((drive_element(&es, 3, 4).re - 0.316227766016838).abs() < 1e-12);
        assert!(drive_element(&es, 1, 4).norm() < 1e-15);
        assert!(drive_element(&es, 2, 3).norm() < 1e-15);
    }

    #[test]
    fn free_evolution_is_exact() {
        let (_, _, h0) = setup();
        let u = lab_propagator(&PulseProgram::delay(0.37), &h0, DT).unwrap();
        assert!(u.matrix.max_abs_diff(&qlin::expm_i(&h0, 0.37).unwrap()) < 1e-12);
        let silent = PulseProgram::single(
            vec![PulseTone { carrier: 460.0, amplitude: 0.0, phase: 0.3 }],
            0.37,
        );
        let u2 = lab_propagator(&silent, &h0, DT).unwrap();
        assert!(u2.matrix.max_abs_diff(&u.matrix) < 1e-12);
        let id = lab_propagator(&PulseProgram::empty(), &h0, DT).unwrap();
        assert_eq!(id.matrix, CMatrix::identity(4).unwrap());
    }

    #[test]
    fn calibration_durations() {
        let (_, es, _) = setup();
        let prog = calibrate_pi((3, 4), 1.0, &es).unwrap();
        let seg = &prog.segments[0];
        assert_eq!(seg.tones.len(), 1);
        assert!((seg.tones[0].carrier - 460.0).abs() < 1e-9);
        assert!((seg.duration - 4.967294132898051).abs() < 1e-9);
        let fast = calibrate_pi((3, 4), 2.0, &es).unwrap();
        assert!((fast.total_duration() * 2.0 - prog.total_duration()).abs() < 1e-12);
        assert_eq!(calibrate_pi((1, 4), 1.0, &es), Err(Error::ForbiddenTransition(1, 4)));
        assert!(calibrate_pi((2, 3), 1.0, &es).is_err());
    }

    #[test]
    fn rwa_pi_and_two_pi_rotations() {
        let (_, es, _) = setup();
        let phase = 0.4;
        let pi = calibrate_rotation((1, 2), PI, phase, 1.0, &es).unwrap();
        let u = rwa_interaction_propagator(&pi, &es).unwrap();
        // |Ψ₁⟩ ↦ −i·e^{iϕ}|Ψ₂⟩
        assert!((u[(1, 0)] - C64::new(0.0, -1.0) * C64::from_polar(1.0, phase)).norm() < 1e-12);
        assert!(u[(0, 0)].norm() < 1e-12);
        assert!((u[(2, 2)] - C64::new(1.0, 0.0)).norm() < 1e-12);

        let two_pi = calibrate_rotation((1, 2), 2.0 * PI, phase, 1.0, &es).unwrap();
        let u = rwa_interaction_propagator(&two_pi, &es).unwrap();
        assert!((u[(0, 0)] + 1.0).norm() < 1e-12 && (u[(1, 1)] + 1.0).norm() < 1e-12);
        assert!((u[(3, 3)] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn rwa_rejects_off_resonant_carrier() {
        let (_, es, _) = setup();
        let prog = PulseProgram::single(vec![PulseTone { carrier: 470.0, amplitude: 1.0, phase: 0.0 }], 1.0);
        match rwa_propagator(&prog, &es) {
            Err(Error::NonResonant { from, to, .. }) => assert_eq!((from, to), (3, 4)),
            other => panic!("expected NonResonant, got {other:?}"),
        }
    }

    #[test]
    fn lab_pi_pulse_transfers_population() {
        let (_, es, h0) = setup();
        let prog = calibrate_pi((3, 4), default_omega1(&es), &es).unwrap();
        let u = lab_propagator(&prog, &h0, DT).unwrap();
        let out = u.matrix.apply(es.state(3));
        let p4 = es.state(4).inner(&out).norm_sqr();
        assert!(p4 >= 0.999, "transfer {p4}");
        assert!(u.matrix.unitarity_defect() < 1e-9);
    }

    #[test]
    fn lab_rwa_gap_shrinks_linearly_with_amplitude() {
        let (_, es, h0) = setup();
        let gap = |omega1: f64| {
            let prog = calibrate_rotation((1, 2), PI / 2.0, 0.9, omega1, &es).unwrap();
            let lab = lab_propagator(&prog, &h0, DT).unwrap().matrix;
            lab.max_abs_diff(&rwa_propagator(&prog, &es).unwrap().matrix)
        };
        let (a, b) = (gap(1.0), gap(0.5));
        assert!(a < 0.1, "{a}");
        assert!((1.5..2.5).contains(&(a / b)), "{a} / {b}");
    }

    #[test]
    fn step_size_convergence_is_second_order() {
        let (_, es, h0) = setup();
        let tone = PulseTone { carrier: 460.0, amplitude: 5.0, phase: 0.2 };
        let prog = PulseProgram::single(vec![tone], 0.05);
        assert!(step_limit(&prog, &h0, 1.0) >= 2e-5 * (1.0 - 1e-12));
        let _ = es;
        let u = |dt| lab_propagator(&prog, &h0, dt).unwrap().matrix;
        let (a, b, c) = (u(2e-5), u(1e-5), u(5e-6));
        let d1 = a.max_abs_diff(&b);
        let d2 = b.max_abs_diff(&c);
        let ratio = d1 / d2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio} ({d1:e}, {d2:e})");
    }

    #[test]
    fn default_step_respects_frequency_cap() {
        let (_, es, h0) = setup();
        let prog = calibrate_pi((3, 4), 1.0, &es).unwrap();
        let dt = step_limit(&prog, &h0, 1.0);
        assert!((dt - 1.0 / (50.0 * 1000.0)).abs() < 1e-15);
    }

    #[test]
    fn program_validation() {
        let t = PulseTone { carrier: 1.0, amplitude: 1.0, phase: 0.0 };
        assert!(PulseProgram::single(vec![t; 3], 1.0).validate().is_err());
        assert!(PulseProgram::single(vec![t], 0.0).validate().is_err());
        let neg = PulseTone { amplitude: -1.0, ..t };
        assert!(PulseProgram::single(vec![neg], 1.0).validate().is_err());
        let json = serde_json::to_string(&PulseProgram::single(vec![t], 2.0)).unwrap();
        assert_eq!(
            json,
            r#"{"segments":[{"tones":[{"carrier":1.0,"amplitude":1.0,"phase":0.0}],"duration":2.0}]}"#
        );
    }
}
