use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

use virtspin::encoding::{basis_map, encode, BasisMap, EncodingScheme};
use virtspin::gates::{self, GateReport, GateSpec};
use virtspin::numfmt::sci;
use virtspin::pulse::{self, PulseProgram};
use virtspin::qlin::{self, StateVec};
use virtspin::spectrum::{self, RuleReport, SpectrumFormat, SpectrumLine};
use virtspin::spinsys::{build_member_hamiltonian, diagonalize};
use virtspin::stability::{self, ScalingTable, StabilityReport};

use crate::config::{parse_state, OutputFormat, PulseSource, RunConfig, DEFAULT_EVOLVE_PERIODS, DEFAULT_OUT_DIR};
use crate::error::CliError;
use crate::output::{csv_preamble, json_document, OutputDir};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Transition frequencies and intensities
    Spectrum,
    /// Synthesize and score a logic gate
    Gate,
    /// Encoded-state fidelity under free evolution
    Stability,
    /// Level populations under free or pulsed evolution
    Evolve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Gate => "gate",
            Command::Stability => "stability",
            Command::Evolve => "evolve",
        }
    }
}

/// Runs one command and returns the files written.
pub fn run(command: Command, cfg: &RunConfig, emit_pulses: bool) -> Result<Vec<PathBuf>, CliError> {
    let out_dir = cfg.output.dir.clone().unwrap_or_else(|| DEFAULT_OUT_DIR.into());
    let mut out = OutputDir::create(Path::new(&out_dir))?;
    let result = match command {
        Command::Spectrum => cmd_spectrum(cfg, &mut out),
        Command::Gate => cmd_gate(cfg, emit_pulses, &mut out),
        Command::Stability => cmd_stability(cfg, &mut out),
        Command::Evolve => cmd_evolve(cfg, &mut out),
    };
    result.map(|()| out.written().to_vec())
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    theta: f64,
    phi: f64,
    energies: [f64; 4],
    lines: Vec<SpectrumLine>,
    combination_rules: &'a RuleReport,
    rules_passed: bool,
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let es = diagonalize(&cfg.params())?;
    let mut lines = spectrum::transition_table(&es);
    lines.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let rules = spectrum::combination_rules_check(&lines, Some(es.theta))?;
    if cfg.format() == OutputFormat::Csv {
        let csv = csv_preamble("spectrum", cfg) + &spectrum::export_spectrum(&lines, SpectrumFormat::Csv);
        out.write("spectrum.csv", &csv)?;
    }
    let summary = SpectrumSummary {
        theta: es.theta,
        phi: es.phi,
        energies: es.energies,
        lines,
        combination_rules: &rules,
        rules_passed: rules.passed(),
    };
    out.write("spectrum.json", &json_document("spectrum", cfg, &summary))?;
    if !rules.passed() {
        return Err(CliError::Physics(rules.violations.join("; ")));
    }
    Ok(())
}

#[derive(Serialize)]
struct GateSummary<'a> {
    gate: GateSpec,
    omega1: f64,
    fidelity_floor: Option<f64>,
    report: &'a GateReport,
}

#[derive(Serialize)]
struct PulseSummary<'a> {
    gate: GateSpec,
    program: &'a PulseProgram,
}

pub fn cmd_gate(cfg: &RunConfig, emit_pulses: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let gate_cfg = cfg.gate.as_ref().ok_or_else(|| CliError::Config {
        path: "gate".into(),
        message: "the gate command needs a gate block".into(),
    })?;
    let gate = gate_cfg.spec();
    let es = diagonalize(&cfg.params())?;
    let map = basis_map(EncodingScheme::VirtualSpin, &es);
    let omega1 = cfg.omega1.expect("normalized");
    let program = gates::synthesize(&gate, &es, omega1)?;
    let report = gates::score(&program, &gate, &es, &map)?;
    let summary = GateSummary { gate, omega1, fidelity_floor: gate_cfg.fidelity_floor, report: &report };
    out.write("gate_report.json", &json_document("gate", cfg, &summary))?;
    if emit_pulses {
        out.write("pulses.json", &json_document("gate", cfg, PulseSummary { gate, program: &program }))?;
    }
    match gate_cfg.fidelity_floor {
        Some(floor) if report.fidelity_phase_opt < floor => {
            Err(CliError::FidelityFloor { fidelity: report.fidelity_phase_opt, floor })
        }
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct StabilitySummary<'a> {
    state: &'a str,
    threshold: f64,
    zeeman_dip_amplitude: f64,
    virtual_max_infidelity: f64,
    #[serde(serialize_with = "finite_or_null")]
    t1_estimate: f64,
    #[serde(serialize_with = "finite_or_null")]
    t2_estimate: f64,
    #[serde(serialize_with = "finite_or_null")]
    t2_over_t1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curves: Option<Curves<'a>>,
}

#[derive(Serialize)]
struct Curves<'a> {
    times: &'a [f64],
    fidelity_zeeman: &'a [f64],
    fidelity_virtual: &'a [f64],
}

fn finite_or_null<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn self_check(report: &StabilityReport) -> Result<(), CliError> {
    for (name, curve) in [("zeeman", &report.fidelity_zeeman), ("virtual", &report.fidelity_virtual)] {
        if report.times.first() == Some(&0.0) && (curve[0] - 1.0).abs() > 1e-12 {
            return Err(CliError::Physics(format!("{name} fidelity at t=0 is {}", curve[0])));
        }
        if let Some(f) = curve.iter().find(|f| !(**f >= -1e-12 && **f <= 1.0 + 1e-9)) {
            return Err(CliError::Physics(format!("{name} fidelity {f} outside [0, 1]")));
        }
    }
    Ok(())
}

pub fn cmd_stability(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let s = &cfg.stability;
    let params = cfg.params();
    let state_label = s.state.as_deref().expect("normalized");
    let state = parse_state(state_label).map_err(|m| CliError::Config { path: "stability.state".into(), message: m })?;
    let times = stability::uniform_grid(s.t_max.expect("normalized"), s.points.expect("normalized"))?;
    let threshold = s.threshold.expect("normalized");
    let report = stability::compare_encodings(&state, &params, &times, threshold)?;
    self_check(&report)?;
    let scaling = if s.j_values.is_empty() {
        None
    } else {
        Some(stability::timescale_scaling_sweep(&params, &s.j_values, &s.d_values)?)
    };

    let json_curves = cfg.format() == OutputFormat::Json;
    if !json_curves {
        let mut csv = csv_preamble("stability", cfg);
        csv.push_str("t,F_zeeman,F_virtual\n");
        for i in 0..times.len() {
            csv.push_str(&format!(
                "{},{},{}\n",
                sci(times[i]),
                sci(report.fidelity_zeeman[i]),
                sci(report.fidelity_virtual[i])
            ));
        }
        out.write("stability.csv", &csv)?;
    }
    let summary = StabilitySummary {
        state: state_label,
        threshold,
        zeeman_dip_amplitude: report.zeeman_dip_amplitude,
        virtual_max_infidelity: report.virtual_max_infidelity,
        t1_estimate: report.t1_estimate,
        t2_estimate: report.t2_estimate,
        t2_over_t1: report.t2_estimate / report.t1_estimate,
        scaling,
        curves: json_curves.then_some(Curves {
            times: &report.times,
            fidelity_zeeman: &report.fidelity_zeeman,
            fidelity_virtual: &report.fidelity_virtual,
        }),
    };
    out.write("stability.json", &json_document("stability", cfg, &summary))?;
    Ok(())
}

#[derive(Serialize)]
struct EvolveTrace<'a> {
    duration_pulsed: f64,
    times: &'a [f64],
    zeeman_populations: &'a [[f64; 4]],
    virtual_populations: &'a [[f64; 4]],
}

fn populations(psi: &StateVec, map: &BasisMap) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (k, slot) in p.iter_mut().enumerate() {
        *slot = map.matrix.column(k).inner(psi).norm_sqr();
    }
    p
}

pub fn cmd_evolve(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let ev = cfg.evolve.as_ref().ok_or_else(|| CliError::Config {
        path: "evolve".into(),
        message: "the evolve command needs an evolve block".into(),
    })?;
    let params = cfg.params();
    let es = diagonalize(&params)?;
    let omega1 = cfg.omega1.expect("normalized");
    let program = match &ev.pulse {
        None => PulseProgram::empty(),
        Some(PulseSource::PiPulse([j, k])) => pulse::calibrate_pi((*j, *k), omega1, &es)?,
        Some(PulseSource::Gate(g)) => gates::synthesize(g, &es, omega1)?,
        Some(PulseSource::Program(p)) => p.clone(),
    };
    let t_max = ev.t_max.unwrap_or_else(|| {
        if program.is_empty() {
            stability::default_t_max(&params, DEFAULT_EVOLVE_PERIODS)
        } else {
            program.total_duration()
        }
    });
    let times = stability::uniform_grid(t_max, ev.points.expect("normalized"))?;
    let state = parse_state(&ev.state).map_err(|m| CliError::Config { path: "evolve.state".into(), message: m })?;
    let psi0 = encode(&state, &basis_map(ev.scheme, &es));
    let zmap = basis_map(EncodingScheme::Zeeman, &es);
    let vmap = basis_map(EncodingScheme::VirtualSpin, &es);

    let members = params.perturbation.as_ref().map_or(1, |p| p.members());
    let traces = (0..members)
        .into_par_iter()
        .map(|m| {
            let h = build_member_hamiltonian(&params, m);
            let states = if program.is_empty() {
                let free = qlin::hermitian_eigensystem(&h)?;
                times.iter().map(|&t| free.evolution(t).apply(&psi0)).collect()
            } else {
                pulse::lab_trajectory(&program, &h, f64::INFINITY, &psi0, &times)?
            };
            let pops: Vec<([f64; 4], [f64; 4])> =
                states.iter().map(|psi| (populations(psi, &zmap), populations(psi, &vmap))).collect();
            Ok(pops)
        })
        .collect::<virtspin::Result<Vec<_>>>()?;
    let scale = 1.0 / members as f64;
    let mut zeeman = vec![[0.0; 4]; times.len()];
    let mut virt = vec![[0.0; 4]; times.len()];
    for trace in &traces {
        for (i, (z, v)) in trace.iter().enumerate() {
            for k in 0..4 {
                zeeman[i][k] += z[k] * scale;
                virt[i][k] += v[k] * scale;
            }
        }
    }

    match cfg.format() {
        OutputFormat::Csv => {
            let mut csv = csv_preamble("evolve", cfg);
            csv.push('t');
            for scheme in ["zeeman", "virtual"] {
                for l in virtspin::encoding::LOGICAL_LABELS {
                    csv.push_str(&format!(",{scheme}_{l}"));
                }
            }
            csv.push('\n');
            for (i, t) in times.iter().enumerate() {
                csv.push_str(&sci(*t));
                for p in zeeman[i].iter().chain(&virt[i]) {
                    csv.push(',');
                    csv.push_str(&sci(*p));
                }
                csv.push('\n');
            }
            out.write("evolve.csv", &csv)
        }
        OutputFormat::Json => {
            let trace = EvolveTrace {
                duration_pulsed: program.total_duration(),
                times: &times,
                zeeman_populations: &zeeman,
                virtual_populations: &virt,
            };
            out.write("evolve.json", &json_document("evolve", cfg, &trace))
        }
    }
}
