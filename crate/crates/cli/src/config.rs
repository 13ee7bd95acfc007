//! Run configuration: a single JSON document with the system parameters at
//! the top level and one optional block per experiment.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use virtspin::encoding::{EncodingScheme, LogicalState, LOGICAL_LABELS};
use virtspin::gates::{GateKind, GateSpec};
use virtspin::pulse::{self, PulseProgram};
use virtspin::spinsys::{PerturbationKind, PerturbationSpec, SystemParams};
use virtspin::stability;
use virtspin::C64;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_EVOLVE_POINTS: usize = 401;
/// Free-evolution window of `evolve`, in periods `2π/θ`.
pub const DEFAULT_EVOLVE_PERIODS: f64 = 2.0;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub omega0: f64,
    pub delta: f64,
    #[serde(alias = "j")]
    pub j_coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    /// Pulse amplitude, rad/s; `0.02·θ` when absent.
    #[serde(default)]
    pub omega1: Option<f64>,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    /// Logical state, e.g. `"01"` or `"00+01"` for an equal superposition.
    #[serde(default)]
    pub state: Option<String>,
    #[serde(default)]
    pub threshold: Option<f64>,
    /// s
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub j_values: Vec<f64>,
    #[serde(default)]
    pub d_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    pub kind: GateKind,
    /// rad; π for rotations when absent.
    #[serde(default)]
    pub angle: Option<f64>,
    #[serde(default)]
    pub axis_phase: f64,
    #[serde(default)]
    pub fidelity_floor: Option<f64>,
}

impl GateConfig {
    pub fn spec(&self) -> GateSpec {
        GateSpec { kind: self.kind, angle: self.angle.unwrap_or(0.0), axis_phase: self.axis_phase }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseSource {
    /// π pulse on the level pair `[j, k]`.
    PiPulse([usize; 2]),
    Gate(GateSpec),
    Program(PulseProgram),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default = "default_scheme")]
    pub scheme: EncodingScheme,
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSource>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

fn default_scheme() -> EncodingScheme {
    EncodingScheme::VirtualSpin
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
    pub fidelity_floor: Option<f64>,
    pub seed: Option<u64>,
}

/// Parses, applies overrides, fills defaults and validates.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config { path: if path == "." { String::new() } else { path }, message: e.into_inner().to_string() }
    })?;
    cfg.apply(overrides);
    cfg.normalize()?;
    Ok(cfg)
}

fn field_error(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.into(), message: message.into() }
}

fn check_positive(path: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(field_error(path, "must be finite and > 0")),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn params(&self) -> SystemParams {
        SystemParams {
            omega0: self.omega0,
            delta: self.delta,
            j_coupling: self.j_coupling,
            perturbation: self.perturbation.clone(),
        }
    }

    pub fn format(&self) -> OutputFormat {
        self.output.format.unwrap_or(OutputFormat::Csv)
    }

    pub fn seed(&self) -> Option<u64> {
        self.perturbation.as_ref().and_then(|p| p.seed)
    }

    /// The configuration without the output location, as echoed into
    /// result files.
    pub fn echo(&self) -> RunConfig {
        let mut c = self.clone();
        c.output.dir = None;
        c
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(f) = o.format {
            self.output.format = Some(f);
        }
        if let (Some(floor), Some(gate)) = (o.fidelity_floor, self.gate.as_mut()) {
            gate.fidelity_floor = Some(floor);
        }
        if let (Some(seed), Some(p)) = (o.seed, self.perturbation.as_mut()) {
            p.seed = Some(seed);
        }
    }

    fn normalize(&mut self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_error(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let params = self.params();
        params.validate().map_err(|e| field_error(system_field(&e.to_string()), e.to_string()))?;
        if let Some(p) = &self.perturbation {
            p.validate().map_err(|e| field_error("perturbation", e.to_string()))?;
            if p.kind == PerturbationKind::DipolarZz && p.seed.is_some() {
                log::warn!("perturbation.seed has no effect on dipolar_zz");
            }
        }

        check_positive("omega1", self.omega1)?;
        let theta = params.theta();
        let omega1 = self.omega1.unwrap_or(pulse::DEFAULT_OMEGA1_OVER_THETA * theta);
        if !(omega1 > 0.0) {
            return Err(field_error("omega1", "default 0.02·θ vanishes at θ = 0; set omega1 explicitly"));
        }
        self.omega1 = Some(omega1);

        let s = &mut self.stability;
        let state = s.state.get_or_insert_with(|| "01".into());
        parse_state(state).map_err(|m| field_error("stability.state", m))?;
        let threshold = *s.threshold.get_or_insert(stability::DEFAULT_THRESHOLD);
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(field_error("stability.threshold", "must lie in (0, 1)"));
        }
        check_positive("stability.t_max", s.t_max)?;
        s.t_max.get_or_insert_with(|| stability::default_t_max(&params, stability::DEFAULT_PERIODS));
        if *s.points.get_or_insert(stability::DEFAULT_GRID_POINTS) < 2 {
            return Err(field_error("stability.points", "must be ≥ 2"));
        }
        for (name, list) in [("stability.j_values", &s.j_values), ("stability.d_values", &s.d_values)] {
            if let Some(i) = list.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(field_error(&format!("{name}[{i}]"), "must be finite and ≥ 0"));
            }
        }
        if s.j_values.is_empty() != s.d_values.is_empty() {
            return Err(field_error("stability", "j_values and d_values must be given together"));
        }

        if let Some(g) = &mut self.gate {
            if g.kind.is_rotation() {
                g.angle.get_or_insert(PI);
            } else if g.angle.is_some() {
                return Err(field_error("gate.angle", "only rotations take an angle"));
            }
            g.spec().validate().map_err(|e| field_error("gate.angle", e.to_string()))?;
            if let Some(f) = g.fidelity_floor {
                if !(0.0..=1.0).contains(&f) {
                    return Err(field_error("gate.fidelity_floor", "must lie in [0, 1]"));
                }
            }
        }

        if let Some(e) = &mut self.evolve {
            parse_state(&e.state).map_err(|m| field_error("evolve.state", m))?;
            match &e.pulse {
                Some(PulseSource::PiPulse([j, k])) => {
                    if !(1..=4).contains(j) || !(1..=4).contains(k) || j == k {
                        return Err(field_error("evolve.pulse.pi_pulse", "levels must be distinct and in 1..=4"));
                    }
                }
                Some(PulseSource::Gate(g)) => g.validate().map_err(|er| field_error("evolve.pulse.gate", er.to_string()))?,
                Some(PulseSource::Program(p)) => {
                    p.validate().map_err(|er| field_error("evolve.pulse.program", er.to_string()))?
                }
                None => {}
            }
            check_positive("evolve.t_max", e.t_max)?;
            if *e.points.get_or_insert(DEFAULT_EVOLVE_POINTS) < 2 {
                return Err(field_error("evolve.points", "must be ≥ 2"));
            }
        }

        self.output.format.get_or_insert(OutputFormat::Csv);
        Ok(())
    }
}

fn system_field(message: &str) -> &'static str {
    ["omega0", "delta", "j_coupling"].into_iter().find(|f| message.contains(f)).unwrap_or("")
}

/// `"01"` or a `+`-joined list of distinct labels in equal superposition.
pub fn parse_state(text: &str) -> Result<LogicalState, String> {
    let mut amps = [C64::new(0.0, 0.0); 4];
    let labels: Vec<&str> = text.split('+').map(str::trim).collect();
    for l in &labels {
        let k = LOGICAL_LABELS
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| format!("unknown logical label {l:?} (expected 00, 01, 10 or 11)"))?;
        if amps[k].re != 0.0 {
            return Err(format!("label {l} repeated"));
        }
        amps[k] = C64::new(1.0, 0.0);
    }
    let norm = (labels.len() as f64).sqrt();
    LogicalState::new(amps.map(|a| a / norm)).map_err(|e| e.to_string())
}
