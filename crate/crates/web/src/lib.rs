//! Browser bindings for the spin-pair simulator. Every export takes plain
//! numbers and strings and returns a JSON document; errors come back as
//! thrown strings.

use serde_json::{json, Value};
use virtspin::encoding::{basis_map, EncodingScheme, LogicalState, LOGICAL_LABELS};
use virtspin::gates::{self, GateKind, GateSpec};
use virtspin::pulse;
use virtspin::spectrum::{combination_rules_check, transition_table};
use virtspin::spinsys::{diagonalize, PerturbationSpec, SystemParams};
use virtspin::stability;
use wasm_bindgen::prelude::*;

type Res<T> = std::result::Result<T, String>;

fn params(omega0: f64, delta: f64, j: f64) -> Res<SystemParams> {
    let p = SystemParams::new(omega0, delta, j);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// `"01"` or `"00+01"`.
fn logical_state(label: &str) -> Res<LogicalState> {
    let label = label.trim();
    let r = match label.split_once('+') {
        Some((a, b)) => {
            let idx = |s: &str| {
                LOGICAL_LABELS
                    .iter()
                    .position(|&l| l == s.trim())
                    .ok_or_else(|| format!("unknown logical label {s:?}"))
            };
            LogicalState::equal_superposition(idx(a)?, idx(b)?)
        }
        None => LogicalState::from_label(label),
    };
    r.map_err(|e| e.to_string())
}

pub fn spectrum_json(omega0: f64, delta: f64, j: f64) -> Res<Value> {
    let p = params(omega0, delta, j)?;
    let es = diagonalize(&p).map_err(|e| e.to_string())?;
    let lines = transition_table(&es);
    let rules = combination_rules_check(&lines, Some(es.theta)).map_err(|e| e.to_string())?;
    Ok(json!({
        "theta": es.theta,
        "energies": es.energies,
        "lines": lines,
        "rules_passed": rules.passed(),
    }))
}

pub fn stability_json(omega0: f64, delta: f64, j: f64, dipolar: f64, state: &str, points: usize) -> Res<Value> {
    let mut p = params(omega0, delta, j)?;
    if dipolar != 0.0 {
        p = p.with_perturbation(PerturbationSpec::dipolar(dipolar));
        p.validate().map_err(|e| e.to_string())?;
    }
    let psi = logical_state(state)?;
    let t_max = stability::default_t_max(&p, stability::DEFAULT_PERIODS);
    let times = stability::uniform_grid(t_max, points.max(2)).map_err(|e| e.to_string())?;
    let report = stability::compare_encodings(&psi, &p, &times, stability::DEFAULT_THRESHOLD)
        .map_err(|e| e.to_string())?;
    serde_json::to_value(report).map_err(|e| e.to_string())
}

/// `model` is `"lab"` (full time-dependent integration) or `"rwa"`.
pub fn gate_json(omega0: f64, delta: f64, j: f64, kind: &str, angle: f64, omega1: f64, model: &str) -> Res<Value> {
    let p = params(omega0, delta, j)?;
    let es = diagonalize(&p).map_err(|e| e.to_string())?;
    let kind: GateKind = serde_json::from_value(Value::String(kind.into())).map_err(|_| format!("unknown gate {kind:?}"))?;
    let spec = match kind {
        GateKind::RotQ => GateSpec::rot_q(angle, 0.0),
        GateKind::RotR => GateSpec::rot_r(angle, 0.0),
        GateKind::CnotQToR => GateSpec::cnot_q_to_r(),
        GateKind::CnotRToQ => GateSpec::cnot_r_to_q(),
    };
    let omega1 = if omega1 > 0.0 { omega1 } else { pulse::default_omega1(&es) };
    let program = gates::synthesize(&spec, &es, omega1).map_err(|e| e.to_string())?;
    let map = basis_map(EncodingScheme::VirtualSpin, &es);
    let report = match model {
        "lab" => gates::score(&program, &spec, &es, &map).map_err(|e| e.to_string())?,
        "rwa" => {
            let u = pulse::rwa_propagator(&program, &es).map_err(|e| e.to_string())?.matrix;
            let u_log = gates::to_logical_frame(&u, program.total_duration(), &es, &map);
            gates::report_for(&u_log, &spec, program.total_duration())
        }
        other => return Err(format!("unknown model {other:?}")),
    };
    Ok(json!({ "omega1": omega1, "report": report, "program": program }))
}

fn export(r: Res<Value>) -> std::result::Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spectrum(omega0: f64, delta: f64, j: f64) -> std::result::Result<String, JsValue> {
    export(spectrum_json(omega0, delta, j))
}

#[wasm_bindgen]
pub fn stability(omega0: f64, delta: f64, j: f64, dipolar: f64, state: &str, points: usize) -> std::result::Result<String, JsValue> {
    export(stability_json(omega0, delta, j, dipolar, state, points))
}

#[wasm_bindgen]
pub fn gate(omega0: f64, delta: f64, j: f64, kind: &str, angle: f64, omega1: f64, model: &str) -> std::result::Result<String, JsValue> {
    export(gate_json(omega0, delta, j, kind, angle, omega1, model))
}
