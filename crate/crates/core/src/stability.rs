//! How long an encoded logical state survives free evolution.
//!
//! The fidelity of an encoding is `F(t) = |⟨ψ_ref(t)|ψ(t)⟩|²`, where
//! `ψ(t)` evolves under the full Hamiltonian (including `V`) and
//! `ψ_ref(t)` under the Hamiltonian the encoding is built on: the bare
//! Zeeman part for product-state qubits, `H(V=0)` for virtual spins.
//! Random-field ensembles report the member average.

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

use crate::encoding::{basis_map, encode, EncodingScheme, LogicalState};
use crate::error::{Error, Result};
use crate::qlin::{self, C64};
use crate::spinsys::{build_hamiltonian, build_member_hamiltonian, diagonalize, zeeman_hamiltonian, SystemParams};

pub const DEFAULT_THRESHOLD: f64 = 0.99;
pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Default window is this many periods `2π/θ`.
pub const DEFAULT_PERIODS: f64 = 50.0;

const GOLDEN_ITERS: usize = 80;
const BISECT_ITERS: usize = 80;

/// `points` evenly spaced times over `[0, t_max]`.
pub fn uniform_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !t_max.is_finite() || points < 2 {
        return Err(Error::InvalidArgument("time grid needs t_max > 0 and at least 2 points".into()));
    }
    let n = (points - 1) as f64;
    Ok((0..points).map(|i| t_max * i as f64 / n).collect())
}

/// Window of `periods · 2π/θ`. Without mixing (`θ = 0`) the Larmor
/// frequency sets the period instead.
pub fn default_t_max(params: &SystemParams, periods: f64) -> f64 {
    let theta = params.theta();
    let scale = if theta > 0.0 { theta } else { params.omega0.abs().max(1.0) };
    periods * 2.0 * PI / scale
}

pub fn default_grid(params: &SystemParams) -> Vec<f64> {
    uniform_grid(default_t_max(params, DEFAULT_PERIODS), DEFAULT_GRID_POINTS).unwrap()
}

/// Closed-form overlap `Σ A_lk·e^{i(μ_l − λ_k)t}` of one ensemble member.
struct MemberOverlap {
    terms: Vec<(f64, C64)>,
}

impl MemberOverlap {
    fn amplitude(&self, t: f64) -> C64 {
        self.terms.iter().map(|&(w, a)| a * C64::from_polar(1.0, w * t)).sum()
    }
}

/// `F(t)` of one encoding, evaluable at any time.
pub struct FidelityModel {
    members: Vec<MemberOverlap>,
}

impl FidelityModel {
    pub fn new(logical: &LogicalState, scheme: EncodingScheme, params: &SystemParams) -> Result<Self> {
        let es = diagonalize(params)?;
        if let Some(spec) = &params.perturbation {
            spec.validate()?;
        }
        let psi0 = encode(logical, &basis_map(scheme, &es));
        let h_ref = match scheme {
            EncodingScheme::Zeeman => zeeman_hamiltonian(params),
            EncodingScheme::VirtualSpin => build_hamiltonian(params, false),
        };
        let reference = qlin::hermitian_eigensystem(&h_ref)?;
        let n = params.perturbation.as_ref().map_or(1, |p| p.members());
        let r: Vec<C64> = (0..4).map(|l| reference.vector(l).inner(&psi0)).collect();

        let members = (0..n)
            .into_par_iter()
            .map(|m| {
                let full = qlin::hermitian_eigensystem(&build_member_hamiltonian(params, m))?;
                let mut terms = Vec::with_capacity(16);
                for k in 0..4 {
                    let vk = full.vector(k);
                    let ck = vk.inner(&psi0);
                    for (l, rl) in r.iter().enumerate() {
                        let a = rl.conj() * reference.vector(l).inner(&vk) * ck;
                        terms.push((reference.eigenvalues[l] - full.eigenvalues[k], a));
                    }
                }
                Ok(MemberOverlap { terms })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members })
    }

    pub fn at(&self, t: f64) -> f64 {
        let sum: f64 = self.members.iter().map(|m| m.amplitude(t).norm_sqr()).sum();
        sum / self.members.len() as f64
    }

    pub fn curve(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.at(t)).collect()
    }

    /// Minimum over the grid, polished by golden-section search between the
    /// neighbouring grid points. Returns `(t, F)`.
    pub fn minimum(&self, times: &[f64], curve: &[f64]) -> (f64, f64) {
        let (i, _) = curve
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        self.polish(times, curve, i)
    }

    /// First local minimum that dips below `1 − floor`; `None` if the curve
    /// never does.
    pub fn first_minimum(&self, times: &[f64], curve: &[f64], floor: f64) -> Option<(f64, f64)> {
        (1..curve.len().saturating_sub(1))
            .find(|&i| curve[i] <= curve[i - 1] && curve[i] < curve[i + 1] && curve[i] < 1.0 - floor)
            .map(|i| self.polish(times, curve, i))
    }

    fn polish(&self, times: &[f64], curve: &[f64], i: usize) -> (f64, f64) {
        let lo = times[i.saturating_sub(1)];
        let hi = times[(i + 1).min(times.len() - 1)];
        let (t, f) = golden_min(|t| self.at(t), lo, hi);
        if f < curve[i] {
            (t, f)
        } else {
            (times[i], curve[i])
        }
    }

    /// First time the curve drops below `threshold`, located by bisection
    /// inside the first grid interval where it happens; `∞` if never.
    pub fn first_crossing(&self, times: &[f64], curve: &[f64], threshold: f64) -> f64 {
        let Some(i) = curve.iter().position(|&f| f < threshold) else {
            return f64::INFINITY;
        };
        if i == 0 {
            return times[0];
        }
        let (mut a, mut b) = (times[i - 1], times[i]);
        for _ in 0..BISECT_ITERS {
            let m = 0.5 * (a + b);
            if self.at(m) < threshold {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

pub fn encoded_fidelity(
    logical: &LogicalState,
    scheme: EncodingScheme,
    params: &SystemParams,
    times: &[f64],
) -> Result<Vec<f64>> {
    Ok(FidelityModel::new(logical, scheme, params)?.curve(times))
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    pub fidelity_zeeman: Vec<f64>,
    pub fidelity_virtual: Vec<f64>,
    pub zeeman_dip_amplitude: f64,
    pub virtual_max_infidelity: f64,
    /// s; infinite (serialized as `null`) if the curve never crosses.
    #[serde(serialize_with = "finite_or_null")]
    pub t1_estimate: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub t2_estimate: f64,
}

pub fn compare_encodings(
    logical: &LogicalState,
    params: &SystemParams,
    times: &[f64],
    threshold: f64,
) -> Result<StabilityReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument("threshold must lie in (0, 1)".into()));
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    let zeeman = FidelityModel::new(logical, EncodingScheme::Zeeman, params)?;
    let virt = FidelityModel::new(logical, EncodingScheme::VirtualSpin, params)?;
    let fz = zeeman.curve(times);
    let fv = virt.curve(times);
    let zeeman_dip_amplitude = 1.0 - zeeman.minimum(times, &fz).1;
    let virtual_max_infidelity = 1.0 - virt.minimum(times, &fv).1;
    let t1_estimate = zeeman.first_crossing(times, &fz, threshold);
    let t2_estimate = virt.first_crossing(times, &fv, threshold);
    Ok(StabilityReport {
        times: times.to_vec(),
        fidelity_zeeman: fz,
        fidelity_virtual: fv,
        zeeman_dip_amplitude,
        virtual_max_infidelity,
        t1_estimate,
        t2_estimate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JRow {
    pub j_coupling: f64,
    pub theta: f64,
    /// s; `null` if the Zeeman curve has no dip.
    #[serde(serialize_with = "finite_or_null")]
    pub first_minimum_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DRow {
    pub strength: f64,
    pub virtual_max_infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub j_rows: Vec<JRow>,
    pub d_rows: Vec<DRow>,
    /// Slope of `ln t_min` against `ln J`.
    #[serde(serialize_with = "finite_or_null")]
    pub j_exponent: f64,
    /// Slope of `ln(1 − F_min)` against `ln d`.
    #[serde(serialize_with = "finite_or_null")]
    pub d_exponent: f64,
}

/// Least-squares slope of `ln y` against `ln x`; NaN unless at least two
/// strictly positive points exist.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 || pts.len() != xs.len() {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Window used for the perturbation sweep, in periods `2π/θ`.
pub const D_SWEEP_PERIODS: f64 = 20.0;

/// Zeeman `|01⟩` first-dip time for each `J`, and virtual-encoding
/// `(|00⟩+|01⟩)/√2` worst infidelity under dipolar `V` for each `d`.
pub fn timescale_scaling_sweep(base: &SystemParams, j_values: &[f64], d_values: &[f64]) -> Result<ScalingTable> {
    use crate::spinsys::PerturbationSpec;
    if j_values.is_empty() || d_values.is_empty() {
        return Err(Error::InvalidArgument("sweep lists must be non-empty".into()));
    }
    let zeeman_state = LogicalState::from_label("01")?;
    let j_rows = j_values
        .par_iter()
        .map(|&j| {
            let params = SystemParams { j_coupling: j, perturbation: None, ..base.clone() };
            let times = default_grid(&params);
            let model = FidelityModel::new(&zeeman_state, EncodingScheme::Zeeman, &params)?;
            let curve = model.curve(&times);
            let first_minimum_time = model.first_minimum(&times, &curve, 1e-9).map_or(f64::INFINITY, |m| m.0);
            Ok(JRow { j_coupling: j, theta: params.theta(), first_minimum_time })
        })
        .collect::<Result<Vec<_>>>()?;

    let superposition = LogicalState::equal_superposition(0, 1)?;
    let d_rows = d_values
        .par_iter()
        .map(|&d| {
            let params = base.clone().with_perturbation(PerturbationSpec::dipolar(d));
            let times = uniform_grid(default_t_max(&params, D_SWEEP_PERIODS), DEFAULT_GRID_POINTS)?;
            let model = FidelityModel::new(&superposition, EncodingScheme::VirtualSpin, &params)?;
            let curve = model.curve(&times);
            Ok(DRow { strength: d, virtual_max_infidelity: 1.0 - model.minimum(&times, &curve).1 })
        })
        .collect::<Result<Vec<_>>>()?;

    let j_exponent = log_log_slope(
        &j_rows.iter().map(|r| r.j_coupling).collect::<Vec<_>>(),
        &j_rows.iter().map(|r| r.first_minimum_time).collect::<Vec<_>>(),
    );
    let d_exponent = log_log_slope(
        &d_rows.iter().map(|r| r.strength).collect::<Vec<_>>(),
        &d_rows.iter().map(|r| r.virtual_max_infidelity).collect::<Vec<_>>(),
    );
    Ok(ScalingTable { j_rows, d_rows, j_exponent, d_exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinsys::PerturbationSpec;

    fn reference() -> SystemParams {
        SystemParams::new(500.0, 40.0, 30.0)
    }

    #[test]
    fn grid_defaults() {
        let g = default_grid(&reference());
        assert_eq!(g.len(), 2001);
        assert_eq!(g[0], 0.0);
        assert!((g[2000] - 2.0 * PI).abs() < 1e-12);
        assert!((g[20] - PI / 50.0).abs() < 1e-15);
        let flat = default_t_max(&SystemParams::new(500.0, 0.0, 0.0), 1.0);
        assert!((flat - 2.0 * PI / 500.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (t, f) = golden_min(|x| (x - 0.3).powi(2) + 2.0, 0.0, 1.0);
        assert!((t - 0.3).abs() < 1e-7 && (f - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_log_slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 1.5).abs() < 1e-12);
        assert!(log_log_slope(&xs, &[1.0, 0.0, 2.0]).is_nan());
    }

    #[test]
    fn zeeman_closed_form() {
        let p = reference();
        let times = default_grid(&p);
        let f = encoded_fidelity(&LogicalState::from_label("01").unwrap(), EncodingScheme::Zeeman, &p, &times).unwrap();
        for (t, f) in times.iter().zip(&f) {
            assert!((f - (1.0 - 0.36 * (25.0 * t).sin().powi(2))).abs() < 1e-10);
        }
    }

    #[test]
    fn crossing_and_first_minimum() {
        let p = reference();
        let times = default_grid(&p);
        let model = FidelityModel::new(&LogicalState::from_label("01").unwrap(), EncodingScheme::Zeeman, &p).unwrap();
        let curve = model.curve(&times);
        let t1 = model.first_crossing(&times, &curve, 0.9);
        let expect = (0.1f64 / 0.36).sqrt().asin() * 2.0 / 50.0;
        assert!((t1 - expect).abs() < 1e-12, "{t1} vs {expect}");
        let (tm, fm) = model.first_minimum(&times, &curve, 1e-9).unwrap();
        assert!((tm - PI / 50.0).abs() < 1e-6 && (fm - 0.64).abs() < 1e-12);
    }

    #[test]
    fn report_without_mixing() {
        let p = SystemParams::new(500.0, 40.0, 0.0);
        let times = default_grid(&p);
        let r = compare_encodings(&LogicalState::from_label("01").unwrap(), &p, &times, 0.99).unwrap();
        assert!(r.zeeman_dip_amplitude.abs() < 1e-12 && r.virtual_max_infidelity.abs() < 1e-12);
        assert!(r.t1_estimate.is_infinite() && r.t2_estimate.is_infinite());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["t1_estimate"].is_null());
    }

    #[test]
    fn threshold_is_checked() {
        let p = reference();
        let l = LogicalState::basis(0).unwrap();
        assert!(compare_encodings(&l, &p, &[0.0, 1.0], 1.0).is_err());
        assert!(compare_encodings(&l, &p, &[], 0.5).is_err());
    }

    #[test]
    fn random_field_ensembles_need_a_seed() {
        let mut spec = PerturbationSpec::random_fields(1.0, 3, 4);
        spec.seed = None;
        let p = reference().with_perturbation(spec);
        assert!(FidelityModel::new(&LogicalState::basis(0).unwrap(), EncodingScheme::VirtualSpin, &p).is_err());
    }
}
