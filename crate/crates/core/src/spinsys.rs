//! Hamiltonian of a coupled pair of inequivalent spin-1/2 nuclei and its
//! exact eigensystem.
//!
//! Product basis order is `|++⟩, |+−⟩, |−+⟩, |−−⟩` with the I spin first.
//! Energies are angular frequencies (ħ = 1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlin::{self, CMatrix, StateVec, C64, I, ZERO};
#[cfg(test)]
use crate::qlin::ONE;

/// Product-basis indices.
pub const PP: usize = 0;
pub const PM: usize = 1;
pub const MP: usize = 2;
pub const MM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `d·2I_zS_z`
    DipolarZz,
    /// `h_I·I_z + h_S·S_z` with `h ~ Uniform[-d, d]` per ensemble member.
    RandomLocalFields,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// rad/s
    pub strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
}

fn default_ensemble_size() -> usize {
    1
}

impl PerturbationSpec {
    pub fn dipolar(strength: f64) -> Self {
        Self { kind: PerturbationKind::DipolarZz, strength, seed: None, ensemble_size: 1 }
    }

    pub fn random_fields(strength: f64, seed: u64, ensemble_size: usize) -> Self {
        Self { kind: PerturbationKind::RandomLocalFields, strength, seed: Some(seed), ensemble_size }
    }

    /// Number of Hamiltonians the perturbation expands into.
    pub fn members(&self) -> usize {
        match self.kind {
            PerturbationKind::DipolarZz => 1,
            PerturbationKind::RandomLocalFields => self.ensemble_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strength.is_finite() || self.strength < 0.0 {
            return Err(Error::InvalidArgument(
                "perturbation strength must be finite and ≥ 0".into(),
            ));
        }
        if self.kind == PerturbationKind::RandomLocalFields {
            if self.seed.is_none() {
                return Err(Error::InvalidArgument(
                    "seed is mandatory for random_local_fields".into(),
                ));
            }
            if self.ensemble_size == 0 {
                return Err(Error::InvalidArgument("ensemble_size must be ≥ 1".into()));
            }
        }
        Ok(())
    }

    /// Local fields `(h_I, h_S)` of one ensemble member.
    ///
    /// Each member draws from its own ChaCha stream, so members can be
    /// generated in any order.
    pub fn local_fields(&self, member: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
        rng.set_stream(member as u64);
        let d = self.strength;
        if d == 0.0 {
            return (0.0, 0.0);
        }
        (rng.gen_range(-d..=d), rng.gen_range(-d..=d))
    }
}

/// Physical parameters of the pair, all in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega0: f64,
    pub delta: f64,
    pub j_coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
}

impl SystemParams {
    pub fn new(omega0: f64, delta: f64, j_coupling: f64) -> Self {
        Self { omega0, delta, j_coupling, perturbation: None }
    }

    pub fn with_perturbation(mut self, spec: PerturbationSpec) -> Self {
        self.perturbation = Some(spec);
        self
    }

    pub fn theta(&self) -> f64 {
        self.j_coupling.hypot(self.delta)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("omega0", self.omega0), ("delta", self.delta), ("j_coupling", self.j_coupling)]
        {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if self.j_coupling < 0.0 {
            return Err(Error::InvalidArgument("j_coupling must be ≥ 0".into()));
        }
        if let Some(p) = &self.perturbation {
            p.validate()?;
        }
        if self.omega0 <= self.j_coupling.abs() {
            log::warn!(
                "omega0 = {} does not exceed J = {}; outside the weak-coupling regime",
                self.omega0,
                self.j_coupling
            );
        }
        Ok(())
    }
}

/// Spin operators of the pair in the product basis.
#[derive(Clone, Copy, Debug)]
pub struct SpinOps {
    pub ix: CMatrix,
    pub iy: CMatrix,
    pub iz: CMatrix,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub i_dot_s: CMatrix,
}

impl SpinOps {
    pub fn total_z(&self) -> CMatrix {
        self.iz + self.sz
    }

    /// `I_x + S_x`, the transverse RF coupling.
    pub fn total_x(&self) -> CMatrix {
        self.ix + self.sx
    }
}

pub fn build_spin_ops() -> SpinOps {
    let h = C64::new(0.5, 0.0);
    let sx = CMatrix::from_rows(&[ZERO, h, h, ZERO]).unwrap();
    let sy = CMatrix::from_rows(&[ZERO, -I * 0.5, I * 0.5, ZERO]).unwrap();
    let sz = CMatrix::from_rows(&[h, ZERO, ZERO, -h]).unwrap();
    let id = CMatrix::identity(2).unwrap();
    let on_i = |m: &CMatrix| qlin::tensor(m, &id).unwrap();
    let on_s = |m: &CMatrix| qlin::tensor(&id, m).unwrap();
    let (ix, iy, iz) = (on_i(&sx), on_i(&sy), on_i(&sz));
    let (sx4, sy4, sz4) = (on_s(&sx), on_s(&sy), on_s(&sz));
    let i_dot_s = ix * sx4 + iy * sy4 + iz * sz4;
    SpinOps { ix, iy, iz, sx: sx4, sy: sy4, sz: sz4, i_dot_s }
}

/// `V` for one ensemble member (member index ignored for the dipolar kind).
pub fn perturbation_operator(spec: &PerturbationSpec, member: usize) -> CMatrix {
    let ops = build_spin_ops();
    match spec.kind {
        PerturbationKind::DipolarZz => (ops.iz * ops.sz).scale_real(2.0 * spec.strength),
        PerturbationKind::RandomLocalFields => {
            let (hi, hs) = spec.local_fields(member);
            ops.iz.scale_real(hi) + ops.sz.scale_real(hs)
        }
    }
}

/// Zeeman part `ω₀(I_z+S_z) + (δ/2)(I_z−S_z)`.
pub fn zeeman_hamiltonian(params: &SystemParams) -> CMatrix {
    let ops = build_spin_ops();
    (ops.iz + ops.sz).scale_real(params.omega0)
        + (ops.iz - ops.sz).scale_real(params.delta / 2.0)
}

/// `H = ω₀(I_z+S_z) + (δ/2)(I_z−S_z) + J·I·S [+ V]`. For an ensemble
/// perturbation the first member is used; see [`build_member_hamiltonian`].
pub fn build_hamiltonian(params: &SystemParams, include_perturbation: bool) -> CMatrix {
    let ops = build_spin_ops();
    let h = zeeman_hamiltonian(params) + ops.i_dot_s.scale_real(params.j_coupling);
    match (&params.perturbation, include_perturbation) {
        (Some(spec), true) => h + perturbation_operator(spec, 0),
        _ => h,
    }
}

pub fn build_member_hamiltonian(params: &SystemParams, member: usize) -> CMatrix {
    let ops = build_spin_ops();
    let h = zeeman_hamiltonian(params) + ops.i_dot_s.scale_real(params.j_coupling);
    match &params.perturbation {
        Some(spec) => h + perturbation_operator(spec, member),
        None => h,
    }
}

/// Every Hamiltonian of the perturbation ensemble (one entry without `V`).
pub fn ensemble_hamiltonians(params: &SystemParams) -> Vec<CMatrix> {
    let n = params.perturbation.as_ref().map_or(1, |p| p.members());
    (0..n).map(|m| build_member_hamiltonian(params, m)).collect()
}

/// `(ω₀+J/4, −J/4+θ/2, −J/4−θ/2, −ω₀+J/4)`.
pub fn closed_form_energies(params: &SystemParams) -> [f64; 4] {
    let (w, j) = (params.omega0, params.j_coupling);
    let theta = params.theta();
    [w + j / 4.0, -j / 4.0 + theta / 2.0, -j / 4.0 - theta / 2.0, -w + j / 4.0]
}

/// Mixing angle `φ = atan2(J, δ)`, in `[0, π]` for `J ≥ 0`.
pub fn mixing_angle(params: &SystemParams) -> f64 {
    params.j_coupling.atan2(params.delta)
}

/// Labeled eigensystem of `H(V=0)`:
/// `Ψ₁ = |++⟩`, `Ψ₂ = p|+−⟩ + q|−+⟩`, `Ψ₃ = p|−+⟩ − q|+−⟩`, `Ψ₄ = |−−⟩`.
#[derive(Clone, Copy, Debug)]
pub struct Eigensystem {
    /// `ε₁..ε₄` in label order (not sorted).
    pub energies: [f64; 4],
    pub states: [StateVec; 4],
    pub theta: f64,
    pub phi: f64,
    pub p: f64,
    pub q: f64,
}

impl Eigensystem {
    /// Energy of level `k ∈ 1..=4`.
    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k - 1]
    }

    /// State `Ψ_k`, `k ∈ 1..=4`.
    pub fn state(&self, k: usize) -> &StateVec {
        &self.states[k - 1]
    }

    /// Columns `Ψ₁..Ψ₄`.
    pub fn state_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.states).unwrap()
    }

    /// `Σₖ εₖ|Ψₖ⟩⟨Ψₖ|`, i.e. `H(V=0)` rebuilt from the eigensystem.
    pub fn hamiltonian(&self) -> CMatrix {
        let v = self.state_matrix();
        v * CMatrix::diag(&self.energies).unwrap() * v.adjoint()
    }

    /// `⟨Ψ_j|op|Ψ_k⟩` with 1-based labels.
    pub fn matrix_element(&self, op: &CMatrix, j: usize, k: usize) -> C64 {
        self.state(j).inner(&op.apply(self.state(k)))
    }

    /// `ε_j − ε_k`.
    pub fn transition_frequency(&self, j: usize, k: usize) -> f64 {
        self.energy(j) - self.energy(k)
    }
}

/// Numerically diagonalizes `H(V=0)` and labels the eigenvectors.
pub fn diagonalize(params: &SystemParams) -> Result<Eigensystem> {
    params.validate()?;
    let h = build_hamiltonian(params, false);
    let phi = mixing_angle(params);
    let (p, q) = ((phi / 2.0).cos(), (phi / 2.0).sin());

    let decomp = qlin::hermitian_eigensystem(&h)?;
    let ops = build_spin_ops();
    let mz = ops.total_z();

    let mut top = None;
    let mut bottom = None;
    let mut middle = Vec::with_capacity(2);
    let mut sectors_clean = true;
    for k in 0..4 {
        let v = decomp.vector(k);
        let m = v.inner(&mz.apply(&v)).re;
        if (m - 1.0).abs() < 1e-8 {
            top = Some((decomp.values()[k], v));
        } else if (m + 1.0).abs() < 1e-8 {
            bottom = Some((decomp.values()[k], v));
        } else if m.abs() < 1e-8 {
            middle.push((decomp.values()[k], v));
        } else {
            sectors_clean = false;
        }
    }

    let (top, bottom, middle) = match (top, bottom, middle.len(), sectors_clean) {
        (Some(t), Some(b), 2, true) => (t, b, [middle[0], middle[1]]),
        // cross-sector degeneracy: the solver may return mixed vectors, so
        // solve the conserved-M_z blocks separately
        _ => block_diagonalize(&h)?,
    };

    let pattern2 = [ZERO, C64::new(p, 0.0), C64::new(q, 0.0), ZERO];
    let pattern2 = StateVec::new(&pattern2)?;
    let (psi2, psi3) = if pattern2.inner(&middle[0].1).norm() >= pattern2.inner(&middle[1].1).norm()
    {
        (middle[0], middle[1])
    } else {
        (middle[1], middle[0])
    };

    let states = [
        phase_on(&top.1, PP, false),
        phase_mixed(&psi2.1, PM, MP, false),
        phase_mixed(&psi3.1, MP, PM, true),
        phase_on(&bottom.1, MM, false),
    ];
    Ok(Eigensystem {
        energies: [top.0, psi2.0, psi3.0, bottom.0],
        states,
        theta: params.theta(),
        phi,
        p,
        q,
    })
}

type Level = (f64, StateVec);

fn block_diagonalize(h: &CMatrix) -> Result<(Level, Level, [Level; 2])> {
    let block = CMatrix::from_rows(&[h[(PM, PM)], h[(PM, MP)], h[(MP, PM)], h[(MP, MP)]])?;
    let d = qlin::hermitian_eigensystem(&block)?;
    let embed = |k: usize| {
        let v = d.vector(k);
        StateVec::new(&[ZERO, v[0], v[1], ZERO]).unwrap()
    };
    Ok((
        (h[(PP, PP)].re, StateVec::basis(4, PP)?),
        (h[(MM, MM)].re, StateVec::basis(4, MM)?),
        [(d.values()[1], embed(1)), (d.values()[0], embed(0))],
    ))
}

/// Rotates the global phase so component `idx` is real, positive unless
/// `negative`.
fn phase_on(v: &StateVec, idx: usize, negative: bool) -> StateVec {
    let a = v[idx];
    if a.norm() == 0.0 {
        return *v;
    }
    let rot = a.conj() / a.norm();
    if negative {
        v.scale(-rot)
    } else {
        v.scale(rot)
    }
}

/// Phase convention for the mixed pair: the `primary` component real and
/// non-negative when it dominates, otherwise the `secondary` component real
/// with sign `+` (Ψ₂) or `−` (Ψ₃).
fn phase_mixed(v: &StateVec, primary: usize, secondary: usize, secondary_negative: bool) -> StateVec {
    if v[primary].norm() >= v[secondary].norm() {
        phase_on(v, primary, false)
    } else {
        phase_on(v, secondary, secondary_negative)
    }
}
