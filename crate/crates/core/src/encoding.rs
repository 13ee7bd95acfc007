//! Logical two-qubit encodings of the spin pair.
//!
//! Logical index is `2·b_Q + b_R` for bits `(b_Q, b_R)`; bit 1 means
//! projection `+½`. The Zeeman scheme binds bits to the real spins
//! (`|00⟩ = |−−⟩`), the virtual-spin scheme binds `|00⟩..|11⟩` to `Ψ₁..Ψ₄`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlin::{CMatrix, StateVec, C64};
use crate::spinsys::{Eigensystem, MM, MP, PM, PP};

pub const LOGICAL_LABELS: [&str; 4] = ["00", "01", "10", "11"];
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingScheme {
    Zeeman,
    VirtualSpin,
}

impl EncodingScheme {
    pub const ALL: [EncodingScheme; 2] = [EncodingScheme::Zeeman, EncodingScheme::VirtualSpin];

    pub fn name(self) -> &'static str {
        match self {
            EncodingScheme::Zeeman => "zeeman",
            EncodingScheme::VirtualSpin => "virtual_spin",
        }
    }
}

/// Unitary whose column `k` is the physical state of logical basis state `k`.
#[derive(Clone, Copy, Debug)]
pub struct BasisMap {
    pub scheme: EncodingScheme,
    pub matrix: CMatrix,
}

impl BasisMap {
    /// `M† O M`: a physical operator in logical coordinates.
    pub fn to_logical(&self, op: &CMatrix) -> CMatrix {
        self.matrix.adjoint() * *op * self.matrix
    }

    /// `M O M†`: a logical operator in physical coordinates.
    pub fn to_physical(&self, op: &CMatrix) -> CMatrix {
        self.matrix * *op * self.matrix.adjoint()
    }
}

/// Normalized amplitudes on `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogicalState(StateVec);

impl LogicalState {
    pub fn new(amps: [C64; 4]) -> Result<Self> {
        let v = StateVec::new(&amps)?;
        v.check_normalized(NORM_TOL)?;
        Ok(Self(v))
    }

    pub fn basis(index: usize) -> Result<Self> {
        Ok(Self(StateVec::basis(4, index)?))
    }

    /// Parses a bit label such as `"01"`.
    pub fn from_label(label: &str) -> Result<Self> {
        let idx = LOGICAL_LABELS
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown logical label {label:?}")))?;
        Self::basis(idx)
    }

    /// `(|a⟩ + |b⟩)/√2` for two basis indices.
    pub fn equal_superposition(a: usize, b: usize) -> Result<Self> {
        if a == b || a > 3 || b > 3 {
            return Err(Error::InvalidArgument("need two distinct basis indices".into()));
        }
        let mut amps = [C64::new(0.0, 0.0); 4];
        amps[a] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[b] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(amps)
    }

    pub fn as_vec(&self) -> &StateVec {
        &self.0
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.amplitudes()
    }
}

/// Basis map of a scheme; the eigensystem is only read for `VirtualSpin`.
pub fn basis_map(scheme: EncodingScheme, es: &Eigensystem) -> BasisMap {
    let matrix = match scheme {
        EncodingScheme::Zeeman => {
            let cols: Vec<StateVec> =
                [MM, MP, PM, PP].iter().map(|&k| StateVec::basis(4, k).unwrap()).collect();
            CMatrix::from_columns(&cols).unwrap()
        }
        EncodingScheme::VirtualSpin => es.state_matrix(),
    };
    BasisMap { scheme, matrix }
}

pub fn encode(l: &LogicalState, map: &BasisMap) -> StateVec {
    map.matrix.apply(l.as_vec())
}

pub fn decode(s: &StateVec, map: &BasisMap) -> Result<LogicalState> {
    s.check_normalized(NORM_TOL)?;
    Ok(LogicalState(map.matrix.adjoint().apply(s)))
}

/// Coefficients of `E(m_Q, m_R) = e0 + a·m_Q + b·m_R + c·m_Q·m_R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VirtualZeeman {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e0: f64,
}

impl VirtualZeeman {
    pub fn energy(&self, m_q: f64, m_r: f64) -> f64 {
        self.e0 + self.a * m_q + self.b * m_r + self.c * m_q * m_r
    }
}

/// Virtual spin projections `(m_Q, m_R)` of logical index `k`.
pub fn virtual_projections(k: usize) -> (f64, f64) {
    let m = |bit: usize| bit as f64 - 0.5;
    (m(k >> 1), m(k & 1))
}

/// Exact fit of the four energies to the virtual-spin Zeeman form. The
/// design matrix is orthogonal, so each coefficient is a projection.
pub fn virtual_zeeman_decomposition(es: &Eigensystem) -> VirtualZeeman {
    let mut acc = VirtualZeeman { a: 0.0, b: 0.0, c: 0.0, e0: 0.0 };
    for (k, e) in es.energies.iter().enumerate() {
        let (mq, mr) = virtual_projections(k);
        acc.e0 += e / 4.0;
        acc.a += e * mq;
        acc.b += e * mr;
        acc.c += e * mq * mr * 4.0;
    }
    acc
}

/// `(Q_z, R_z)` in physical coordinates for a map.
pub fn virtual_z_operators(map: &BasisMap) -> (CMatrix, CMatrix) {
    let qz = CMatrix::diag(&[-0.5, -0.5, 0.5, 0.5]).unwrap();
    let rz = CMatrix::diag(&[-0.5, 0.5, -0.5, 0.5]).unwrap();
    (map.to_physical(&qz), map.to_physical(&rz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlin::ONE;
    use crate::spinsys::{build_hamiltonian, build_spin_ops, diagonalize, SystemParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn es(w: f64, d: f64, j: f64) -> Eigensystem {
        diagonalize(&SystemParams::new(w, d, j)).unwrap()
    }

    fn col_is(map: &BasisMap, k: usize, phys: usize) -> bool {
        (map.matrix.column(k)[phys] - ONE).norm() < 1e-14
    }

    #[test]
    fn virtual_map_in_decoupled_limit_is_product_basis() {
        let m = basis_map(EncodingScheme::VirtualSpin, &es(500.0, 40.0, 0.0));
        assert!(col_is(&m, 0, PP) && col_is(&m, 1, PM) && col_is(&m, 2, MP) && col_is(&m, 3, MM));
    }

    #[test]
    fn virtual_map_in_symmetric_limit() {
        let m = basis_map(EncodingScheme::VirtualSpin, &es(500.0, 0.0, 30.0));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let c1 = m.matrix.column(1);
        let c2 = m.matrix.column(2);
        assert!((c1[PM].re - r).abs() < 1e-12 && (c1[MP].re - r).abs() < 1e-12);
        assert!((c2[PM].re + r).abs() < 1e-12 && (c2[MP].re - r).abs() < 1e-12);
    }

    #[test]
    fn zeeman_map_is_the_product_permutation() {
        let m = basis_map(EncodingScheme::Zeeman, &es(500.0, 40.0, 30.0));
        assert!(col_is(&m, 0, MM) && col_is(&m, 1, MP) && col_is(&m, 2, PM) && col_is(&m, 3, PP));
        assert!(m.matrix.unitarity_defect() <= 1e-12);
    }

    #[test]
    fn encode_examples() {
        let e = es(500.0, 40.0, 30.0);
        let m = basis_map(EncodingScheme::VirtualSpin, &e);
        let s = encode(&LogicalState::basis(0).unwrap(), &m);
        assert!((s[PP] - ONE).norm() < 1e-14);
        let s = encode(&LogicalState::basis(1).unwrap(), &m);
        assert!((s[PM].re - 0.948683298050514).abs() < 1e-12);
        assert!((s[MP].re - 0.316227766016838).abs() < 1e-12);
    }

    #[test]
    fn decode_rejects_unnormalized() {
        let m = basis_map(EncodingScheme::Zeeman, &es(500.0, 40.0, 30.0));
        let v = StateVec::new(&[ONE, ONE, C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        assert!(decode(&v, &m).is_err());
        assert!(LogicalState::new([ONE, ONE, ONE, ONE]).is_err());
    }

    #[test]
    fn round_trip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = es(500.0, 40.0, 30.0);
        for scheme in EncodingScheme::ALL {
            let m = basis_map(scheme, &e);
            for _ in 0..100 {
                let raw: Vec<C64> =
                    (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let v = StateVec::new(&raw).unwrap().normalized().unwrap();
                let l = LogicalState::new([v[0], v[1], v[2], v[3]]).unwrap();
                let back = decode(&encode(&l, &m), &m).unwrap();
                assert!(back.as_vec().sub(l.as_vec()).norm_sqr().sqrt() <= 1e-12);
            }
        }
    }

    fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> [f64; 4] {
        // Gaussian elimination with partial pivoting
        for col in 0..4 {
            let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in (col + 1)..4 {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = [0.0; 4];
        for row in (0..4).rev() {
            let s: f64 = ((row + 1)..4).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    #[test]
    fn decomposition_matches_linear_solve() {
        let e = es(500.0, 40.0, 30.0);
        let labels = [(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)];
        let mut a = [[0.0; 4]; 4];
        for (row, &(mq, mr)) in labels.iter().enumerate() {
            a[row] = [1.0, mq, mr, mq * mr];
        }
        let x = solve4(a, [507.5, 17.5, -32.5, -492.5]);
        assert!((x[0]).abs() < 1e-12);
        assert!((x[1] + 525.0).abs() < 1e-12);
        assert!((x[2] + 475.0).abs() < 1e-12);
        assert!((x[3] - 30.0).abs() < 1e-12);

        let d = virtual_zeeman_decomposition(&e);
        assert!((d.a + 525.0).abs() < 1e-10 && (d.b + 475.0).abs() < 1e-10);
        assert!((d.c - 30.0).abs() < 1e-10 && d.e0.abs() < 1e-10);
        for k in 0..4 {
            let (mq, mr) = virtual_projections(k);
            assert!((d.energy(mq, mr) - e.energies[k]).abs() <= 1e-10);
        }

        let d = virtual_zeeman_decomposition(&es(500.0, 0.0, 0.0));
        assert!((d.a + 500.0).abs() < 1e-12 && (d.b + 500.0).abs() < 1e-12 && d.c.abs() < 1e-12);
    }

    #[test]
    fn virtual_operators_commute_with_hamiltonian() {
        let params = SystemParams::new(500.0, 40.0, 30.0);
        let e = diagonalize(&params).unwrap();
        let h = build_hamiltonian(&params, false);
        let m = basis_map(EncodingScheme::VirtualSpin, &e);
        let diag = CMatrix::diag(&e.energies).unwrap();
        assert!(m.to_logical(&h).max_abs_diff(&diag) <= 1e-10);
        let (qz, rz) = virtual_z_operators(&m);
        assert!(qz.commutator(&h).max_abs() <= 1e-10);
        assert!(rz.commutator(&h).max_abs() <= 1e-10);

        let ops = build_spin_ops();
        assert!(ops.iz.commutator(&h).frobenius_norm() > 1.0);
        assert!(ops.sz.commutator(&h).frobenius_norm() > 1.0);
    }
}
