//! Dense complex linear algebra for the 2- and 4-dimensional spaces of a
//! spin pair.
//!
//! Matrices are stored row-major in a fixed `[C64; 16]` buffer so every value
//! is `Copy` and no kernel allocates. Hermitian eigenproblems are solved by
//! cyclic complex Jacobi rotations.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const MAX_DIM: usize = 4;
const HERMITIAN_TOL: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 50;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix of dimension 2 or 4.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: [C64; MAX_DIM * MAX_DIM],
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: [ZERO; MAX_DIM * MAX_DIM] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be 4 or 16.
    pub fn from_rows(entries: &[C64]) -> Result<Self> {
        let dim = match entries.len() {
            4 => 2,
            16 => 4,
            n => {
                return Err(Error::InvalidArgument(format!(
                    "expected 4 or 16 matrix entries, got {n}"
                )))
            }
        };
        let mut m = Self::zeros(dim)?;
        m.data[..entries.len()].copy_from_slice(entries);
        Ok(m)
    }

    pub fn from_real_rows(entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(&c)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Ok(m)
    }

    /// Matrix whose columns are the given states.
    pub fn from_columns(cols: &[StateVec]) -> Result<Self> {
        let mut m = Self::zeros(cols.len())?;
        for (j, c) in cols.iter().enumerate() {
            if c.dim() != cols.len() {
                return Err(Error::InvalidArgument("column dimension mismatch".into()));
            }
            for i in 0..c.dim() {
                m[(i, j)] = c[i];
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> StateVec {
        let mut v = StateVec::zeros_unchecked(self.dim);
        for i in 0..self.dim {
            v.amps[i] = self[(i, j)];
        }
        v
    }

    pub fn adjoint(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max|M - M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `max|U†U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let id = Self::identity(self.dim).expect("valid dim");
        (self.adjoint() * *self).max_abs_diff(&id)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn apply(&self, v: &StateVec) -> StateVec {
        assert_eq!(self.dim, v.dim(), "dimension mismatch");
        let mut out = StateVec::zeros_unchecked(self.dim);
        for i in 0..self.dim {
            let mut acc = ZERO;
            for j in 0..self.dim {
                acc += self[(i, j)] * v[j];
            }
            out.amps[i] = acc;
        }
        out
    }

    /// Row-major view of the `dim²` live entries.
    pub fn entries(&self) -> &[C64] {
        &self.data[..self.dim * self.dim]
    }

    /// `|M_ij|²` for every entry, row-major.
    pub fn moduli_squared(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)].norm_sqr()).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix { dim: n, data: [ZERO; MAX_DIM * MAX_DIM] };
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(mut self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(mut self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:>+10.5}{:+.5}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Complex state vector of dimension 2 or 4.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct StateVec {
    dim: usize,
    amps: [C64; MAX_DIM],
}

impl StateVec {
    fn zeros_unchecked(dim: usize) -> Self {
        Self { dim, amps: [ZERO; MAX_DIM] }
    }

    pub fn new(amps: &[C64]) -> Result<Self> {
        check_dim(amps.len())?;
        let mut v = Self::zeros_unchecked(amps.len());
        v.amps[..amps.len()].copy_from_slice(amps);
        Ok(v)
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(Error::InvalidArgument(format!("basis index {k} out of range")));
        }
        let mut v = Self::zeros_unchecked(dim);
        v.amps[k] = ONE;
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps[..self.dim]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVec) -> C64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.amplitudes().iter().zip(other.amplitudes()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.amps.iter_mut().for_each(|a| *a *= s);
        out
    }

    pub fn sub(&self, other: &StateVec) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.amps[i] -= other.amps[i];
        }
        out
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes().iter().map(|a| a.norm_sqr()).collect()
    }

    /// Errors unless `|‖v‖² - 1| ≤ tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized (norm² = {n})"
            )));
        }
        Ok(())
    }
}

impl Index<usize> for StateVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        debug_assert!(i < self.dim);
        &self.amps[i]
    }
}

impl IndexMut<usize> for StateVec {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        debug_assert!(i < self.dim);
        &mut self.amps[i]
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as matrix columns.
#[derive(Clone, Copy, Debug)]
pub struct EigenDecomp {
    pub eigenvalues: [f64; MAX_DIM],
    pub eigenvectors: CMatrix,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvectors.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.eigenvalues[..self.dim()]
    }

    pub fn vector(&self, k: usize) -> StateVec {
        self.eigenvectors.column(k)
    }

    /// `Σₖ λₖ vₖvₖ†`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = self.eigenvectors;
        let d = CMatrix::diag(self.values()).expect("valid dim");
        v * d * v.adjoint()
    }

    /// `V·diag(e^{-iλₖt})·V†`.
    pub fn evolution(&self, t: f64) -> CMatrix {
        let n = self.dim();
        let v = self.eigenvectors;
        let mut d = CMatrix::zeros(n).expect("valid dim");
        for k in 0..n {
            d[(k, k)] = C64::from_polar(1.0, -self.eigenvalues[k] * t);
        }
        v * d * v.adjoint()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension must be 2 or 4, got {dim}")))
    }
}

/// Kronecker product of two 2×2 matrices; entry `(2·ia + ib, 2·ja + jb)`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.dim() != 2 || b.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "tensor expects two 2x2 factors, got {}x{} and {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    let mut out = CMatrix::zeros(4)?;
    for ia in 0..2 {
        for ja in 0..2 {
            for ib in 0..2 {
                for jb in 0..2 {
                    out[(2 * ia + ib, 2 * ja + jb)] = a[(ia, ja)] * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending. Each eigenvector is phased so that its
/// largest-magnitude component (first index on ties) is real and positive;
/// vectors inside a degenerate cluster are Gram-Schmidt re-orthonormalized in
/// index order.
pub fn hermitian_eigensystem(m: &CMatrix) -> Result<EigenDecomp> {
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (max|M - M†| = {defect:e})"
        )));
    }
    let n = m.dim();
    // symmetrize so the rotations act on an exactly Hermitian matrix
    let mut a = (*m + m.adjoint()).scale_real(0.5);
    let mut v = CMatrix::identity(n)?;

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));

    let mut eigenvalues = [0.0; MAX_DIM];
    let mut cols: Vec<StateVec> = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        eigenvalues[k] = a[(src, src)].re;
        cols.push(v.column(src));
    }

    // degenerate clusters: re-orthonormalize in index order
    let cluster_tol = 1e-10 * scale.max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            for k in start..end {
                let mut w = cols[k];
                for prev in &cols[start..k] {
                    let overlap = prev.inner(&w);
                    w = w.sub(&prev.scale(overlap));
                }
                cols[k] = w.normalized()?;
            }
        }
        start = end;
    }

    for c in cols.iter_mut() {
        *c = fix_phase(c);
    }

    Ok(EigenDecomp { eigenvalues, eigenvectors: CMatrix::from_columns(&cols)? })
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation zeroing `a[p][q]`; accumulates into `v`.
///
/// With `a_pq = r·e^{iα}` the rotation is `G = diag(1, e^{-iα})·R` on the
/// `(p, q)` plane, `R` the real Jacobi rotation of the phased block.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let zeta = (aqq - app) / (2.0 * r);
    let t = zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ph = (apq / r).conj();

    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = ph * -s;
    let g_qq = ph * c;

    let n = a.dim();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

fn fix_phase(v: &StateVec) -> StateVec {
    let mags: Vec<f64> = v.amplitudes().iter().map(|a| a.norm()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let lead = mags.iter().position(|&m| m >= max * (1.0 - 1e-12)).unwrap_or(0);
    let a = v[lead];
    if a.norm() == 0.0 {
        return *v;
    }
    v.scale(a.conj() / a.norm())
}

/// `exp(-i·m·t)` for Hermitian `m`, via its eigendecomposition.
pub fn expm_i(m: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(hermitian_eigensystem(m)?.evolution(t))
}
