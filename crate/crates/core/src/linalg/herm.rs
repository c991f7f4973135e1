use std::ops::{Add, Mul, Neg, Sub};

use super::eig::{eigh, Eigh};
use super::tensor::{embed_raw, permute_raw, ptrace_raw};
use super::{c64, CMatrix, RegisterShape, C64};
use crate::error::{Error, Result};

/// Entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on the trace and on negative eigenvalues of a density matrix.
pub const DENSITY_TOL: f64 = 1e-10;

/// Dense Hermitian operator on a register.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    shape: RegisterShape,
    mat: CMatrix,
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let h = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = h;
            m[(j, i)] = h.conj();
        }
        m[(j, j)] = c64(m[(j, j)].re, 0.0);
    }
}

impl HermitianOp {
    /// Validates shape and Hermiticity, then symmetrizes.
    pub fn new(shape: RegisterShape, mut mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), got: mat.ncols() });
        }
        if mat.nrows() != shape.dim() {
            return Err(Error::DimensionMismatch { expected: shape.dim(), got: mat.nrows() });
        }
        let dev = hermitian_deviation(&mat);
        if !dev.is_finite() || dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        symmetrize(&mut mat);
        Ok(HermitianOp { shape, mat })
    }

    /// Internal constructor for matrices that are Hermitian by construction
    /// up to rounding. Symmetrizes without the tolerance check.
    pub(crate) fn from_raw(shape: RegisterShape, mut mat: CMatrix) -> Self {
        debug_assert_eq!(mat.nrows(), shape.dim());
        symmetrize(&mut mat);
        HermitianOp { shape, mat }
    }

    pub fn from_real_rows(shape: RegisterShape, rows: &[f64]) -> Result<Self> {
        let n = shape.dim();
        if rows.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: rows.len() });
        }
        let m = CMatrix::from_fn(n, n, |i, j| c64(rows[i * n + j], 0.0));
        Self::new(shape, m)
    }

    pub fn diag(shape: RegisterShape, values: &[f64]) -> Result<Self> {
        if values.len() != shape.dim() {
            return Err(Error::DimensionMismatch { expected: shape.dim(), got: values.len() });
        }
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| c64(x, 0.0)),
        ));
        Ok(HermitianOp { shape, mat: m })
    }

    pub fn identity(shape: RegisterShape) -> Self {
        let n = shape.dim();
        HermitianOp { shape, mat: CMatrix::identity(n, n) }
    }

    pub fn zeros(shape: RegisterShape) -> Self {
        let n = shape.dim();
        HermitianOp { shape, mat: CMatrix::zeros(n, n) }
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|x| x.re).sum()
    }

    /// `Tr[self · other]`, real for Hermitian pairs.
    pub fn inner(&self, other: &HermitianOp) -> f64 {
        // Tr[AB] = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij)
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn scale(&self, s: f64) -> HermitianOp {
        HermitianOp { shape: self.shape.clone(), mat: &self.mat * c64(s, 0.0) }
    }

    fn check_same(&self, other: &HermitianOp) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::InvalidRegister(format!(
                "register mismatch: {:?} vs {:?}",
                self.shape.sites(),
                other.shape.sites()
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &HermitianOp) -> Result<HermitianOp> {
        self.check_same(other)?;
        Ok(HermitianOp { shape: self.shape.clone(), mat: &self.mat + &other.mat })
    }

    pub fn try_sub(&self, other: &HermitianOp) -> Result<HermitianOp> {
        self.check_same(other)?;
        Ok(HermitianOp { shape: self.shape.clone(), mat: &self.mat - &other.mat })
    }

    /// Hermitian part of the product, `(AB + BA)/2`.
    pub fn jordan(&self, other: &HermitianOp) -> Result<HermitianOp> {
        self.check_same(other)?;
        let ab = &self.mat * &other.mat;
        let sym = (&ab + ab.adjoint()) * c64(0.5, 0.0);
        Ok(HermitianOp::from_raw(self.shape.clone(), sym))
    }

    /// Operator norm of the commutator `[A, B]`.
    pub fn commutator_norm(&self, other: &HermitianOp) -> Result<f64> {
        self.check_same(other)?;
        let c = &self.mat * &other.mat - &other.mat * &self.mat;
        Ok(super::funcs::spectral_norm(&c))
    }

    /// Places `local` on `targets` and tensors with the identity elsewhere.
    pub fn embed(local: &HermitianOp, targets: &[usize], shape: &RegisterShape) -> Result<HermitianOp> {
        let expected = shape.local_dim().pow(targets.len() as u32);
        if local.dim() != expected || local.shape.local_dim() != shape.local_dim() {
            return Err(Error::DimensionMismatch { expected, got: local.dim() });
        }
        let pos = shape.positions(targets)?;
        Ok(HermitianOp { shape: shape.clone(), mat: embed_raw(&local.mat, shape, &pos) })
    }

    /// Embeds `self` (on a sub-register) into `shape`, matching by labels.
    pub fn extend_to(&self, shape: &RegisterShape) -> Result<HermitianOp> {
        Self::embed(self, self.shape.sites(), shape)
    }

    pub fn partial_trace(&self, traced: &[usize]) -> Result<HermitianOp> {
        let pos = self.shape.positions(traced)?;
        let shape = self.shape.complement(traced)?;
        Ok(HermitianOp::from_raw(shape, ptrace_raw(&self.mat, &self.shape, &pos)))
    }

    /// Partial trace down to `kept`, returned in this register's order.
    pub fn reduce_to(&self, kept: &[usize]) -> Result<HermitianOp> {
        self.shape.positions(kept)?;
        let traced: Vec<usize> = self.shape.sites().iter().copied().filter(|s| !kept.contains(s)).collect();
        self.partial_trace(&traced)
    }

    /// Same operator with the tensor factors reordered to `shape`.
    pub fn permuted(&self, shape: &RegisterShape) -> Result<HermitianOp> {
        if !self.shape.same_sites(shape) {
            return Err(Error::InvalidRegister("permutation needs the same site set".into()));
        }
        Ok(HermitianOp { shape: shape.clone(), mat: permute_raw(&self.mat, &self.shape, shape) })
    }

    /// `self ⊗ other` on the concatenated register.
    pub fn kron(&self, other: &HermitianOp) -> Result<HermitianOp> {
        let shape = self.shape.join(&other.shape)?;
        Ok(HermitianOp { shape, mat: self.mat.kronecker(&other.mat) })
    }

    pub fn eig(&self) -> Eigh {
        eigh(&self.mat)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig().values
    }

    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|x| x.abs()).sum()
    }

    pub fn op_norm(&self) -> f64 {
        let v = self.eigenvalues();
        v.first().map_or(0.0, |a| a.abs()).max(v.last().map_or(0.0, |b| b.abs()))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise distance to another operator on the same register.
    pub fn max_abs_diff(&self, other: &HermitianOp) -> f64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Applies a real function to the spectrum.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, f: F) -> HermitianOp {
        HermitianOp::from_raw(self.shape.clone(), self.eig().map_real(f))
    }

    /// Removes the trace part, `X − Tr(X) I/dim`.
    pub fn traceless_part(&self) -> HermitianOp {
        let t = self.trace() / self.dim() as f64;
        let mut m = self.mat.clone();
        for i in 0..self.dim() {
            m[(i, i)] -= c64(t, 0.0);
        }
        HermitianOp { shape: self.shape.clone(), mat: m }
    }
}

impl Add for &HermitianOp {
    type Output = HermitianOp;
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        self.try_add(rhs).expect("register mismatch in addition")
    }
}

impl Sub for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        self.try_sub(rhs).expect("register mismatch in subtraction")
    }
}

impl Neg for &HermitianOp {
    type Output = HermitianOp;
    fn neg(self) -> HermitianOp {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &HermitianOp {
    type Output = HermitianOp;
    fn mul(self, rhs: f64) -> HermitianOp {
        self.scale(rhs)
    }
}

/// Positive semidefinite unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    op: HermitianOp,
}

impl DensityState {
    pub fn new(op: HermitianOp) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let min = op.eig().min();
        if min < -DENSITY_TOL {
            return Err(Error::NotDensity(format!("minimum eigenvalue {min:e}")));
        }
        Ok(DensityState { op })
    }

    pub fn from_matrix(shape: RegisterShape, mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOp::new(shape, mat)?)
    }

    /// Trusted constructor for states produced by CPTP maps or marginals.
    pub(crate) fn from_op_unchecked(op: HermitianOp) -> Self {
        DensityState { op }
    }

    pub fn maximally_mixed(shape: RegisterShape) -> Self {
        let d = shape.dim() as f64;
        DensityState { op: HermitianOp::identity(shape).scale(1.0 / d) }
    }

    /// `|ψ⟩⟨ψ|` for the normalized vector.
    pub fn pure(shape: RegisterShape, amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() != shape.dim() {
            return Err(Error::DimensionMismatch { expected: shape.dim(), got: amplitudes.len() });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotDensity("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|a| a / norm));
        let m = &v * v.adjoint();
        Ok(DensityState { op: HermitianOp::from_raw(shape, m) })
    }

    /// Tensor product in the listed order.
    pub fn product(factors: &[DensityState]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        let mut op = first.op.clone();
        for f in rest {
            op = op.kron(&f.op)?;
        }
        Ok(DensityState { op })
    }

    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    pub fn into_op(self) -> HermitianOp {
        self.op
    }

    pub fn shape(&self) -> &RegisterShape {
        self.op.shape()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Marginal on `kept` sites (register order).
    pub fn marginal(&self, kept: &[usize]) -> Result<DensityState> {
        Ok(DensityState { op: self.op.reduce_to(kept)? })
    }

    pub fn partial_trace(&self, traced: &[usize]) -> Result<DensityState> {
        Ok(DensityState { op: self.op.partial_trace(traced)? })
    }

    /// `λ·self + (1−λ)·other` for λ ∈ [0, 1].
    pub fn mix(&self, other: &DensityState, lambda: f64) -> Result<DensityState> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("mixing weight {lambda} outside [0,1]")));
        }
        let op = self.op.scale(lambda).try_add(&other.op.scale(1.0 - lambda))?;
        Ok(DensityState { op })
    }

    pub fn kron(&self, other: &DensityState) -> Result<DensityState> {
        Ok(DensityState { op: self.op.kron(&other.op)? })
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.op
            .eigenvalues()
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| -l * l.ln())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;

    #[test]
    fn rejects_non_hermitian() {
        let s = RegisterShape::qubits(1).unwrap();
        let m = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(HermitianOp::new(s.clone(), m), Err(Error::NotHermitian(_))));
        let near = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0 + 1e-12, 0.0), c64(0.0, 0.0)]);
        let h = HermitianOp::new(s, near).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
    }

    #[test]
    fn embed_z_on_first_site() {
        let s = RegisterShape::qubits(2).unwrap();
        let z = paulis::z(0);
        let e = HermitianOp::embed(&z, &[0], &s).unwrap();
        let want = HermitianOp::diag(s, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(e, want);
    }

    #[test]
    fn embed_identity_and_square() {
        let s = RegisterShape::new(vec![1, 2, 3], 2).unwrap();
        let id = HermitianOp::identity(RegisterShape::new(vec![7, 8], 2).unwrap());
        let e = HermitianOp::embed(&id, &[3, 1], &s).unwrap();
        assert_eq!(e, HermitianOp::identity(s.clone()));
        let x = HermitianOp::embed(&paulis::x(0), &[2], &s).unwrap();
        let sq = x.matrix() * x.matrix();
        assert!((sq - CMatrix::identity(8, 8)).norm() < 1e-15);
    }

    #[test]
    fn embed_errors() {
        let s = RegisterShape::qubits(2).unwrap();
        assert!(matches!(
            HermitianOp::embed(&paulis::x(0), &[0, 1], &s),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(HermitianOp::embed(&paulis::x(0), &[5], &s), Err(Error::UnknownSite(5))));
    }

    #[test]
    fn bell_marginal_is_mixed() {
        let s = RegisterShape::new(vec![1, 2], 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityState::pure(s, &[c64(r, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(r, 0.0)]).unwrap();
        let m = bell.partial_trace(&[2]).unwrap();
        assert_eq!(m.shape().sites(), &[1]);
        assert!(m.op().max_abs_diff(&HermitianOp::identity(m.shape().clone()).scale(0.5)) < 1e-15);
        let all = bell.partial_trace(&[1, 2]).unwrap();
        assert!(all.shape().is_trivial());
        assert!((all.op().trace() - 1.0).abs() < 1e-12);
        assert!(bell.partial_trace(&[4]).is_err());
    }

    #[test]
    fn product_marginals() {
        let a = DensityState::pure(RegisterShape::new(vec![0], 2).unwrap(), &[c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
        let b = DensityState::maximally_mixed(RegisterShape::new(vec![1, 2], 2).unwrap());
        let ab = DensityState::product(&[a.clone(), b.clone()]).unwrap();
        assert!(ab.marginal(&[0]).unwrap().op().max_abs_diff(a.op()) < 1e-15);
        assert!(ab.marginal(&[1, 2]).unwrap().op().max_abs_diff(b.op()) < 1e-15);
    }

    #[test]
    fn trace_scaling_of_embedded() {
        let s = RegisterShape::qubits(3).unwrap();
        let xa = &paulis::x(0) + &paulis::z(0).scale(0.3);
        let e = HermitianOp::embed(&xa, &[1], &s).unwrap();
        let back = e.partial_trace(&[0, 2]).unwrap();
        assert!((back.matrix() - xa.matrix() * c64(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn density_validation() {
        let s = RegisterShape::qubits(1).unwrap();
        assert!(DensityState::new(HermitianOp::diag(s.clone(), &[1.2, -0.2]).unwrap()).is_err());
        assert!(DensityState::new(HermitianOp::diag(s.clone(), &[0.5, 0.6]).unwrap()).is_err());
        assert!(DensityState::new(HermitianOp::diag(s, &[1.0, 0.0]).unwrap()).is_ok());
    }

    #[test]
    fn pure_minus_mixed_trace_norm() {
        let s = RegisterShape::qubits(1).unwrap();
        let rho = DensityState::pure(s.clone(), &[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let w = DensityState::maximally_mixed(s);
        let d = rho.op() - w.op();
        assert!((d.trace_norm() - 1.0).abs() < 1e-14);
        assert!((paulis::z(0).trace_norm() - 2.0).abs() < 1e-15);
        assert!((paulis::z(0).op_norm() - 1.0).abs() < 1e-15);
    }
}
