//! Matrix functions and norms.

use super::eig::{eigh, Eigh};
use super::{CMatrix, HermitianOp, C64};
use crate::error::{Error, Result};

/// Smallest eigenvalue accepted as positive definite.
pub const PD_FLOOR: f64 = 1e-12;
/// Relative floor used when clipping near-singular spectra.
pub const CLIP_REL: f64 = 1e-12;

fn pd_eig(x: &HermitianOp) -> Result<Eigh> {
    let e = x.eig();
    if e.min() <= PD_FLOOR {
        return Err(Error::NotPositiveDefinite(e.min()));
    }
    Ok(e)
}

/// `X^z` on the principal branch.
pub fn mat_power(x: &HermitianOp, z: C64) -> Result<CMatrix> {
    let e = pd_eig(x)?;
    Ok(e.map(|l| (z * l.ln()).exp()))
}

pub fn mat_exp(x: &HermitianOp) -> HermitianOp {
    x.apply_fn(f64::exp)
}

pub fn mat_log(x: &HermitianOp) -> Result<HermitianOp> {
    let e = pd_eig(x)?;
    Ok(HermitianOp::from_raw(x.shape().clone(), e.map_real(f64::ln)))
}

pub fn trace_norm(x: &HermitianOp) -> f64 {
    x.trace_norm()
}

pub fn op_norm(x: &HermitianOp) -> f64 {
    x.op_norm()
}

/// Largest singular value of an arbitrary square matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    eigh(&g).max().max(0.0).sqrt()
}

/// Sum of singular values of an arbitrary square matrix.
pub fn schatten1(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    eigh(&g).values.iter().map(|&l| l.max(0.0).sqrt()).sum()
}

/// Eigendecomposition with eigenvalues floored at `CLIP_REL·‖X‖_∞`.
#[derive(Clone, Debug)]
pub struct ClippedSpectrum {
    pub eig: Eigh,
    pub clipped: bool,
}

impl ClippedSpectrum {
    pub fn new(x: &HermitianOp) -> Self {
        let mut eig = x.eig();
        let floor = CLIP_REL * eig.max().abs().max(eig.min().abs()).max(f64::MIN_POSITIVE);
        let mut clipped = false;
        for l in eig.values.iter_mut() {
            if *l < floor {
                *l = floor;
                clipped = true;
            }
        }
        ClippedSpectrum { eig, clipped }
    }

    pub fn power(&self, z: C64) -> CMatrix {
        self.eig.map(|l| (z * l.ln()).exp())
    }
}

/// Both sides of `‖A^z − B^z‖ ≤ |z| M^{1+|Re z|} ‖A − B‖` with
/// `M = max(‖A‖, ‖A⁻¹‖, ‖B‖, ‖B⁻¹‖)`.
pub fn power_perturbation_check(a: &HermitianOp, b: &HermitianOp, z: C64) -> Result<(f64, f64)> {
    let ea = pd_eig(a)?;
    let eb = pd_eig(b)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let pa = ea.map(|l| (z * l.ln()).exp());
    let pb = eb.map(|l| (z * l.ln()).exp());
    let lhs = spectral_norm(&(pa - pb));
    let m = ea.max().max(1.0 / ea.min()).max(eb.max()).max(1.0 / eb.min());
    let diff = HermitianOp::from_raw(a.shape().clone(), a.matrix() - b.matrix());
    let rhs = z.norm() * m.powf(1.0 + z.re.abs()) * diff.op_norm();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, RegisterShape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q1() -> RegisterShape {
        RegisterShape::qubits(1).unwrap()
    }

    #[test]
    fn power_examples() {
        let x = HermitianOp::diag(q1(), &[1.0, 4.0]).unwrap();
        let h = mat_power(&x, c64(0.5, 0.0)).unwrap();
        assert!((h[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
        assert!((h[(1, 1)] - c64(2.0, 0.0)).norm() < 1e-14);
        let z = mat_power(&x, c64(0.0, 0.0)).unwrap();
        assert!((z - CMatrix::identity(2, 2)).norm() < 1e-14);
        let e = std::f64::consts::E;
        let ei = mat_power(&HermitianOp::diag(q1(), &[e, e]).unwrap(), c64(0.0, 1.0)).unwrap();
        assert!((ei[(0, 0)] - c64(1f64.cos(), 1f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn power_rejects_singular() {
        let x = HermitianOp::diag(q1(), &[1.0, 0.0]).unwrap();
        assert!(matches!(mat_power(&x, c64(0.5, 0.0)), Err(Error::NotPositiveDefinite(_))));
        assert!(mat_log(&HermitianOp::diag(q1(), &[1.0, -1.0]).unwrap()).is_err());
    }

    #[test]
    fn exp_log_roundtrip() {
        let s = RegisterShape::qubits(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = CMatrix::from_fn(4, 4, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = HermitianOp::from_raw(s, (&m + m.adjoint()) * c64(0.5, 0.0));
        let back = mat_log(&mat_exp(&h)).unwrap();
        assert!(back.max_abs_diff(&h) < 1e-12);
    }

    #[test]
    fn perturbation_examples() {
        let a = HermitianOp::diag(q1(), &[1.0, 2.0]).unwrap();
        let b = HermitianOp::diag(q1(), &[1.0, 2.1]).unwrap();
        let (l, r) = power_perturbation_check(&a, &a, c64(0.5, 0.5)).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = power_perturbation_check(&a, &b, c64(1.0, 0.0)).unwrap();
        assert!((l - 0.1).abs() < 1e-12);
        assert!(l <= r);
    }

    #[test]
    fn schatten_of_hermitian() {
        let z = HermitianOp::diag(q1(), &[0.3, -0.7]).unwrap();
        assert!((schatten1(z.matrix()) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(z.matrix()) - 0.7).abs() < 1e-14);
    }
}
