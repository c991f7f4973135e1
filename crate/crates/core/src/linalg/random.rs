//! Seeded random matrices and states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{c64, CMatrix, DensityState, HermitianOp, RegisterShape, C64};

/// Independent generator for trial `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with iid standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Hermitian matrix from the Gaussian unitary ensemble, scaled to unit
/// operator norm.
pub fn random_hermitian<R: Rng + ?Sized>(shape: &RegisterShape, rng: &mut R) -> HermitianOp {
    let n = shape.dim();
    let g = ginibre(n, n, rng);
    let h = HermitianOp::from_raw(shape.clone(), (&g + g.adjoint()) * c64(0.5, 0.0));
    let norm = h.op_norm();
    if norm > 0.0 {
        h.scale(1.0 / norm)
    } else {
        h
    }
}

/// Traceless Hermitian matrix with unit trace norm.
pub fn random_traceless<R: Rng + ?Sized>(shape: &RegisterShape, rng: &mut R) -> HermitianOp {
    let h = random_hermitian(shape, rng).traceless_part();
    let t = h.trace_norm();
    h.scale(1.0 / t)
}

pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

pub fn random_pure<R: Rng + ?Sized>(shape: &RegisterShape, rng: &mut R) -> DensityState {
    let v = random_pure_vector(shape.dim(), rng);
    DensityState::pure(shape.clone(), &v).expect("normalized vector")
}

/// `G G† / Tr` with `G` of size `dim × rank`; full rank when `rank ≥ dim`.
pub fn random_density<R: Rng + ?Sized>(shape: &RegisterShape, rank: usize, rng: &mut R) -> DensityState {
    let n = shape.dim();
    let g = ginibre(n, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|x| x.re).sum();
    DensityState::from_op_unchecked(HermitianOp::from_raw(shape.clone(), m * c64(1.0 / tr, 0.0)))
}

/// Haar-random unitary via QR of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] *= ph;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_objects_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = RegisterShape::qubits(2).unwrap();
        let rho = random_density(&s, 4, &mut rng);
        assert!(DensityState::new(rho.op().clone()).is_ok());
        let x = random_traceless(&s, &mut rng);
        assert!(x.trace().abs() < 1e-12);
        assert!((x.trace_norm() - 1.0).abs() < 1e-12);
        let u = random_unitary(4, &mut rng);
        assert!((u.adjoint() * &u - CMatrix::identity(4, 4)).norm() < 1e-12);
    }
}
