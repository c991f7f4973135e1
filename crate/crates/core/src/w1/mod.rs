//! Quantum W1 norm, Lipschitz constants and the differential Lipschitz norm.

pub mod classical;
pub mod differential;
pub mod lipschitz;
pub mod primal;

pub use classical::classical_w1_oracle;
pub use differential::{comparison_check, diff_lipschitz, DifferentialStructure, LindbladOp};
pub use lipschitz::{lip_const, lip_const_with, LipOptions, LipschitzBracket};
pub use primal::{light_cone_expansion_check, w1_distance, w1_dual, w1_norm, w1_primal, W1Certificate, W1Options};

use crate::linalg::tensor::site_average_raw;
use crate::linalg::{eigh, CMatrix, RegisterShape};

/// Absolute tolerance on `|Tr X|` for traceless inputs, relative to `‖X‖_F`.
pub(crate) const TRACE_TOL: f64 = 1e-9;

/// `E_v(M) = I_v/d ⊗ Tr_v M` at register position `pos`.
pub(crate) fn avg(m: &CMatrix, shape: &RegisterShape, pos: usize) -> CMatrix {
    site_average_raw(m, shape, pos)
}

/// `M − E_v(M)`.
pub(crate) fn proj(m: &CMatrix, shape: &RegisterShape, pos: usize) -> CMatrix {
    m - avg(m, shape, pos)
}

/// `λ_max − λ_min`, twice the distance of `M` to the scalars in operator norm.
pub(crate) fn spread(m: &CMatrix) -> f64 {
    let e = eigh(m);
    e.max() - e.min()
}

pub(crate) fn herm_trace_norm(m: &CMatrix) -> f64 {
    eigh(m).values.iter().map(|x| x.abs()).sum()
}

/// Real Hilbert–Schmidt inner product `Re Tr[A†B]`.
pub(crate) fn hs_dot(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// `Re Tr[A B]` for Hermitian `A`, `B`.
pub(crate) fn tr_prod(a: &CMatrix, b: &CMatrix) -> f64 {
    hs_dot(a, b)
}

/// Splits a traceless `R` as `Σ_v R_v` with `R_v = E_{<v}R − E_{≤v}R`, so
/// that `Tr_v R_v = 0`.
pub(crate) fn telescope(r: &CMatrix, shape: &RegisterShape) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(shape.num_sites());
    let mut prev = r.clone();
    for pos in 0..shape.num_sites() {
        let next = avg(&prev, shape, pos);
        out.push(&prev - &next);
        prev = next;
    }
    out
}
