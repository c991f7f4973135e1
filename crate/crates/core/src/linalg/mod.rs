//! Dense multi-qudit linear algebra.

pub mod eig;
pub mod funcs;
pub mod herm;
pub mod paulis;
pub mod quadrature;
pub mod random;
pub mod register;
pub mod tensor;

pub use eig::{eigh, eigh_warm, Eigh};
pub use funcs::{mat_exp, mat_log, mat_power, op_norm, power_perturbation_check, spectral_norm, trace_norm};
pub use herm::{DensityState, HermitianOp};
pub use quadrature::{mu0_density, mu0_quadrature, QuadratureRule};
pub use register::RegisterShape;

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
