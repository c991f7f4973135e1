//! Single-qubit Pauli matrices on a one-site register with a given label.

use super::{c64, CMatrix, HermitianOp, RegisterShape};

fn one(site: usize, rows: [[(f64, f64); 2]; 2]) -> HermitianOp {
    let shape = RegisterShape::new(vec![site], 2).expect("valid qubit register");
    let m = CMatrix::from_fn(2, 2, |i, j| c64(rows[i][j].0, rows[i][j].1));
    HermitianOp::new(shape, m).expect("Pauli matrices are Hermitian")
}

pub fn x(site: usize) -> HermitianOp {
    one(site, [[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]])
}

pub fn y(site: usize) -> HermitianOp {
    one(site, [[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]])
}

pub fn z(site: usize) -> HermitianOp {
    one(site, [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]])
}

pub fn id(site: usize) -> HermitianOp {
    one(site, [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]])
}

/// `Z_a Z_b` on the two-site register `[a, b]`.
pub fn zz(a: usize, b: usize) -> HermitianOp {
    z(a).kron(&z(b)).expect("distinct sites")
}
