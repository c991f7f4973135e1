//! Index plumbing for embedding and partial traces on raw matrices.

use super::{CMatrix, C64};
use crate::linalg::RegisterShape;

/// `Tr_{positions}` of a full-register matrix. The result lives on the
/// remaining positions in register order.
pub fn ptrace_raw(m: &CMatrix, shape: &RegisterShape, traced: &[usize]) -> CMatrix {
    let kept: Vec<usize> = (0..shape.num_sites()).filter(|p| !traced.contains(p)).collect();
    let ko = shape.offsets(&kept);
    let to = shape.offsets(traced);
    let k = ko.len();
    let mut out = CMatrix::zeros(k, k);
    for b in 0..k {
        for a in 0..k {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &to {
                acc += m[(ko[a] + t, ko[b] + t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// `local ⊗ I` with the factors of `local` placed on `targets` (positions,
/// first listed is the most significant factor of `local`).
pub fn embed_raw(local: &CMatrix, shape: &RegisterShape, targets: &[usize]) -> CMatrix {
    let rest: Vec<usize> = (0..shape.num_sites()).filter(|p| !targets.contains(p)).collect();
    let to = shape.offsets(targets);
    let ro = shape.offsets(&rest);
    let dim = shape.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for (b, &ob) in to.iter().enumerate() {
        for (a, &oa) in to.iter().enumerate() {
            let v = local[(a, b)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for &r in &ro {
                out[(oa + r, ob + r)] = v;
            }
        }
    }
    out
}

/// `I_v/d ⊗ Tr_v(m)` for the site at position `pos`.
pub fn site_average_raw(m: &CMatrix, shape: &RegisterShape, pos: usize) -> CMatrix {
    let d = shape.local_dim();
    let stride = shape.strides()[pos];
    let dim = shape.dim();
    let inv = 1.0 / d as f64;
    let mut out = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let dj = (j / stride) % d;
        let j0 = j - dj * stride;
        for i in 0..dim {
            let di = (i / stride) % d;
            if di != dj {
                continue;
            }
            let i0 = i - di * stride;
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += m[(i0 + k * stride, j0 + k * stride)];
            }
            out[(i, j)] = acc * inv;
        }
    }
    out
}

/// Reorders the tensor factors of a matrix on `from` into the order of `to`
/// (same label set).
pub fn permute_raw(m: &CMatrix, from: &RegisterShape, to: &RegisterShape) -> CMatrix {
    let pos: Vec<usize> = to.sites().iter().map(|&s| from.position(s).expect("same sites")).collect();
    let idx = from.offsets(&pos);
    let n = idx.len();
    CMatrix::from_fn(n, n, |a, b| m[(idx[a], idx[b])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn site_average_matches_trace_then_embed() {
        let shape = RegisterShape::qubits(3).unwrap();
        let m = CMatrix::from_fn(8, 8, |i, j| c64((i * 8 + j) as f64, (i as f64) - (j as f64)));
        for pos in 0..3 {
            let tr = ptrace_raw(&m, &shape, &[pos]);
            let rest: Vec<usize> = (0..3).filter(|&p| p != pos).collect();
            let back = embed_raw(&tr, &shape, &rest) * c64(0.5, 0.0);
            assert!((site_average_raw(&m, &shape, pos) - back).norm() < 1e-12);
        }
    }

    #[test]
    fn permute_roundtrip() {
        let a = RegisterShape::new(vec![0, 1, 2], 2).unwrap();
        let b = RegisterShape::new(vec![2, 0, 1], 2).unwrap();
        let m = CMatrix::from_fn(8, 8, |i, j| c64(i as f64, j as f64));
        let back = permute_raw(&permute_raw(&m, &a, &b), &b, &a);
        assert_eq!(back, m);
    }
}
