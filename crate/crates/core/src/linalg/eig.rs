//! Cyclic Jacobi eigensolver for dense Hermitian matrices.

use super::{c64, CMatrix, C64};

const MAX_SWEEPS: usize = 80;

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    /// `U diag(f(λ)) U†`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = fv[j];
            for x in scaled.column_mut(j).iter_mut() {
                *x *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn map_real<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        self.map(|l| c64(f(l), 0.0))
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix. Only the upper triangle's
/// Hermitian part matters; the input is symmetrized first.
pub fn eigh(a: &CMatrix) -> Eigh {
    let n = a.nrows();
    run(a.clone(), CMatrix::identity(n, n))
}

/// Same as [`eigh`], starting the rotations from a unitary `guess` whose
/// columns are approximate eigenvectors. Cuts sweeps when the matrix moves
/// little between calls.
pub fn eigh_warm(a: &CMatrix, guess: &CMatrix) -> Eigh {
    let b = guess.adjoint() * a * guess;
    run(b, guess.clone())
}

fn run(mut a: CMatrix, mut v: CMatrix) -> Eigh {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh needs a square matrix");
    for i in 0..n {
        for j in i + 1..n {
            let h = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = h;
            a[(j, i)] = h.conj();
        }
        a[(i, i)] = c64(a[(i, i)].re, 0.0);
    }
    let fro2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    if n > 1 && fro2 > 0.0 {
        jacobi(&mut a, &mut v, fro2);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    idx.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));
    let values = idx.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vectors.set_column(k, &v.column(i));
    }
    Eigh { values, vectors }
}

fn jacobi(a: &mut CMatrix, v: &mut CMatrix, fro2: f64) {
    let n = a.nrows();
    let target = (1e-15f64).powi(2) * fro2;
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for q in 1..n {
            for p in 0..q {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= target {
            return;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if sweep > 3 && abs * 1e18 < app.abs().min(aqq.abs()) {
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                let phase = apq / abs;
                let theta = (aqq - app) / (2.0 * abs);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.5 / theta
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let sp = phase * s;
                let spc = sp.conj();
                // columns: A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * spc;
                    a[(k, q)] = akp * sp + akq * c;
                }
                // rows: A <- J^† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * sp;
                    a[(q, k)] = apk * spc + aqk * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = c64(a[(p, p)].re, 0.0);
                a[(q, q)] = c64(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * spc;
                    v[(k, q)] = vkp * sp + vkq * c;
                }
            }
        }
    }
}
