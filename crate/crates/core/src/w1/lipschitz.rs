//! Two-sided brackets on the quantum Lipschitz constant
//! `‖H‖_L = 2 max_v min_G ‖H − I_v ⊗ G‖_∞`.

use serde::Serialize;

use super::{avg, proj, tr_prod};
use crate::linalg::{c64, eigh, CMatrix, HermitianOp, RegisterShape};

/// Settings for the smoothed descent that tightens [`lip_const`].
#[derive(Clone, Debug, Serialize)]
pub struct LipOptions {
    pub refine: bool,
    /// Quasi-Newton steps per smoothing level.
    pub steps: usize,
    /// Number of smoothing levels, each shrinking the smoothing parameter
    /// by a factor of four.
    pub levels: usize,
}

impl Default for LipOptions {
    fn default() -> Self {
        LipOptions { refine: true, steps: 200, levels: 20 }
    }
}

#[derive(Clone, Debug)]
pub struct LipschitzBracket {
    pub lower: f64,
    pub upper: f64,
    /// Best `H^{(v)} = I_v ⊗ G` found for each site, in register order.
    pub per_site_witnesses: Vec<(usize, HermitianOp)>,
}

/// Smoothed `‖M‖_∞ ≈ μ ln Tr(e^{M/μ} + e^{−M/μ})` and its gradient.
fn smoothed(m: &CMatrix, mu: f64) -> (f64, CMatrix) {
    let e = eigh(m);
    let top = e.max().abs().max(e.min().abs());
    let pos: Vec<f64> = e.values.iter().map(|&l| ((l - top) / mu).exp()).collect();
    let neg: Vec<f64> = e.values.iter().map(|&l| ((-l - top) / mu).exp()).collect();
    let z: f64 = pos.iter().sum::<f64>() + neg.iter().sum::<f64>();
    let value = top + mu * z.ln();
    let w: Vec<f64> = pos.iter().zip(&neg).map(|(p, q)| (p - q) / z).collect();
    let mut scaled = e.vectors.clone();
    for (j, wj) in w.iter().enumerate() {
        for x in scaled.column_mut(j).iter_mut() {
            *x *= *wj;
        }
    }
    let grad = scaled * e.vectors.adjoint();
    (value, grad)
}

struct SiteResult {
    /// Certified `min_G ‖H − I_v⊗G‖_∞` upper bound and its minimizer.
    upper: f64,
    witness: CMatrix,
    /// Certified lower bound on the same minimum.
    lower: f64,
}

fn centered(h: &CMatrix, g: &CMatrix) -> (f64, CMatrix) {
    let m = h - g;
    let e = eigh(&m);
    let shift = 0.5 * (e.max() + e.min());
    let mut w = g.clone();
    for i in 0..w.nrows() {
        w[(i, i)] += c64(shift, 0.0);
    }
    (0.5 * (e.max() - e.min()), w)
}

/// Lower bound `Tr[H Y] / ‖Y‖_1` for `Y = P_v(S)`.
fn dual_value(h: &CMatrix, s: &CMatrix, shape: &RegisterShape, pos: usize) -> f64 {
    let y = proj(s, shape, pos);
    let n1: f64 = eigh(&y).values.iter().map(|x| x.abs()).sum();
    if n1 <= 0.0 {
        return 0.0;
    }
    (tr_prod(h, &y) / n1).max(0.0)
}

const MEMORY: usize = 8;

/// L-BFGS on `X ↦ smoothed(H − X)` over `X` in the range of `E_v`.
/// Returns the final `X` and the gradient `S` of the smoothed norm there.
fn lbfgs_level(h: &CMatrix, x0: CMatrix, shape: &RegisterShape, pos: usize, mu: f64, steps: usize) -> (CMatrix, CMatrix) {
    let mut x = x0;
    let (mut f, mut s) = smoothed(&(h - &x), mu);
    // gradient with respect to X is −E_v(S)
    let mut g = -avg(&s, shape, pos);
    let mut hist: Vec<(CMatrix, CMatrix, f64)> = Vec::new();
    for _ in 0..steps {
        let gn = tr_prod(&g, &g);
        if gn < 1e-26 {
            break;
        }
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (sk, yk, rk) in hist.iter().rev() {
            let a = rk * tr_prod(sk, &q);
            q -= yk * c64(a, 0.0);
            alphas.push(a);
        }
        if let Some((sk, yk, _)) = hist.last() {
            q *= c64(tr_prod(sk, yk) / tr_prod(yk, yk), 0.0);
        } else {
            q *= c64(mu, 0.0);
        }
        for ((sk, yk, rk), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rk * tr_prod(yk, &q);
            q += sk * c64(a - b, 0.0);
        }
        let mut dir = -q;
        let mut slope = tr_prod(&g, &dir);
        if slope >= 0.0 {
            dir = -g.clone();
            slope = -gn;
            hist.clear();
        }
        let mut step = 1.0;
        let mut moved = None;
        while step > 1e-12 {
            let trial = &x + &dir * c64(step, 0.0);
            let (ft, st) = smoothed(&(h - &trial), mu);
            if ft <= f + 1e-4 * step * slope {
                moved = Some((trial, ft, st));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, sn)) = moved else { break };
        let gnew = -avg(&sn, shape, pos);
        let sk = &xn - &x;
        let yk = &gnew - &g;
        let sy = tr_prod(&sk, &yk);
        if sy > 1e-300 {
            if hist.len() == MEMORY {
                hist.remove(0);
            }
            hist.push((sk, yk, 1.0 / sy));
        }
        let done = (f - fnew).abs() <= 1e-15 * f.abs().max(1e-300);
        x = xn;
        f = fnew;
        s = sn;
        g = gnew;
        if done {
            break;
        }
    }
    (x, s)
}

fn site_bracket(h: &CMatrix, shape: &RegisterShape, pos: usize, opts: &LipOptions) -> SiteResult {
    let dim = h.nrows();
    let mut best = centered(h, &CMatrix::zeros(dim, dim));
    let alt = centered(h, &avg(h, shape, pos));
    if alt.0 < best.0 {
        best = alt;
    }
    let p = proj(h, shape, pos);
    // ‖P_v H‖ ≤ 2 min_G ‖H − I⊗G‖, and sign(P_v H) projected is a dual point
    let mut lower = dual_value(h, &eigh(&p).map_real(|l| l.signum()), shape, pos);
    if opts.refine && best.0 > 0.0 {
        let mut g = best.1.clone();
        let mut mu = 0.05 * best.0;
        let floor = 1e-10 * best.0;
        for _ in 0..opts.levels {
            let (g_new, grad) = lbfgs_level(h, g, shape, pos, mu, opts.steps);
            g = g_new;
            let cand = centered(h, &g);
            if cand.0 < best.0 {
                best = cand;
            }
            lower = lower.max(dual_value(h, &grad, shape, pos));
            if best.0 - lower <= 1e-12 * best.0.max(1.0) || mu < floor {
                break;
            }
            mu *= 0.25;
        }
    }
    SiteResult { upper: best.0, witness: best.1, lower: lower.min(best.0) }
}

/// Bracket from closed-form candidates only.
pub fn lip_const(h: &HermitianOp) -> LipschitzBracket {
    lip_const_with(h, &LipOptions { refine: false, ..LipOptions::default() })
}

/// `lower = max(max_v ‖H − E_v H‖_∞, dual values)`; `upper = 2 max_v` of the
/// best candidate distance.
pub fn lip_const_with(h: &HermitianOp, opts: &LipOptions) -> LipschitzBracket {
    let shape = h.shape();
    let m = h.matrix();
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    let mut per_site = Vec::with_capacity(shape.num_sites());
    for pos in 0..shape.num_sites() {
        let p = proj(m, shape, pos);
        let e = eigh(&p);
        lower = lower.max(e.max().abs().max(e.min().abs()));
        let r = site_bracket(m, shape, pos, opts);
        lower = lower.max(2.0 * r.lower);
        upper = upper.max(2.0 * r.upper);
        per_site.push((shape.sites()[pos], HermitianOp::from_raw(shape.clone(), r.witness)));
    }
    LipschitzBracket { lower: lower.min(upper), upper, per_site_witnesses: per_site }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;
    use crate::linalg::random::random_hermitian;
    use crate::states::HypergraphHamiltonian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_site_z() {
        let s = RegisterShape::qubits(2).unwrap();
        let h = HermitianOp::embed(&paulis::z(0), &[0], &s).unwrap();
        let b = lip_const(&h);
        assert!(b.lower <= 2.0 + 1e-12 && b.upper >= 2.0 - 1e-12);
        let r = lip_const_with(&h, &LipOptions::default());
        assert!((r.upper - 2.0).abs() < 1e-9 && (r.lower - 2.0).abs() < 1e-9);
    }

    #[test]
    fn identity_is_zero() {
        let s = RegisterShape::qubits(3).unwrap();
        let b = lip_const_with(&HermitianOp::identity(s).scale(2.5), &LipOptions::default());
        assert!(b.upper < 1e-12 && b.lower < 1e-12);
    }

    #[test]
    fn field_sum() {
        let h = HypergraphHamiltonian::product_field(3, 1.0).unwrap();
        let b = lip_const_with(h.matrix(), &LipOptions::default());
        assert!((b.upper - 2.0).abs() < 1e-9 && (b.lower - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bracket_and_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = RegisterShape::qubits(3).unwrap();
        for _ in 0..4 {
            let h = random_hermitian(&s, &mut rng);
            let a = lip_const(&h);
            let b = lip_const_with(&h, &LipOptions::default());
            assert!(a.lower <= a.upper + 1e-12 && a.upper <= 2.0 * a.lower + 1e-12);
            assert!(b.lower >= a.lower - 1e-12 && b.upper <= a.upper + 1e-12);
            assert!(b.lower <= b.upper + 1e-12);
            assert!(b.upper - b.lower < 1e-5 * b.upper, "{} {}", b.lower, b.upper);
            for (v, w) in &b.per_site_witnesses {
                let t = w.partial_trace(&[*v]).unwrap().scale(0.5).extend_to(&s).unwrap();
                assert!(t.max_abs_diff(w) < 1e-10);
            }
        }
    }

    #[test]
    fn single_site_observable_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let local = random_hermitian(&RegisterShape::new(vec![1], 2).unwrap(), &mut rng);
        let s = RegisterShape::qubits(3).unwrap();
        let h = local.extend_to(&s).unwrap();
        let e = local.eigenvalues();
        let b = lip_const_with(&h, &LipOptions::default());
        assert!((b.upper - (e[0] - e[1])).abs() < 1e-6);
    }
}
