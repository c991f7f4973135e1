//! W1 norm certificates: ADMM for the primal decomposition, certified dual
//! witnesses from the ADMM multiplier and from closed-form candidates.

use serde::Serialize;

use super::{avg, herm_trace_norm, proj, spread, telescope, tr_prod, TRACE_TOL};
use crate::error::{Error, Result};
use crate::linalg::tensor::{embed_raw, ptrace_raw};
use crate::linalg::{c64, eigh, eigh_warm, CMatrix, DensityState, HermitianOp, RegisterShape};
use crate::recovery::ChannelRep;

/// Solver settings for [`w1_norm`].
#[derive(Clone, Debug, Serialize)]
pub struct W1Options {
    pub max_iter: usize,
    /// Stop when primal and dual ADMM residuals fall below this (on the
    /// input normalized to unit trace norm).
    pub residual_tol: f64,
    /// Stop when the certified gap falls below this (same normalization).
    pub gap_tol: f64,
    /// Certificates are evaluated every this many iterations.
    pub check_every: usize,
    /// Initial penalty parameter.
    pub rho: f64,
}

impl Default for W1Options {
    fn default() -> Self {
        W1Options { max_iter: 20_000, residual_tol: 1e-7, gap_tol: 1e-8, check_every: 10, rho: 1.0 }
    }
}

/// Primal decomposition and dual witness bracketing `‖X‖_{W1}`.
#[derive(Clone, Debug)]
pub struct W1Certificate {
    /// `½ Σ_v ‖X_v‖_1` of the returned decomposition.
    pub value_upper: f64,
    /// `Tr[X K]` for the returned witness.
    pub value_lower: f64,
    /// `(v, X_v)` with `Tr_v X_v = 0` and `Σ_v X_v = X`.
    pub decomposition: Vec<(usize, HermitianOp)>,
    /// Witness with certified `‖K‖_L ≤ 1`.
    pub witness: HermitianOp,
    /// Certified upper bound on `‖K‖_L` for the returned witness.
    pub witness_lipschitz: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl W1Certificate {
    fn zero(shape: &RegisterShape) -> Self {
        W1Certificate {
            value_upper: 0.0,
            value_lower: 0.0,
            decomposition: Vec::new(),
            witness: HermitianOp::zeros(shape.clone()),
            witness_lipschitz: 0.0,
            gap: 0.0,
            iterations: 0,
            converged: true,
        }
    }
}

/// `{value_upper, value_lower, gap, iterations, converged}` for reports.
#[derive(Clone, Debug, Serialize)]
pub struct W1Summary {
    pub value_upper: f64,
    pub value_lower: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&W1Certificate> for W1Summary {
    fn from(c: &W1Certificate) -> Self {
        W1Summary {
            value_upper: c.value_upper,
            value_lower: c.value_lower,
            gap: c.gap,
            iterations: c.iterations,
            converged: c.converged,
        }
    }
}

fn check_traceless(x: &HermitianOp) -> Result<()> {
    let fro = x.matrix().norm();
    let t = x.trace();
    if t.abs() > TRACE_TOL * fro.max(1.0) {
        return Err(Error::NotTraceless(t));
    }
    Ok(())
}

/// Certified upper bound on `‖K‖_L`: `max_v min_c (λ_max − λ_min)(K − c)`
/// over candidates `c = I_v ⊗ G` (always including `0` and `E_v K`).
pub(crate) fn lipschitz_upper(k: &CMatrix, shape: &RegisterShape, extra: Option<&[CMatrix]>) -> f64 {
    let mut worst = 0.0f64;
    for pos in 0..shape.num_sites() {
        let mut best = spread(k).min(spread(&proj(k, shape, pos)));
        if let Some(ex) = extra {
            best = best.min(spread(&(k - &ex[pos])));
        }
        worst = worst.max(best);
    }
    worst
}

fn sign_of(m: &CMatrix) -> CMatrix {
    eigh(m).map_real(|l| if l > 0.0 { 1.0 } else if l < 0.0 { -1.0 } else { 0.0 })
}

/// `½ Σ_v sign(X_v) ⊗ I`, attaining `½ Σ_v ‖Tr_{v^c} X‖_1`.
fn marginal_witness(x: &CMatrix, shape: &RegisterShape) -> CMatrix {
    let n = shape.num_sites();
    let mut k = CMatrix::zeros(x.nrows(), x.ncols());
    for pos in 0..n {
        let others: Vec<usize> = (0..n).filter(|&p| p != pos).collect();
        let m = ptrace_raw(x, shape, &others);
        k += embed_raw(&sign_of(&m), shape, &[pos]) * c64(0.5, 0.0);
    }
    k
}

fn soft_threshold(m: &CMatrix, guess: &CMatrix, tau: f64) -> (CMatrix, CMatrix) {
    let e = eigh_warm(m, guess);
    let z = e.map_real(|l| l.signum() * (l.abs() - tau).max(0.0));
    (z, e.vectors)
}

/// Solves `(Σ_v P_v) Λ = B` on traceless operators. The operator has
/// eigenvalues in `{1, …, n}`, so conjugate gradients terminates in `n`
/// steps up to rounding.
fn solve_t(b: &CMatrix, shape: &RegisterShape) -> CMatrix {
    let n = shape.num_sites();
    let apply = |m: &CMatrix| {
        let mut out = m * c64(n as f64, 0.0);
        for pos in 0..n {
            out -= avg(m, shape, pos);
        }
        out
    };
    let mut x = CMatrix::zeros(b.nrows(), b.ncols());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = tr_prod(&r, &r);
    let stop = 1e-30 * rr.max(f64::MIN_POSITIVE);
    for _ in 0..n + 4 {
        if rr <= stop {
            break;
        }
        let tp = apply(&p);
        let alpha = rr / tr_prod(&p, &tp);
        x += &p * c64(alpha, 0.0);
        r -= &tp * c64(alpha, 0.0);
        let next = tr_prod(&r, &r);
        p = &r + &p * c64(next / rr, 0.0);
        rr = next;
    }
    x
}

struct Primal {
    value: f64,
    blocks: Vec<CMatrix>,
}

/// Makes `{P_v M_v}` an exact decomposition of `x` by telescoping the
/// residual, and returns its objective.
fn repair(x: &CMatrix, blocks: &[CMatrix], shape: &RegisterShape) -> Primal {
    let mut fixed: Vec<CMatrix> = blocks.iter().enumerate().map(|(pos, m)| proj(m, shape, pos)).collect();
    let mut resid = x.clone();
    for b in &fixed {
        resid -= b;
    }
    for (f, r) in fixed.iter_mut().zip(telescope(&resid, shape)) {
        *f += r;
    }
    let value = 0.5 * fixed.iter().map(herm_trace_norm).sum::<f64>();
    Primal { value, blocks: fixed }
}

const RHO_MAX: f64 = 1e8;

struct Dual {
    value: f64,
    witness: CMatrix,
    lipschitz: f64,
}

fn certify(x: &CMatrix, k: CMatrix, shape: &RegisterShape, extra: Option<&[CMatrix]>) -> Option<Dual> {
    // scalars pair to zero with traceless X but amplify rounding
    let dim = k.nrows();
    let shift = c64(k.trace().re / dim as f64, 0.0);
    let k = &k - CMatrix::identity(dim, dim) * shift;
    let extra: Option<Vec<CMatrix>> = extra.map(|ex| ex.iter().map(|e| e - CMatrix::identity(dim, dim) * shift).collect());
    let extra = extra.as_deref();
    let lip = lipschitz_upper(&k, shape, extra);
    if lip <= 0.0 {
        return None;
    }
    let value = tr_prod(x, &k) / lip;
    Some(Dual { value, witness: k, lipschitz: lip })
}

fn better(cur: Option<Dual>, cand: Option<Dual>) -> Option<Dual> {
    match (cur, cand) {
        (Some(a), Some(b)) => Some(if b.value > a.value { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Brackets `‖X‖_{W1}` for traceless `X`.
pub fn w1_norm(x: &HermitianOp, opts: &W1Options) -> Result<W1Certificate> {
    check_traceless(x)?;
    let shape = x.shape().clone();
    let n = shape.num_sites();
    let scale = x.trace_norm();
    if scale == 0.0 {
        return Ok(W1Certificate::zero(&shape));
    }
    let xs = x.matrix() * c64(1.0 / scale, 0.0);
    let dim = xs.nrows();

    let mut dual = certify(&xs, marginal_witness(&xs, &shape), &shape, None);
    dual = better(dual, certify(&xs, sign_of(&xs) * c64(0.5, 0.0), &shape, None));

    let init = telescope(&xs, &shape);
    let mut best = repair(&xs, &init, &shape);

    let mut y = best.blocks.clone();
    let mut z = y.clone();
    let mut u = vec![CMatrix::zeros(dim, dim); n];
    let mut bases = vec![CMatrix::identity(dim, dim); n];
    let mut rho = opts.rho;
    let mut iterations = 0;
    let mut converged = false;
    let check_every = opts.check_every.max(1);

    while iterations < opts.max_iter {
        if best.value - dual.as_ref().map_or(0.0, |d| d.value) <= opts.gap_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let tau = 0.5 / rho;
        for v in 0..n {
            let (zv, basis) = soft_threshold(&(&y[v] - &u[v]), &bases[v], tau);
            z[v] = zv;
            bases[v] = basis;
        }
        let w: Vec<CMatrix> = (0..n).map(|v| &z[v] + &u[v]).collect();
        let mut b = xs.clone();
        for (pos, wv) in w.iter().enumerate() {
            b -= proj(wv, &shape, pos);
        }
        let lambda = solve_t(&b, &shape);
        let mut r2 = 0.0;
        let mut s2 = 0.0;
        for v in 0..n {
            let yv = proj(&(&w[v] + &lambda), &shape, v);
            s2 += (&yv - &y[v]).norm_squared();
            r2 += (&z[v] - &yv).norm_squared();
            u[v] = &w[v] - &yv;
            y[v] = yv;
        }
        let (r, s) = (r2.sqrt(), rho * s2.sqrt());

        if iterations % check_every == 0 || iterations == opts.max_iter {
            for cand in [repair(&xs, &y, &shape), repair(&xs, &z, &shape)] {
                if cand.value < best.value {
                    best = cand;
                }
            }
            let mut k = &lambda * c64(rho, 0.0);
            let mut extra: Vec<CMatrix> =
                (0..n).map(|v| avg(&(&w[v] + &lambda), &shape, v) * c64(rho, 0.0)).collect();
            if tr_prod(&xs, &k) < 0.0 {
                k = -k;
                for e in extra.iter_mut() {
                    *e = -e.clone();
                }
            }
            dual = better(dual, certify(&xs, k, &shape, Some(&extra)));
            if r <= opts.residual_tol && s <= opts.residual_tol {
                converged = true;
                break;
            }
            // residual balancing
            if r > 10.0 * s && rho < RHO_MAX {
                rho *= 2.0;
                for uv in u.iter_mut() {
                    *uv *= c64(0.5, 0.0);
                }
            } else if s > 10.0 * r && rho > 1.0 / RHO_MAX {
                rho *= 0.5;
                for uv in u.iter_mut() {
                    *uv *= c64(2.0, 0.0);
                }
            }
        }
    }
    if !converged && best.value - dual.as_ref().map_or(0.0, |d| d.value) <= opts.gap_tol {
        converged = true;
    }

    let sc = c64(scale, 0.0);
    let decomposition: Vec<(usize, HermitianOp)> = best
        .blocks
        .into_iter()
        .enumerate()
        .map(|(pos, m)| (shape.sites()[pos], HermitianOp::from_raw(shape.clone(), m * sc)))
        .collect();
    let value_upper = 0.5 * decomposition.iter().map(|(_, b)| b.trace_norm()).sum::<f64>();
    let (witness, witness_lipschitz, value_lower) = match dual {
        Some(d) if d.value > 0.0 => {
            let k = d.witness * c64(1.0 / d.lipschitz, 0.0);
            let lip = lipschitz_upper(&k, &shape, None).min(1.0);
            let k = HermitianOp::from_raw(shape.clone(), k);
            let value = k.inner(x);
            (k, lip, value)
        }
        _ => (HermitianOp::zeros(shape.clone()), 0.0, 0.0),
    };
    Ok(W1Certificate {
        value_upper,
        value_lower,
        gap: value_upper - value_lower,
        decomposition,
        witness,
        witness_lipschitz,
        iterations,
        converged,
    })
}

/// Upper bound and primal decomposition of `‖X‖_{W1}` with default settings.
pub fn w1_primal(x: &HermitianOp) -> Result<W1Certificate> {
    w1_norm(x, &W1Options::default())
}

/// Lower bound and certified witness of `‖X‖_{W1}` with default settings.
pub fn w1_dual(x: &HermitianOp) -> Result<W1Certificate> {
    w1_norm(x, &W1Options::default())
}

/// Certificate for `‖ρ − σ‖_{W1}`. Fails if the single-site lower bound
/// `½ Σ_v ‖ρ_v − σ_v‖_1` exceeds the primal value.
pub fn w1_distance(rho: &DensityState, sigma: &DensityState, opts: &W1Options) -> Result<W1Certificate> {
    if rho.shape() != sigma.shape() {
        return Err(Error::InvalidRegister("states live on different registers".into()));
    }
    let x = rho.op() - sigma.op();
    let cert = w1_norm(&x, opts)?;
    let marg = marginal_bound(&x)?;
    if marg > cert.value_upper + 1e-6 {
        return Err(Error::Certificate(format!(
            "single-site bound {marg} exceeds primal value {}",
            cert.value_upper
        )));
    }
    Ok(cert)
}

/// `½ Σ_v ‖Tr_{v^c} X‖_1`.
pub fn marginal_bound(x: &HermitianOp) -> Result<f64> {
    let mut acc = 0.0;
    for &s in x.shape().sites() {
        acc += 0.5 * x.reduce_to(&[s])?.trace_norm();
    }
    Ok(acc)
}

/// Both sides of `‖Φ(X)‖_{W1} ≤ 2 max_v |A_v| ‖X‖_{W1}` with light cones
/// `A_v` found by probing. Returns `(lhs, rhs, max_v |A_v|)`.
pub fn light_cone_expansion_check(
    phi: &ChannelRep,
    x: &HermitianOp,
    opts: &W1Options,
) -> Result<(f64, f64, usize)> {
    if phi.in_shape() != x.shape() {
        return Err(Error::InvalidRegister("input register of the channel differs from X".into()));
    }
    let mut cone = 0;
    for &v in phi.in_shape().sites() {
        cone = cone.max(phi.light_cone(v, 1e-10)?.len());
    }
    let out = phi.apply(x)?;
    let lhs = w1_norm(&out, opts)?.value_upper;
    let rhs = 2.0 * cone as f64 * w1_norm(x, opts)?.value_lower;
    Ok((lhs, rhs, cone))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_traceless, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_invariants(x: &HermitianOp, c: &W1Certificate) {
        let mut sum = HermitianOp::zeros(x.shape().clone());
        for (v, b) in &c.decomposition {
            sum = &sum + b;
            assert!(b.partial_trace(&[*v]).unwrap().max_abs_entry() < 1e-9);
        }
        assert!(sum.max_abs_diff(x) < 1e-8);
        let half: f64 = 0.5 * c.decomposition.iter().map(|(_, b)| b.trace_norm()).sum::<f64>();
        assert!((half - c.value_upper).abs() < 1e-8);
        assert!(c.gap >= -1e-8);
        assert!(c.witness_lipschitz <= 1.0 + 1e-12);
        assert!((c.witness.inner(x) - c.value_lower).abs() < 1e-10);
    }

    #[test]
    fn zero_input() {
        let x = HermitianOp::zeros(RegisterShape::qubits(2).unwrap());
        let c = w1_primal(&x).unwrap();
        assert_eq!(c.value_upper, 0.0);
        assert!(c.decomposition.is_empty());
    }

    #[test]
    fn rejects_trace() {
        let x = HermitianOp::identity(RegisterShape::qubits(1).unwrap());
        assert!(matches!(w1_primal(&x), Err(Error::NotTraceless(_))));
    }

    #[test]
    fn single_qubit_is_trace_distance() {
        let s = RegisterShape::qubits(1).unwrap();
        let rho = DensityState::pure(s.clone(), &[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let c = w1_distance(&rho, &DensityState::maximally_mixed(s), &W1Options::default()).unwrap();
        assert!((c.value_upper - 0.5).abs() < 1e-9 && (c.value_lower - 0.5).abs() < 1e-9);
    }

    #[test]
    fn single_site_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = RegisterShape::qubits(3).unwrap();
        let a = random_density(&shape, 8, &mut rng);
        let b = random_density(&RegisterShape::new(vec![1], 2).unwrap(), 2, &mut rng);
        let rest = a.partial_trace(&[1]).unwrap();
        let sigma = DensityState::new(rest.kron(&b).unwrap().op().permuted(&shape).unwrap()).unwrap();
        let rho_b = a.marginal(&[1]).unwrap();
        let rho = DensityState::new(rest.kron(&rho_b).unwrap().op().permuted(&shape).unwrap()).unwrap();
        let x = rho.op() - sigma.op();
        let c = w1_primal(&x).unwrap();
        check_invariants(&x, &c);
        let half = 0.5 * x.trace_norm();
        assert!((c.value_upper - half).abs() < 1e-6, "{} vs {half}", c.value_upper);
        assert!((c.value_lower - half).abs() < 1e-6);
    }

    #[test]
    fn random_instances_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            let shape = RegisterShape::qubits(n).unwrap();
            for _ in 0..3 {
                let x = random_traceless(&shape, &mut rng);
                let c = w1_primal(&x).unwrap();
                check_invariants(&x, &c);
                assert!(c.value_lower <= c.value_upper + 1e-8);
                assert!(0.5 * x.trace_norm() <= c.value_upper + 1e-9);
                assert!(c.gap < 1e-4, "n={n} gap={}", c.gap);
            }
        }
    }

    #[test]
    fn product_pairs_are_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let one = |s: usize, rng: &mut ChaCha8Rng| random_density(&RegisterShape::new(vec![s], 2).unwrap(), 2, rng);
        let rho = DensityState::product(&[one(0, &mut rng), one(1, &mut rng)]).unwrap();
        let sigma = DensityState::product(&[one(0, &mut rng), one(1, &mut rng)]).unwrap();
        let c = w1_distance(&rho, &sigma, &W1Options::default()).unwrap();
        let want = marginal_bound(&(rho.op() - sigma.op())).unwrap();
        assert!((c.value_upper - want).abs() < 1e-5 && (c.value_lower - want).abs() < 1e-9);
    }

    #[test]
    fn homogeneous_and_subadditive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let shape = RegisterShape::qubits(2).unwrap();
        let x = random_traceless(&shape, &mut rng);
        let y = random_traceless(&shape, &mut rng);
        let cx = w1_primal(&x).unwrap();
        let c3 = w1_primal(&x.scale(-3.0)).unwrap();
        assert!((c3.value_upper - 3.0 * cx.value_upper).abs() < 1e-5);
        let cy = w1_primal(&y).unwrap();
        let cs = w1_primal(&(&x + &y)).unwrap();
        assert!(cs.value_lower <= cx.value_upper + cy.value_upper + 1e-8);
    }

    #[test]
    fn expansion_under_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = RegisterShape::qubits(2).unwrap();
        let x = random_traceless(&shape, &mut rng);
        let opts = W1Options::default();
        let id = ChannelRep::identity(shape.clone());
        let (l, r, cone) = light_cone_expansion_check(&id, &x, &opts).unwrap();
        assert_eq!(cone, 1);
        assert!(l <= r + 1e-6);
        let w = DensityState::maximally_mixed(shape.clone());
        let rep = ChannelRep::replacer(shape.clone(), &w);
        assert!(light_cone_expansion_check(&rep, &x, &opts).unwrap().0 < 1e-12);
        let u1 = random_unitary(2, &mut rng);
        let u = u1.kronecker(&CMatrix::identity(2, 2));
        let ch = ChannelRep::unitary(shape.clone(), u).unwrap();
        let (l, r, cone) = light_cone_expansion_check(&ch, &x, &opts).unwrap();
        assert_eq!(cone, 1);
        assert!(l <= r + 1e-6);
    }

    #[test]
    fn scalar_shift_does_not_change_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let shape = RegisterShape::qubits(2).unwrap();
        let a = random_density(&shape, 4, &mut rng);
        let b = random_density(&shape, 4, &mut rng);
        let x = (a.op() - b.op()).matrix().clone();
        let k = sign_of(&x);
        let base = certify(&x, k.clone(), &shape, None).unwrap();
        let shifted = certify(&x, k + CMatrix::identity(4, 4) * c64(1e6, 0.0), &shape, None).unwrap();
        assert!((base.value - shifted.value).abs() < 1e-9);
    }
}
