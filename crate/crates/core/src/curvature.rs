//! Diamond norms, the W1 contraction of the averaged recovery channel, the
//! critical inverse temperature and the curvature TCI constant.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::random::{random_density, random_pure_vector, stream_rng};
use crate::linalg::{c64, eigh, eigh_warm, CMatrix, C64, DensityState, HermitianOp, RegisterShape};
use crate::recovery::{identity_factor_deviation, psi_avg, psi_v, restricted_map, ChannelRep, LinearMap};
use crate::states::GibbsState;
use crate::w1::{w1_norm, W1Options};

/// Relative duality gap at which the diamond-norm solver stops.
pub const DIAMOND_GAP: f64 = 1e-7;
/// Absolute gap above which a diamond-norm bracket is flagged as loose.
pub const DIAMOND_LOOSE: f64 = 1e-5;
const DIAMOND_ITERS: usize = 6000;
const DIAMOND_CHECK: usize = 10;

/// Certified bracket on `‖Δ‖_⋄`.
#[derive(Clone, Debug, Serialize)]
pub struct DiamondNorm {
    pub lower: f64,
    pub upper: f64,
    /// Gap above [`DIAMOND_LOOSE`] when the iteration budget ran out.
    pub loose: bool,
    pub iterations: usize,
}

fn tr_out(j: &CMatrix, din: usize, dout: usize) -> CMatrix {
    CMatrix::from_fn(din, din, |i, k| (0..dout).map(|a| j[(i * dout + a, k * dout + a)]).sum())
}

fn kron_id(b: &CMatrix, dout: usize) -> CMatrix {
    b.kronecker(&CMatrix::identity(dout, dout))
}

fn herm(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * c64(0.5, 0.0)
}

/// PSD projection, reusing the previous eigenbasis.
fn psd_part(m: &CMatrix, basis: &mut CMatrix) -> CMatrix {
    let e = eigh_warm(m, basis);
    let out = e.map_real(|l| l.max(0.0));
    *basis = e.vectors;
    out
}

/// `2 Tr[(√ρ⊗I) J (√ρ⊗I)]_+` for a density `ρ`: the value of the
/// purified input, a lower bound.
fn primal_value(j: &CMatrix, rho: &CMatrix, dout: usize) -> f64 {
    let b = kron_id(&eigh(rho).map_real(|l| l.max(0.0).sqrt()), dout);
    let m = &b * j * &b;
    2.0 * eigh(&m).values.iter().map(|l| l.max(0.0)).sum::<f64>()
}

/// Any Hermitian `Z` shifted by `cI` satisfies `Z ≥ 0`, `Z ≥ J`, so
/// `2‖Tr_out(Z + cI)‖_∞` is an upper bound.
fn dual_value(j: &CMatrix, z: &CMatrix, din: usize, dout: usize) -> f64 {
    let shift = 0.0f64.max(-eigh(z).min()).max(-eigh(&(z - j)).min());
    2.0 * (eigh(&tr_out(z, din, dout)).max() + dout as f64 * shift)
}

/// Bracket on the diamond norm of a trace-annihilating,
/// Hermiticity-preserving map (a difference of channels).
///
/// Solves `max 2Tr[JW]` over `0 ≤ W ≤ ρ⊗I`, `Tr ρ = 1` by ADMM between
/// the cone constraints and the affine coupling `W + S = ρ⊗I`. The lower
/// value is re-evaluated exactly at the normalized `ρ` iterate and the
/// upper value at repaired dual candidates built from the multipliers.
pub fn diamond_norm(map: &LinearMap) -> Result<DiamondNorm> {
    let j = map.choi()?.clone();
    let din = map.in_shape().dim();
    let dout = map.out_shape().dim();
    let scale = j.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(DiamondNorm { lower: 0.0, upper: 0.0, loose: false, iterations: 0 });
    }
    let herm_dev = (&j - j.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm_dev > 1e-9 * scale.max(1.0) {
        return Err(Error::InvalidArgument("map does not preserve Hermiticity".into()));
    }
    let tdev = tr_out(&j, din, dout).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if tdev > 1e-7 * scale.max(1.0) {
        return Err(Error::InvalidArgument(format!("map is not trace-annihilating (deviation {tdev:e})")));
    }
    // work with unit trace norm so the penalty scale is problem independent
    let norm1: f64 = eigh(&herm(j.clone())).values.iter().map(|l| l.abs()).sum();
    let j = herm(j) * c64(2.0 / norm1, 0.0);
    let big = din * dout;
    let (fin, fout) = (din as f64, dout as f64);
    let id_in = CMatrix::identity(din, din);
    let id_big = CMatrix::identity(big, big);

    let mut yw = CMatrix::zeros(big, big);
    let mut yr = &id_in * c64(1.0 / fin, 0.0);
    let mut ys = kron_id(&yr, dout);
    let mut uw = CMatrix::zeros(big, big);
    let mut us = CMatrix::zeros(big, big);
    let mut ur = CMatrix::zeros(din, din);
    let (mut bw, mut bs, mut br) = (id_big.clone(), id_big.clone(), id_in.clone());
    let mut sigma = 1.0f64;
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut it = 0;
    while it < DIAMOND_ITERS {
        it += 1;
        let xw = psd_part(&(&yw - &uw), &mut bw);
        let xs = psd_part(&(&ys - &us), &mut bs);
        let xr = psd_part(&(&yr - &ur), &mut br);
        // affine step: least squares onto W + S = r⊗I, Tr r = 1
        let a = &xw + &uw + &j * c64(1.0 / sigma, 0.0);
        let b = &xs + &us;
        let r = &xr + &ur;
        let ab = &a + &b;
        let tr_r = r.trace().re;
        let a0 = (ab.trace().re - fout * tr_r) / (2.0 + fout);
        let a1 = fout * fin / (2.0 + fout);
        let nu = (1.0 - tr_r - a0) / (a1 - fin);
        let tl = (tr_out(&ab, din, dout) - &r * c64(fout, 0.0) + &id_in * c64(nu * fout, 0.0)) * c64(1.0 / (2.0 + fout), 0.0);
        let lam = (&ab - kron_id(&r, dout) + &id_big * c64(nu, 0.0) - kron_id(&tl, dout)) * c64(0.5, 0.0);
        let nw = &a - &lam;
        let ns = &b - &lam;
        let nr = &r + &tl - &id_in * c64(nu, 0.0);
        let dual_res = sigma * ((&nw - &yw).norm_squared() + (&ns - &ys).norm_squared() + (&nr - &yr).norm_squared()).sqrt();
        yw = nw;
        ys = ns;
        yr = nr;
        let (dw, ds, dr) = (&xw - &yw, &xs - &ys, &xr - &yr);
        let primal_res = (dw.norm_squared() + ds.norm_squared() + dr.norm_squared()).sqrt();
        uw += dw;
        us += ds;
        ur += dr;
        if it % DIAMOND_CHECK != 0 {
            continue;
        }
        let tr = xr.trace().re;
        if tr > 0.0 {
            lower = lower.max(primal_value(&j, &(&xr * c64(1.0 / tr, 0.0)), dout));
        }
        for z in [&lam * c64(sigma, 0.0), &lam * c64(-sigma, 0.0), &us * c64(sigma, 0.0), &us * c64(-sigma, 0.0)] {
            upper = upper.min(dual_value(&j, &z, din, dout));
        }
        if upper - lower <= DIAMOND_GAP * upper.max(1.0) {
            break;
        }
        if primal_res > 10.0 * dual_res {
            sigma *= 2.0;
            for u in [&mut uw, &mut us] {
                *u *= c64(0.5, 0.0);
            }
            ur *= c64(0.5, 0.0);
        } else if dual_res > 10.0 * primal_res {
            sigma *= 0.5;
            for u in [&mut uw, &mut us] {
                *u *= c64(2.0, 0.0);
            }
            ur *= c64(2.0, 0.0);
        }
    }
    if upper.is_infinite() {
        upper = dual_value(&j, &eigh(&j).map_real(|l| l.max(0.0)), din, dout);
    }
    let s = norm1 / 2.0;
    let (lower, upper) = (lower * s, upper.max(lower) * s);
    Ok(DiamondNorm { lower, upper, loose: upper - lower > DIAMOND_LOOSE, iterations: it })
}

/// `X ↦ σ ⊗ Tr_S X` as a linear map on `shape`, replacing the sites of `σ`.
fn local_replacer_map(shape: &RegisterShape, sigma: &DensityState) -> Result<LinearMap> {
    Ok(ChannelRep::local_replacer(shape.clone(), sigma)?.map().clone())
}

/// Bracket on `‖Ψ‖_{W1→W1}` for the averaged recovery channel.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionEstimate {
    pub lower: f64,
    pub upper: f64,
    #[serde(skip)]
    pub witness: Option<HermitianOp>,
    /// `n (1 − upper)`.
    pub kappa_implied: f64,
    /// Upper bounds on `‖Ψ_w − ω_w ⊗ Tr_w‖_⋄` by site.
    pub diamond: Vec<(usize, f64)>,
    /// Largest deviation of `Ψ_w` from acting only on `N_w`.
    pub locality_error: f64,
    pub n: usize,
    pub degree: usize,
}

/// Settings for the witness search in [`contraction_coefficient`].
#[derive(Clone, Debug, Serialize)]
pub struct ContractionOptions {
    pub tol: f64,
    pub seed: u64,
    /// Random starting points per site.
    pub restarts: usize,
    /// Coordinate-ascent rounds per start.
    pub sweeps: usize,
    /// Run restarts on the rayon pool.
    pub parallel: bool,
    pub w1: W1Options,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        ContractionOptions {
            tol: 1e-8,
            seed: 0,
            restarts: 8,
            sweeps: 10,
            parallel: false,
            w1: W1Options { gap_tol: 1e-6, ..W1Options::default() },
        }
    }
}

/// `(|ψ⟩⟨ψ| − |φ⟩⟨φ|)_v ⊗ σ` with `ψ ⊥ φ`, so `‖Δ_v‖_1 = 2`.
fn pure_pair_difference(shape: &RegisterShape, v: usize, psi: &[C64], phi: &[C64], env: &DensityState) -> Result<HermitianOp> {
    let d = shape.local_dim();
    let site = RegisterShape::new(vec![v], d)?;
    let m = CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() - phi[i] * phi[j].conj());
    let local = HermitianOp::new(site, m)?;
    local.kron(env.op())?.permuted(shape)
}

fn orthonormal_pair<R: Rng>(d: usize, rng: &mut R) -> (Vec<C64>, Vec<C64>) {
    let a = random_pure_vector(d, rng);
    loop {
        if let Some(b) = orthogonalize(&a, &random_pure_vector(d, rng)) {
            return (a, b);
        }
    }
}

/// Upper bound `max_v [1 − 1/n + (2N−1)/n Σ_{w∈N_v∖v} ‖Ψ_w − ω_w⊗Tr_w‖_⋄]`
/// and a witness-based lower bound on `‖Ψ‖_{W1→W1}`.
pub fn contraction_coefficient(omega: &GibbsState, opts: &ContractionOptions) -> Result<ContractionEstimate> {
    let h = &omega.hamiltonian;
    if !omega.commuting {
        return Err(Error::NonCommuting);
    }
    let shape = omega.state.shape().clone();
    let n = shape.num_sites();
    let big_n = h.degree();
    let mut diamond = Vec::with_capacity(n);
    let mut locality_error = 0.0f64;
    for &w in shape.sites() {
        let nb = h.neighborhood(w)?;
        let outside: Vec<usize> = shape.sites().iter().copied().filter(|s| !nb.contains(s)).collect();
        let psi = psi_v(omega, w, opts.tol)?;
        if !outside.is_empty() {
            locality_error = locality_error.max(identity_factor_deviation(psi.map(), &outside)?);
        }
        let local = restricted_map(psi.map(), &outside)?;
        let local_shape = local.in_shape().clone();
        let omega_w = omega.state.marginal(&[w])?;
        let rep = local_replacer_map(&local_shape, &omega_w)?;
        diamond.push((w, diamond_norm(&local.difference(&rep)?)?.upper));
    }
    let nf = n as f64;
    let mut upper = 0.0f64;
    for &v in shape.sites() {
        let nb = h.neighborhood(v)?;
        let sum: f64 = diamond.iter().filter(|(w, _)| *w != v && nb.contains(w)).map(|(_, x)| x).sum();
        upper = upper.max(1.0 - 1.0 / nf + (2.0 * big_n as f64 - 1.0) / nf * sum);
    }

    let (lower, witness) = contraction_lower(omega, opts)?;
    Ok(ContractionEstimate {
        lower,
        upper,
        witness,
        kappa_implied: nf * (1.0 - upper),
        diamond,
        locality_error,
        n,
        degree: big_n,
    })
}

/// Best certified `‖Ψ(Δ_v)‖_{W1}` over seeded restarts, each polished by
/// coordinate ascent alternating the pure pair on `v` and the environment.
fn contraction_lower(omega: &GibbsState, opts: &ContractionOptions) -> Result<(f64, Option<HermitianOp>)> {
    let shape = omega.state.shape().clone();
    if shape.num_sites() == 1 {
        return Ok((0.0, None));
    }
    let psi = psi_avg(omega, opts.tol)?;
    let jobs: Vec<(usize, usize)> =
        (0..shape.num_sites()).flat_map(|p| (0..opts.restarts).map(move |r| (p, r))).collect();
    let run = |&(pos, r): &(usize, usize)| -> Result<(f64, HermitianOp)> {
        let mut rng = stream_rng(opts.seed, (pos * opts.restarts + r) as u64);
        ascend(&psi, &shape, shape.sites()[pos], opts, &mut rng)
    };
    let results: Vec<Result<(f64, HermitianOp)>> =
        if opts.parallel { jobs.par_iter().map(run).collect() } else { jobs.iter().map(run).collect() };
    let mut best = 0.0f64;
    let mut witness = None;
    // first index wins ties, independent of scheduling
    for res in results {
        let (val, delta) = res?;
        if val > best {
            best = val;
            witness = Some(delta);
        }
    }
    Ok((best, witness))
}

fn normalized(v: Vec<C64>) -> Option<Vec<C64>> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (n > 1e-8).then(|| v.into_iter().map(|z| z / n).collect())
}

/// `b` minus its component along unit `a`, normalized.
fn orthogonalize(a: &[C64], b: &[C64]) -> Option<Vec<C64>> {
    let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    normalized(b.iter().zip(a).map(|(y, x)| y - ov * x).collect())
}

fn ascend(psi: &ChannelRep, shape: &RegisterShape, v: usize, opts: &ContractionOptions, rng: &mut ChaCha8Rng) -> Result<(f64, HermitianOp)> {
    let d = shape.local_dim();
    let rest: Vec<usize> = shape.sites().iter().copied().filter(|&s| s != v).collect();
    let env_shape = RegisterShape::new(rest, d)?;
    let eval = |a: &[C64], b: &[C64], env: &DensityState| -> Result<(f64, HermitianOp)> {
        let delta = pure_pair_difference(shape, v, a, b, env)?;
        Ok((w1_norm(&psi.apply(&delta)?, &opts.w1)?.value_lower, delta))
    };
    let (mut a, mut b) = orthonormal_pair(d, rng);
    let mut env = random_density(&env_shape, 1, rng);
    let (mut cur, mut cur_delta) = eval(&a, &b, &env)?;
    for sweep in 0..opts.sweeps {
        let step = 0.5 / (sweep + 1) as f64;
        let (pa, pb) = orthonormal_pair(d, rng);
        let mix = |x: &[C64], y: &[C64]| normalized(x.iter().zip(y).map(|(p, q)| p * (1.0 - step) + q * step).collect());
        if let Some((na, nb)) = mix(&a, &pa).and_then(|na| mix(&b, &pb).and_then(|nb| orthogonalize(&na, &nb)).map(|nb| (na, nb))) {
            let (val, dl) = eval(&na, &nb, &env)?;
            if val > cur {
                (cur, cur_delta, a, b) = (val, dl, na, nb);
            }
        }
        let ne = env.mix(&random_density(&env_shape, 1, rng), 1.0 - step)?;
        let (val, dl) = eval(&a, &b, &ne)?;
        if val > cur {
            (cur, cur_delta, env) = (val, dl, ne);
        }
    }
    Ok((cur, cur_delta))
}

/// Principal branch of the Lambert W function on `[0, ∞)` by Newton's
/// method, to `|w e^w − x| ≤ 1e−14 max(1, x)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("lambert_w needs a finite x ≥ 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < 1.0 { x / (1.0 + x) } else { x.ln() - x.ln().ln().max(0.0) };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= 1e-14 * x.max(1.0) {
            break;
        }
        w -= f / (ew * (w + 1.0));
    }
    Ok(w)
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaCritical {
    pub beta_c: f64,
    pub degree: usize,
    pub max_term_norm: f64,
    pub local_dim: usize,
}

/// `β_c = W(1/(16 d³)) / (5 N max_A ‖h_A‖_∞)`.
pub fn beta_critical(degree: usize, local_dim: usize, max_term_norm: f64) -> Result<BetaCritical> {
    if degree <= 1 {
        return Err(Error::ConditionNotMet(format!("β_c needs N > 1, got N = {degree}")));
    }
    if !(max_term_norm > 0.0) {
        return Err(Error::InvalidArgument("max term norm must be positive".into()));
    }
    let d3 = (local_dim as f64).powi(3);
    let w = lambert_w(1.0 / (16.0 * d3))?;
    Ok(BetaCritical {
        beta_c: w / (5.0 * degree as f64 * max_term_norm),
        degree,
        max_term_norm,
        local_dim,
    })
}

/// `2 n N² / (1 − e^{−κ})²`.
pub fn tci_curvature_bound(n: usize, degree: usize, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::ConditionNotMet(format!("curvature bound needs κ > 0, got {kappa}")));
    }
    let nn = (degree * degree) as f64;
    Ok(2.0 * n as f64 * nn / (1.0 - (-kappa).exp()).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_unitary;
    use rand::SeedableRng;
    use crate::states::{gibbs, HypergraphHamiltonian};

    fn random_channel(shape: &RegisterShape, rng: &mut ChaCha8Rng) -> ChannelRep {
        let u = random_unitary(shape.dim(), rng);
        let un = ChannelRep::unitary(shape.clone(), u).unwrap();
        let s = random_density(shape, 2, rng);
        let rep = ChannelRep::replacer(shape.clone(), &s);
        ChannelRep::mixture(&[(0.7, &un), (0.3, &rep)]).unwrap()
    }

    /// Lower bound from random pure inputs on the doubled space.
    fn sampled_lower(map: &LinearMap, rng: &mut ChaCha8Rng, trials: usize) -> f64 {
        let din = map.in_shape().dim();
        let dout = map.out_shape().dim();
        let j = map.choi().unwrap();
        let mut best = 0.0f64;
        for _ in 0..trials {
            let a = crate::linalg::random::ginibre(din, din, rng);
            let a = &a * c64(1.0 / a.norm(), 0.0);
            let big = a.kronecker(&CMatrix::identity(dout, dout));
            let m = &big * j * big.adjoint();
            let v: f64 = eigh(&m).values.iter().map(|x| x.abs()).sum();
            best = best.max(v);
        }
        best
    }

    #[test]
    fn trivial_maps() {
        let s = RegisterShape::qubits(1).unwrap();
        let id = ChannelRep::identity(s.clone());
        let z = diamond_norm(&id.map().difference(id.map()).unwrap()).unwrap();
        assert_eq!((z.lower, z.upper), (0.0, 0.0));
    }

    #[test]
    fn replacer_difference_is_trace_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = RegisterShape::qubits(2).unwrap();
        let w = RegisterShape::new(vec![1], 2).unwrap();
        let a = random_density(&w, 2, &mut rng);
        let b = random_density(&w, 2, &mut rng);
        let ra = ChannelRep::local_replacer(s.clone(), &a).unwrap();
        let rb = ChannelRep::local_replacer(s.clone(), &b).unwrap();
        let dn = diamond_norm(&ra.map().difference(rb.map()).unwrap()).unwrap();
        let want = (a.op() - b.op()).trace_norm();
        assert!((dn.upper - want).abs() < 1e-5 && (dn.lower - want).abs() < 1e-5);
    }

    #[test]
    fn identity_minus_depolarizing() {
        // ‖id − D_p‖_⋄ = 2p(d²−1)/d² for the depolarizing channel on a qubit
        let s = RegisterShape::qubits(1).unwrap();
        let id = ChannelRep::identity(s.clone());
        let rep = ChannelRep::replacer(s.clone(), &DensityState::maximally_mixed(s.clone()));
        let p = 0.3;
        let dep = ChannelRep::mixture(&[(1.0 - p, &id), (p, &rep)]).unwrap();
        let dn = diamond_norm(&id.map().difference(dep.map()).unwrap()).unwrap();
        assert!((dn.upper - 1.5 * p).abs() < 1e-6 && (dn.lower - 1.5 * p).abs() < 1e-6, "{dn:?}");
    }

    #[test]
    fn random_differences_are_bracketed() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=2 {
            let s = RegisterShape::qubits(n).unwrap();
            for _ in 0..4 {
                let a = random_channel(&s, &mut rng);
                let b = random_channel(&s, &mut rng);
                let diff = a.map().difference(b.map()).unwrap();
                let dn = diamond_norm(&diff).unwrap();
                assert!(dn.lower <= dn.upper + 1e-12);
                assert!(!dn.loose, "{dn:?}");
                assert!(sampled_lower(&diff, &mut rng, 200) <= dn.upper + 1e-9);
            }
        }
    }

    #[test]
    fn lambert() {
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert!((lambert_w(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        for &x in &[1e-6, 0.1, 3.0, 1e4] {
            let w = lambert_w(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-14 * x.max(1.0));
        }
        assert!(lambert_w(-1.0).is_err());
    }

    #[test]
    fn beta_c_value() {
        // independent bisection on w e^w = 1/128
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m * m.exp() < 1.0 / 128.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let b = beta_critical(2, 2, 1.0).unwrap();
        assert!((b.beta_c - lo / 10.0).abs() < 1e-15);
        assert!((b.beta_c - 7.7515e-4).abs() < 1e-6);
        assert!(beta_critical(1, 2, 1.0).is_err());
    }

    #[test]
    fn curvature_bound_formula() {
        let v = tci_curvature_bound(4, 2, 0.5).unwrap();
        assert!((v - 32.0 / (1.0 - (-0.5f64).exp()).powi(2)).abs() < 1e-12);
        assert!((v - 206.69).abs() < 0.01);
        assert!((tci_curvature_bound(4, 2, 60.0).unwrap() - 32.0).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let b = tci_curvature_bound(3, 2, 0.1 * k as f64).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        assert!(tci_curvature_bound(3, 2, 0.0).is_err());
    }

    #[test]
    fn contraction_infinite_temperature_and_single_site() {
        let h = HypergraphHamiltonian::ising_ring(3, 1.0).unwrap();
        let g = gibbs(&h, 0.0).unwrap();
        let opts = ContractionOptions { restarts: 1, sweeps: 1, ..ContractionOptions::default() };
        let c = contraction_coefficient(&g, &opts).unwrap();
        assert!((c.upper - (1.0 - 1.0 / 3.0)).abs() < 1e-6, "{c:?}");
        assert!(c.lower <= c.upper + 1e-6);
        let h1 = HypergraphHamiltonian::product_field(1, 1.0).unwrap();
        let c1 = contraction_coefficient(&gibbs(&h1, 0.5).unwrap(), &opts).unwrap();
        assert!(c1.upper.abs() < 1e-12 && c1.lower == 0.0);
    }

    #[test]
    fn contraction_below_critical_temperature() {
        let h = HypergraphHamiltonian::ising_ring(3, 1.0).unwrap();
        let g = gibbs(&h, 1e-3).unwrap();
        let opts = ContractionOptions { restarts: 1, sweeps: 1, ..ContractionOptions::default() };
        let c = contraction_coefficient(&g, &opts).unwrap();
        assert!(c.upper < 1.0 && c.kappa_implied > 0.0);
        assert!(c.lower <= c.upper + 1e-6, "{c:?}");
        assert!(c.locality_error < 1e-9);
    }
}
