//! Dual estimates of the TCI constant, exact tail probabilities, Gaussian
//! tail bounds and Laplace-transform checks for Lipschitz observables.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::random::{random_hermitian, stream_rng};
use crate::linalg::{c64, eigh, mat_power, CMatrix, DensityState, HermitianOp, RegisterShape};
use crate::recovery::channel::gell_mann;
use crate::states::GibbsState;
use crate::w1::{lip_const, lip_const_with, LipOptions};

/// Commutator norm below which `O` and `ω` are treated as commuting.
pub const COMMUTING_TOL: f64 = 1e-10;
/// Eigenvalues closer than this are one spectral projector.
const CLUSTER_TOL: f64 = 1e-9;

fn refined() -> LipOptions {
    LipOptions { refine: true, ..LipOptions::default() }
}

/// `ln Tr exp(M)` for Hermitian `M`, stabilized.
fn log_trace_exp(m: &CMatrix) -> f64 {
    let e = eigh(m);
    let top = e.max();
    top + e.values.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
}

/// Best value of `4 [ln Tr exp(K + ln ω) − Tr ωK] / ‖K‖_L²` found, with the
/// Lipschitz constant replaced by its certified upper bracket.
#[derive(Clone, Debug, Serialize)]
pub struct DualLower {
    pub value: f64,
    #[serde(skip)]
    pub witness: HermitianOp,
    pub lipschitz_upper: f64,
    pub evaluations: usize,
}

struct DualProblem {
    log_omega: CMatrix,
    omega: CMatrix,
    evaluations: usize,
}

impl DualProblem {
    fn numerator(&self, k: &HermitianOp) -> f64 {
        let s = k.matrix() + &self.log_omega;
        let cross: f64 = self.omega.iter().zip(k.matrix().iter()).map(|(a, b)| (a.conj() * b).re).sum();
        log_trace_exp(&s) - cross
    }

    fn value(&mut self, k: &HermitianOp) -> Option<(f64, f64)> {
        self.evaluations += 1;
        let lip = lip_const(k).upper;
        if lip <= 1e-12 {
            return None;
        }
        Some((4.0 * self.numerator(k) / (lip * lip), lip))
    }

    /// `exp(K + ln ω)/Z − ω`, the gradient of the numerator.
    fn gradient(&self, k: &HermitianOp) -> CMatrix {
        let s = k.matrix() + &self.log_omega;
        let e = eigh(&s);
        let top = e.max();
        let g = e.map_real(|l| (l - top).exp());
        let z = g.trace().re;
        g * c64(1.0 / z, 0.0) - &self.omega
    }
}

/// Lower bound on `C(ω)` from the variational formula: probes with
/// single-site and site-summed Gell-Mann observables and seeded random
/// observables over a grid of scales, then `iterations` rounds of
/// line-searched gradient ascent from the best probe.
pub fn tci_dual_lower(omega: &DensityState, iterations: usize, seed: u64) -> Result<DualLower> {
    let e = omega.op().eig();
    if e.min() <= 1e-14 {
        return Err(Error::NotPositiveDefinite(e.min()));
    }
    let shape = omega.shape().clone();
    let mut prob =
        DualProblem { log_omega: e.map_real(f64::ln), omega: omega.matrix().clone(), evaluations: 0 };
    let scales = [1e-3, 0.1, 0.3, 1.0, 3.0];
    let mut dirs: Vec<HermitianOp> = Vec::new();
    for g in gell_mann(shape.local_dim()) {
        let mut total = HermitianOp::zeros(shape.clone());
        for &v in shape.sites() {
            let local = HermitianOp::new(RegisterShape::new(vec![v], shape.local_dim())?, g.clone())?;
            let moved = local.extend_to(&shape)?;
            total = total.try_add(&moved)?;
            dirs.push(moved);
        }
        dirs.push(total);
    }
    let mut rng = stream_rng(seed, 0);
    for _ in 0..4 {
        dirs.push(random_hermitian(&shape, &mut rng));
    }
    let mut best: Option<(f64, HermitianOp, f64)> = None;
    for d in &dirs {
        for &t in &scales {
            let k = d.scale(t);
            if let Some((v, lip)) = prob.value(&k) {
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, k, lip));
                }
            }
        }
    }
    let (mut val, mut k, mut lip) = best.ok_or_else(|| Error::InvalidArgument("no probe had a positive Lipschitz constant".into()))?;
    for _ in 0..iterations {
        let g = prob.gradient(&k);
        let gn = g.norm();
        if gn < 1e-14 {
            break;
        }
        let dir = HermitianOp::new(shape.clone(), g * c64(k.matrix().norm() / gn, 0.0))?;
        let mut improved = false;
        let mut cands: Vec<HermitianOp> = (1..=6).map(|j| k.try_add(&dir.scale(0.5f64.powi(j))).unwrap()).collect();
        cands.push(k.scale(1.25));
        cands.push(k.scale(0.8));
        for c in cands {
            if let Some((v, l)) = prob.value(&c) {
                if v > val {
                    (val, k, lip) = (v, c, l);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let tight = lip_const_with(&k, &refined()).upper;
    if tight < lip {
        val = 4.0 * prob.numerator(&k) / (tight * tight);
        lip = tight;
    }
    Ok(DualLower { value: val, witness: k, lipschitz_upper: lip, evaluations: prob.evaluations })
}

/// Spectral projectors of `O` as (eigenvalue, `Tr ωP_λ`).
fn spectral_weights(o: &HermitianOp, omega: &DensityState) -> Vec<(f64, f64)> {
    let e = o.eig();
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (j, &l) in e.values.iter().enumerate() {
        match groups.last_mut() {
            Some((_, idx)) if (e.values[*idx.last().unwrap()] - l).abs() <= CLUSTER_TOL => idx.push(j),
            _ => groups.push((l, vec![j])),
        }
    }
    let w = omega.matrix();
    groups
        .into_iter()
        .map(|(_, idx)| {
            let lam = idx.iter().map(|&j| e.values[j]).sum::<f64>() / idx.len() as f64;
            let p: f64 = idx.iter().map(|&j| {
                let v = e.vectors.column(j);
                (v.adjoint() * w * v)[(0, 0)].re
            }).sum();
            (lam, p.max(0.0))
        })
        .collect()
}

/// `P_ω(O ≥ r)`, or `P_ω(|O − Tr ωO| ≥ r)` when `centered`.
pub fn tail_prob(o: &HermitianOp, omega: &DensityState, r: f64, centered: bool) -> f64 {
    let mean = omega.op().inner(o);
    let tol = CLUSTER_TOL * (1.0 + o.op_norm());
    spectral_weights(o, omega)
        .into_iter()
        .filter(|&(l, _)| if centered { (l - mean).abs() >= r - tol } else { l >= r - tol })
        .map(|(_, p)| p)
        .sum::<f64>()
        .min(1.0)
}

/// Lipschitz data entering the Gaussian tail bounds for `(O, ω)`.
#[derive(Clone, Debug, Serialize)]
pub struct TailConstants {
    /// Upper brackets of `‖(ω^{−½}Oω^{½})_R‖_L` and `‖(…)_I‖_L`.
    pub lip_real: f64,
    pub lip_imag: f64,
    /// Upper bracket of `‖O‖_L`.
    pub lip_o: f64,
    pub commutator: f64,
    pub commuting: bool,
}

pub fn tail_constants(o: &HermitianOp, omega: &DensityState) -> Result<TailConstants> {
    let lo = mat_power(omega.op(), c64(-0.5, 0.0))?;
    let hi = mat_power(omega.op(), c64(0.5, 0.0))?;
    let x = &lo * o.matrix() * &hi;
    let re = HermitianOp::new(o.shape().clone(), (&x + x.adjoint()) * c64(0.5, 0.0))?;
    let im = HermitianOp::new(o.shape().clone(), (&x - x.adjoint()) * Complex64::new(0.0, -0.5))?;
    let opts = refined();
    let commutator = o.commutator_norm(omega.op())?;
    Ok(TailConstants {
        lip_real: lip_const_with(&re, &opts).upper,
        lip_imag: lip_const_with(&im, &opts).upper,
        lip_o: lip_const_with(o, &opts).upper,
        commutator,
        commuting: commutator <= COMMUTING_TOL,
    })
}

/// `2 exp(−r²/(4c max{L_R², L_I²}))` and, when `[O, ω] = 0`,
/// `2 exp(−r²/(c ‖O‖_L²))`.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianTail {
    pub general: f64,
    pub commuting: Option<f64>,
}

fn gauss(r: f64, denom: f64) -> f64 {
    if denom <= 0.0 {
        return if r > 0.0 { 0.0 } else { 2.0 };
    }
    2.0 * (-r * r / denom).exp()
}

pub fn gaussian_tail_from(k: &TailConstants, r: f64, c: f64) -> Result<GaussianTail> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("TCI constant must be positive, got {c}")));
    }
    let m = k.lip_real.max(k.lip_imag);
    Ok(GaussianTail {
        general: gauss(r, 4.0 * c * m * m),
        commuting: k.commuting.then(|| gauss(r, c * k.lip_o * k.lip_o)),
    })
}

pub fn gaussian_tail_bound(o: &HermitianOp, omega: &DensityState, r: f64, c: f64) -> Result<GaussianTail> {
    gaussian_tail_from(&tail_constants(o, omega)?, r, c)
}

/// Exact two-sided tails next to the Gaussian bound over an `r` grid.
#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub r: Vec<f64>,
    pub exact_tail: Vec<f64>,
    /// The commuting bound when it applies, the general one otherwise.
    pub gauss_bound: Vec<f64>,
    pub lipschitz_used: f64,
    pub commuting: bool,
    pub constant: f64,
}

impl TailReport {
    /// Largest `exact − bound` over the grid.
    pub fn worst_excess(&self) -> f64 {
        self.exact_tail.iter().zip(&self.gauss_bound).map(|(e, b)| e - b).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn tail_report(o: &HermitianOp, omega: &DensityState, c: f64, r: &[f64]) -> Result<TailReport> {
    let k = tail_constants(o, omega)?;
    let mut exact_tail = Vec::with_capacity(r.len());
    let mut gauss_bound = Vec::with_capacity(r.len());
    for &ri in r {
        exact_tail.push(tail_prob(o, omega, ri, true));
        let g = gaussian_tail_from(&k, ri, c)?;
        gauss_bound.push(g.commuting.unwrap_or(g.general));
    }
    let lipschitz_used = if k.commuting { k.lip_o } else { k.lip_real.max(k.lip_imag) };
    Ok(TailReport { r: r.to_vec(), exact_tail, gauss_bound, lipschitz_used, commuting: k.commuting, constant: c })
}

/// One term `λ_A O_A` of an observable, with `O_A` on the sites `A` and
/// `‖O_A‖_∞ ≤ 1`.
#[derive(Clone, Debug)]
pub struct ObservableTerm {
    pub coeff: f64,
    pub op: HermitianOp,
}

impl ObservableTerm {
    pub fn new(coeff: f64, op: HermitianOp) -> Result<Self> {
        if op.op_norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!("term norm {} exceeds 1", op.op_norm())));
        }
        Ok(ObservableTerm { coeff, op })
    }

    pub fn support(&self) -> &[usize] {
        self.op.shape().sites()
    }
}

/// Sum of the terms on the full register.
pub fn assemble(terms: &[ObservableTerm], shape: &RegisterShape) -> Result<HermitianOp> {
    let mut total = HermitianOp::zeros(shape.clone());
    for t in terms {
        total = total.try_add(&t.op.extend_to(shape)?.scale(t.coeff))?;
    }
    Ok(total)
}

/// `4 max_i Σ_{A : i ∈ A_∂} |λ_A| exp(β Σ_{B ∩ A ≠ ∅} ‖h_B‖_∞)`, where
/// `A_∂` is `A` together with every hyperedge meeting it.
pub fn conjugated_lip_bound(terms: &[ObservableTerm], omega: &GibbsState) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::MissingMetadata("observable decomposition has no terms".into()));
    }
    let h = &omega.hamiltonian;
    if !omega.commuting {
        return Err(Error::NonCommuting);
    }
    let shape = h.shape();
    let mut per_site = vec![0.0f64; shape.num_sites()];
    for t in terms {
        let a = t.support();
        for &s in a {
            if !shape.contains(s) {
                return Err(Error::MissingMetadata(format!("term support site {s} not in register")));
            }
        }
        let mut grown: Vec<usize> = a.to_vec();
        let mut weight = 0.0;
        for e in h.edges() {
            if e.sites.iter().any(|s| a.contains(s)) {
                weight += e.term.op_norm();
                grown.extend(&e.sites);
            }
        }
        let factor = t.coeff.abs() * (omega.beta * weight).exp();
        for (pos, &s) in shape.sites().iter().enumerate() {
            if grown.contains(&s) {
                per_site[pos] += factor;
            }
        }
    }
    Ok(4.0 * per_site.into_iter().fold(0.0, f64::max))
}

/// `ln Tr[ω e^K]` against `(c′/4) ‖K‖_L²` with the upper bracket.
pub fn laplace_bound_check(k: &HermitianOp, omega: &DensityState, c_prime: f64) -> Result<(f64, f64)> {
    let mean = omega.op().inner(k);
    if mean.abs() > 1e-9 * (1.0 + k.op_norm()) {
        return Err(Error::InvalidArgument(format!("K is not centered: Tr[ωK] = {mean:e}")));
    }
    let e = k.eig();
    let top = e.max();
    let ek = e.map_real(|l| (l - top).exp());
    let tr: f64 = omega.matrix().iter().zip(ek.iter()).map(|(a, b)| (a.conj() * b).re).sum();
    let lhs = top + tr.ln();
    let lip = lip_const_with(k, &refined()).upper;
    Ok((lhs, c_prime / 4.0 * lip * lip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;
    use crate::linalg::random::random_density;
    use crate::states::{gibbs, HypergraphHamiltonian};

    fn mixed(n: usize) -> DensityState {
        DensityState::maximally_mixed(RegisterShape::qubits(n).unwrap())
    }

    #[test]
    fn dual_lower_single_qubit_and_products() {
        let d = tci_dual_lower(&mixed(1), 10, 1).unwrap();
        assert!(d.value >= 0.49 && d.value <= 0.5 + 1e-3, "{}", d.value);
        for n in 2..=3 {
            let d = tci_dual_lower(&mixed(n), 5, 1).unwrap();
            assert!(d.value <= n as f64 / 2.0 + 1e-3 && d.value >= 0.49 * n as f64, "{n}: {}", d.value);
        }
        let s = RegisterShape::qubits(1).unwrap();
        let pure = DensityState::pure(s, &[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        assert!(tci_dual_lower(&pure, 1, 1).is_err());
    }

    #[test]
    fn tail_examples() {
        let z = paulis::z(0);
        assert!((tail_prob(&z, &mixed(1), 0.5, true) - 1.0).abs() < 1e-12);
        assert_eq!(tail_prob(&z, &mixed(1), 2.5, true), 0.0);
        let zz = paulis::z(0).extend_to(&RegisterShape::qubits(2).unwrap()).unwrap()
            .try_add(&paulis::z(1).extend_to(&RegisterShape::qubits(2).unwrap()).unwrap()).unwrap();
        assert!((tail_prob(&zz, &mixed(2), 1.5, true) - 0.5).abs() < 1e-12);
        assert!((tail_prob(&zz, &mixed(2), 2.0, false) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn tail_is_monotone() {
        let mut rng = stream_rng(3, 0);
        let s = RegisterShape::qubits(2).unwrap();
        let o = random_hermitian(&s, &mut rng);
        let w = random_density(&s, 4, &mut rng);
        let mut prev = 1.0;
        for k in 0..30 {
            let p = tail_prob(&o, &w, 0.1 * k as f64, true);
            assert!(p <= prev + 1e-15 && (0.0..=1.0).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn gaussian_single_qubit() {
        let g = gaussian_tail_bound(&paulis::z(0), &mixed(1), 0.5, 0.5).unwrap();
        let want = 2.0 * (-0.25f64 / 2.0).exp();
        assert!((g.commuting.unwrap() - want).abs() < 1e-6, "{g:?}");
        assert!(g.commuting.unwrap() >= 1.0);
        let g0 = gaussian_tail_bound(&paulis::z(0), &mixed(1), 0.0, 0.5).unwrap();
        assert_eq!(g0.general, 2.0);
        assert!(gaussian_tail_bound(&paulis::z(0), &mixed(1), 0.5, 0.0).is_err());
    }

    #[test]
    fn conjugated_bound_dominates_brackets() {
        let h = HypergraphHamiltonian::ising_chain(3, 1.0).unwrap();
        let terms = vec![ObservableTerm::new(1.0, paulis::z(1)).unwrap()];
        let g0 = gibbs(&h, 0.0).unwrap();
        assert!((conjugated_lip_bound(&terms, &g0).unwrap() - 4.0).abs() < 1e-12);
        let g = gibbs(&h, 0.1).unwrap();
        let b = conjugated_lip_bound(&terms, &g).unwrap();
        // Z_2 touches both bonds of the chain
        assert!((b - 4.0 * (0.2f64).exp()).abs() < 1e-12);
        let o = assemble(&terms, h.shape()).unwrap();
        let k = tail_constants(&o, &g.state).unwrap();
        assert!(k.lip_real <= b + 1e-6 && k.lip_imag <= b + 1e-6);
        assert!(conjugated_lip_bound(&[], &g).is_err());
    }

    #[test]
    fn laplace_examples() {
        let s = RegisterShape::qubits(1).unwrap();
        let (l, r) = laplace_bound_check(&HermitianOp::zeros(s), &mixed(1), 0.5).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        for &t in &[0.1, 0.7, 2.0] {
            let (l, r) = laplace_bound_check(&paulis::z(0).scale(t), &mixed(1), 0.5).unwrap();
            assert!((l - t.cosh().ln()).abs() < 1e-12);
            assert!(l <= r + 1e-9);
        }
    }
}
