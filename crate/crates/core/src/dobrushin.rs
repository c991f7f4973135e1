//! Contraction coefficients η for chains, the Markov and decaying-correlation
//! TCI constants, and empirical verification of transportation-cost bounds.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainPartition;
use crate::curvature::{diamond_norm, DIAMOND_LOOSE};
use crate::error::{Error, Result};
use crate::linalg::random::{random_pure, stream_rng};
use crate::linalg::{DensityState, RegisterShape};
use crate::recovery::{markov_locality_check, petz_rotated, ChannelRep};
use crate::states::{max_divergence, rel_entropy};
use crate::w1::{w1_distance, W1Options};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMethod {
    DiamondBound,
    MaxdivBound,
    EmpiricalLower,
}

/// η together with the value it was derived from for each block.
#[derive(Clone, Debug, Serialize)]
pub struct EtaEstimate {
    pub eta: f64,
    pub method: EtaMethod,
    /// Per transition `A_{i−1} → A_i`, indexed by `i ≥ 1` (0-based).
    pub per_block: Vec<f64>,
    /// `max_i S_∞` for the max-divergence route.
    pub a: Option<f64>,
    /// True when some diamond-norm bracket was flagged loose.
    pub loose: bool,
}

/// `Φ̃_i = Tr_{A_{i−1}} ∘ Φ_{A_{i−1}→A_{i−1}A_i}`, built from the pair
/// marginal of `ω`. Under the Markov condition this is the whole action
/// of the chain recovery map on the last block.
pub fn transfer_channel(omega: &DensityState, partition: &ChainPartition, i: usize, tol: f64) -> Result<ChannelRep> {
    if i == 0 || i >= partition.len() {
        return Err(Error::InvalidPartition(format!("transfer channel needs 1 ≤ i < m, got {i}")));
    }
    let prev = &partition.blocks()[i - 1];
    let cur = &partition.blocks()[i];
    let mut pair = prev.clone();
    pair.extend(cur);
    let local = omega.marginal(&pair)?;
    let phi = petz_rotated(&local, prev, cur, tol)?;
    let tr = ChannelRep::partial_trace(phi.out_shape().clone(), prev)?;
    tr.compose(phi.channel())
}

/// `Φ̃_i − ω_{A_i} ⊗ Tr_{A_{i−1}}`.
fn transfer_difference(omega: &DensityState, partition: &ChainPartition, i: usize, tol: f64) -> Result<crate::recovery::LinearMap> {
    let phi = transfer_channel(omega, partition, i, tol)?;
    let target = omega.marginal(&partition.blocks()[i])?;
    let target = DensityState::new(target.op().permuted(phi.out_shape())?)?;
    let rep = ChannelRep::replacer(phi.in_shape().clone(), &target);
    phi.map().difference(rep.map())
}

/// `η = max_i ‖Φ̃_i − ω_{A_i} ⊗ Tr_{A_{i−1}}‖_⋄`, using the diamond upper
/// bracket. Fails unless every block passes the Markov locality check.
pub fn eta_diamond(omega: &DensityState, partition: &ChainPartition, tol: f64) -> Result<EtaEstimate> {
    for i in 0..partition.len() {
        if !markov_locality_check(omega, partition, i, tol)? {
            return Err(Error::ConditionNotMet(format!("recovery map of block {i} acts beyond the previous block")));
        }
    }
    let mut per_block = Vec::new();
    let mut loose = false;
    for i in 1..partition.len() {
        let dn = diamond_norm(&transfer_difference(omega, partition, i, tol)?)?;
        loose |= dn.upper - dn.lower > DIAMOND_LOOSE;
        per_block.push(dn.upper);
    }
    let eta = per_block.iter().copied().fold(0.0, f64::max);
    Ok(EtaEstimate { eta, method: EtaMethod::DiamondBound, per_block, a: None, loose })
}

/// `η = √(2a)` with `a = max_i S_∞(ω_{A_i} ⊗ ω_{A_{i+1}} ‖ ω_{A_i A_{i+1}})`;
/// returns [`Error::ConditionNotMet`] when `a ≥ ½`.
pub fn eta_from_maxdiv(omega: &DensityState, partition: &ChainPartition) -> Result<EtaEstimate> {
    let mut per_block = Vec::new();
    for i in 0..partition.len().saturating_sub(1) {
        let (x, y) = (&partition.blocks()[i], &partition.blocks()[i + 1]);
        let mut pair = x.clone();
        pair.extend(y);
        let joint = omega.marginal(&pair)?;
        let prod = omega.marginal(x)?.kron(&omega.marginal(y)?)?;
        let prod = DensityState::new(prod.op().permuted(joint.shape())?)?;
        per_block.push(max_divergence(&prod, &joint));
    }
    let a = per_block.iter().copied().fold(0.0, f64::max);
    if a >= 0.5 {
        return Err(Error::ConditionNotMet(format!("max-divergence a = {a} is not below 1/2")));
    }
    Ok(EtaEstimate { eta: (2.0 * a).sqrt(), method: EtaMethod::MaxdivBound, per_block, a: Some(a), loose: false })
}

/// Lower bound on the trace-norm contraction of each `Φ̃_i` from pairs of
/// Haar-random pure states on `A_{i−1}`.
pub fn eta_empirical(omega: &DensityState, partition: &ChainPartition, trials: usize, seed: u64, tol: f64) -> Result<EtaEstimate> {
    let mut per_block = Vec::new();
    for i in 1..partition.len() {
        let phi = transfer_channel(omega, partition, i, tol)?;
        let shape = phi.in_shape().clone();
        let mut rng = stream_rng(seed, i as u64);
        let mut best = 0.0f64;
        for _ in 0..trials {
            let x = random_pure(&shape, &mut rng).op().try_sub(random_pure(&shape, &mut rng).op())?;
            let norm = x.trace_norm();
            if norm > 1e-9 {
                best = best.max(phi.apply(&x)?.trace_norm() / norm);
            }
        }
        per_block.push(best);
    }
    let eta = per_block.iter().copied().fold(0.0, f64::max);
    Ok(EtaEstimate { eta, method: EtaMethod::EmpiricalLower, per_block, a: None, loose: false })
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::ConditionNotMet(format!("η = {eta} is not in [0, 1)")));
    }
    Ok(())
}

/// `2 m K² (1/(1−η) + 1)²`.
pub fn tci_markov_bound(partition: &ChainPartition, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let k = partition.max_block() as f64;
    Ok(2.0 * partition.len() as f64 * k * k * (1.0 / (1.0 - eta) + 1.0).powi(2))
}

/// `K (1/(1−η) + 1) · 2m √(1 − e^{−S/m})`, a bound on `‖ρ − ω‖_{W1}` given
/// `S = S(ρ‖ω)`.
pub fn tci_markov_refined(s: f64, partition: &ChainPartition, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("relative entropy {s} must be ≥ 0")));
    }
    let m = partition.len() as f64;
    let k = partition.max_block() as f64;
    Ok(k * (1.0 / (1.0 - eta) + 1.0) * 2.0 * m * (1.0 - (-s / m).exp()).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct NonMarkovBound {
    pub value: f64,
    /// `⌈−ln(C² n)/(2 ln η)⌉`.
    pub k0: i64,
}

/// Smallest `C` used inside `ln(C² n)`.
pub const NONMARKOV_C_FLOOR: f64 = 1e-12;

/// `8 n (2 + (C+1)/(1−η) − ln(C² n)/(2 ln η))²`.
pub fn tci_nonmarkov_bound(n: usize, c: f64, eta: f64) -> Result<NonMarkovBound> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::ConditionNotMet(format!("η = {eta} is not in (0, 1)")));
    }
    if !(c >= 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("need C ≥ 0 and n ≥ 1, got C = {c}, n = {n}")));
    }
    let cg = c.max(NONMARKOV_C_FLOOR);
    let t = -(cg * cg * n as f64).ln() / (2.0 * eta.ln());
    let value = 8.0 * n as f64 * (2.0 + (c + 1.0) / (1.0 - eta) + t).powi(2);
    Ok(NonMarkovBound { value, k0: t.ceil() as i64 })
}

/// Envelope `d_k ≤ C η^k` fitted to a decay profile.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub c: f64,
    pub eta: f64,
    pub points: Vec<(usize, f64)>,
}

/// Largest sampled violation, per distance `k`, of the two exponential
/// decay hypotheses for the site-by-site recovery maps `Φ_i` of `ω`
/// (first site = first chain site). Sampling only; nothing is certified.
pub fn decay_profile(omega: &DensityState, trials: usize, seed: u64, tol: f64) -> Result<Vec<f64>> {
    let shape = omega.shape().clone();
    let sites = shape.sites().to_vec();
    let n = sites.len();
    let maps = (1..n)
        .map(|i| petz_rotated(omega, &sites[..i], &sites[i..=i], tol))
        .collect::<Result<Vec<_>>>()?;
    let mut profile = vec![0.0f64; n + 1];
    let mut rng = stream_rng(seed, 0);
    for _ in 0..trials {
        for i in 1..=n {
            let tau = random_pure(&RegisterShape::new(sites[..i].to_vec(), shape.local_dim())?, &mut rng);
            // recovering sites i+1..n from the first i
            let mut full = tau.clone();
            for map in &maps[i - 1..] {
                full = map.apply(&full)?;
            }
            for k in 0..=i.max(n - i) {
                let lo = i.saturating_sub(k);
                let hi = (i + k).min(n);
                let mut kept: Vec<usize> = sites[..lo].to_vec();
                kept.extend(&sites[hi..]);
                if kept.is_empty() {
                    continue;
                }
                let got = full.marginal(&kept)?;
                let want = if lo == 0 {
                    omega.marginal(&sites[hi..])?
                } else if hi == n {
                    tau.marginal(&sites[..lo])?
                } else {
                    tau.marginal(&sites[..lo])?.kron(&omega.marginal(&sites[hi..])?)?
                };
                let dist = got.op().try_sub(&want.op().permuted(got.shape())?)?.trace_norm();
                profile[k] = profile[k].max(dist);
            }
            if i >= 2 {
                let img = maps[i - 2].apply(&tau.marginal(&sites[..i - 1])?)?;
                for k in 0..i - 1 {
                    let kept = &sites[..i - 1 - k];
                    let got = img.marginal(kept)?;
                    let want = tau.marginal(kept)?;
                    let dist = got.op().try_sub(want.op())?.trace_norm();
                    profile[k] = profile[k].max(dist);
                }
            }
        }
    }
    Ok(profile)
}

/// Least-squares slope of `ln d_k` against `k` for the decay rate, then the
/// smallest `C` with `d_k ≤ C η^k` at every point. `None` when fewer than
/// two points are above rounding level.
pub fn fit_decay(profile: &[f64]) -> Option<DecayFit> {
    let points: Vec<(usize, f64)> = profile.iter().copied().enumerate().filter(|&(_, d)| d > 1e-13).collect();
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1.ln() - my)).sum();
    let eta = (sxy / sxx).exp();
    let c = points.iter().map(|&(k, d)| d / eta.powi(k as i32)).fold(0.0, f64::max);
    Some(DecayFit { c, eta, points })
}

/// Settings for [`verify_tci_empirical`].
#[derive(Clone, Debug, Serialize)]
pub struct TciOptions {
    /// Added to the constant before comparing.
    pub slack: f64,
    /// Samples with `S(ρ‖ω)` at or below this are skipped.
    pub min_entropy: f64,
    /// Smallest mixing weight of the pure state; weights are log-uniform.
    pub min_weight: f64,
    pub parallel: bool,
    pub w1: W1Options,
}

impl Default for TciOptions {
    fn default() -> Self {
        TciOptions {
            slack: 1e-6,
            min_entropy: 1e-12,
            min_weight: 1e-3,
            parallel: false,
            w1: W1Options { gap_tol: 1e-6, ..W1Options::default() },
        }
    }
}

/// Outcome of sampling `‖ρ − ω‖_{W1}² / S(ρ‖ω)` against a constant.
#[derive(Clone, Debug, Serialize)]
pub struct TciReport {
    pub constant: f64,
    pub trials: usize,
    pub seed: u64,
    /// Samples that passed the entropy filter.
    pub used: usize,
    /// Largest `value_upper² / S`.
    pub max_ratio_upper: f64,
    /// Largest `value_lower² / S`.
    pub max_ratio_lower: f64,
    /// `max_ratio_upper ≤ constant + slack`.
    pub pass: bool,
    /// `max_ratio_lower > constant + slack`: a definitive counterexample.
    pub refuted: bool,
    pub slack: f64,
    /// Named constants the caller compared against.
    pub bounds: BTreeMap<String, f64>,
}

/// Samples `ρ = λψψ† + (1−λ)ω` for Haar-random `ψ` and log-uniform `λ`, and
/// compares the certified W1 brackets against `√(constant · S(ρ‖ω))`.
pub fn verify_tci_empirical(omega: &DensityState, constant: f64, trials: usize, seed: u64, opts: &TciOptions) -> Result<TciReport> {
    if !(constant > 0.0) {
        return Err(Error::InvalidArgument(format!("TCI constant must be positive, got {constant}")));
    }
    let sample = |t: usize| -> Result<Option<(f64, f64)>> {
        let mut rng = stream_rng(seed, t as u64);
        let lambda = opts.min_weight.powf(rng.random::<f64>());
        let psi = random_pure(omega.shape(), &mut rng);
        let rho = psi.mix(omega, lambda)?;
        let s = rel_entropy(&rho, omega);
        if s <= opts.min_entropy || !s.is_finite() {
            return Ok(None);
        }
        let c = w1_distance(&rho, omega, &opts.w1)?;
        Ok(Some((c.value_upper.powi(2) / s, c.value_lower.max(0.0).powi(2) / s)))
    };
    let results: Vec<Result<Option<(f64, f64)>>> =
        if opts.parallel { (0..trials).into_par_iter().map(sample).collect() } else { (0..trials).map(sample).collect() };
    let mut used = 0;
    let (mut up, mut lo) = (0.0f64, 0.0f64);
    for r in results {
        if let Some((u, l)) = r? {
            used += 1;
            up = up.max(u);
            lo = lo.max(l);
        }
    }
    Ok(TciReport {
        constant,
        trials,
        seed,
        used,
        max_ratio_upper: up,
        max_ratio_lower: lo,
        pass: up <= constant + opts.slack,
        refuted: lo > constant + opts.slack,
        slack: opts.slack,
        bounds: BTreeMap::new(),
    })
}
