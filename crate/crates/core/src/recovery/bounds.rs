//! Recoverability inequalities and the Markov locality probe.

use serde::Serialize;

use super::channel::identity_factor_deviation;
use super::petz::petz_rotated;
use crate::chain::ChainPartition;
use crate::error::{Error, Result};
use crate::linalg::{DensityState, RegisterShape};
use crate::states::{cmi_of_subsets, rel_entropy};

fn rel_entropy_on(rho: &DensityState, omega: &DensityState, sites: &[usize]) -> Result<f64> {
    if sites.is_empty() {
        return Ok(0.0);
    }
    Ok(rel_entropy(&rho.marginal(sites)?, &omega.marginal(sites)?))
}

fn check_same(rho: &DensityState, omega: &DensityState) -> Result<()> {
    if rho.shape() != omega.shape() {
        return Err(Error::InvalidRegister("states live on different registers".into()));
    }
    Ok(())
}

/// `‖ρ_{AB} − Φ_{A→AB}(ρ_A)‖_1` with the map built from ω.
pub fn recovery_distance(rho: &DensityState, omega: &DensityState, a: &[usize], b: &[usize], tol: f64) -> Result<f64> {
    let phi = petz_rotated(omega, a, b, tol)?;
    let input = if a.is_empty() {
        DensityState::maximally_mixed(RegisterShape::trivial(rho.shape().local_dim()))
    } else {
        rho.marginal(a)?
    };
    let out = phi.apply(&input)?;
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    let target = rho.marginal(&ab)?;
    Ok((out.op() - &target.op().permuted(out.shape())?).trace_norm())
}

/// `(S(ρ_AB‖ω_AB) − S(ρ_A‖ω_A), ½‖ρ_AB − Φ_{A→AB}(ρ_A)‖_1²)`.
pub fn recoverability_gap(
    rho: &DensityState,
    omega: &DensityState,
    a: &[usize],
    b: &[usize],
    tol: f64,
) -> Result<(f64, f64)> {
    check_same(rho, omega)?;
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    let s_ab = rel_entropy_on(rho, omega, &ab)?;
    let s_a = rel_entropy_on(rho, omega, a)?;
    let drop = if s_ab.is_infinite() { f64::INFINITY } else { s_ab - s_a };
    let dist = recovery_distance(rho, omega, a, b, tol)?;
    Ok((drop, 0.5 * dist * dist))
}

/// Quantities of the chain recoverability lemma.
#[derive(Clone, Debug, Serialize)]
pub struct ChainRecovery {
    /// `S(ρ‖ω)`
    pub rel_entropy: f64,
    /// `Σ_i ‖ρ_{A_1^i} − Φ_i(ρ_{A_1^{i−1}})‖_1`
    pub sum_dists: f64,
    /// `sum_dists² / (2m)`, must not exceed `rel_entropy`
    pub bound1: f64,
    /// `(sum_dists / 2m)²`, must not exceed `1 − e^{−S/m}`
    pub bound2: f64,
    /// `1 − e^{−S/m}`
    pub bound2_rhs: f64,
    pub per_block: Vec<f64>,
}

impl ChainRecovery {
    pub fn holds(&self, slack: f64) -> bool {
        self.bound1 <= self.rel_entropy + slack && self.bound2 <= self.bound2_rhs + slack
    }
}

pub fn chain_recovery_bounds(
    rho: &DensityState,
    omega: &DensityState,
    partition: &ChainPartition,
    tol: f64,
) -> Result<ChainRecovery> {
    check_same(rho, omega)?;
    let m = partition.len();
    let mut per_block = Vec::with_capacity(m);
    for i in 0..m {
        let prev = partition.prefix(i.checked_sub(1));
        per_block.push(recovery_distance(rho, omega, &prev, &partition.blocks()[i], tol)?);
    }
    let s = rel_entropy(rho, omega);
    let sum: f64 = per_block.iter().sum();
    let mf = m as f64;
    Ok(ChainRecovery {
        rel_entropy: s,
        sum_dists: sum,
        bound1: sum * sum / (2.0 * mf),
        bound2: (sum / (2.0 * mf)).powi(2),
        bound2_rhs: 1.0 - (-s / mf).exp(),
        per_block,
    })
}

/// Floor on the conditional mutual information threshold, set by the
/// rounding error of entropies.
const CMI_FLOOR: f64 = 1e-10;

/// Checks that the recovery map of block `i` (0-based) leaves
/// `A_1^{i−2}` untouched. Requires `I(A_1^{i−2}; A_i | A_{i−1})_ω ≤ tol`.
pub fn markov_locality_check(omega: &DensityState, partition: &ChainPartition, i: usize, tol: f64) -> Result<bool> {
    if i >= partition.len() {
        return Err(Error::InvalidPartition(format!("block index {i} out of range")));
    }
    if i < 2 {
        return Ok(true);
    }
    let far = partition.prefix(Some(i - 2));
    let mid = &partition.blocks()[i - 1];
    let cur = &partition.blocks()[i];
    let cmi = cmi_of_subsets(omega, &far, cur, mid)?;
    if cmi > tol.max(CMI_FLOOR) {
        return Err(Error::MarkovViolation(cmi));
    }
    let kept = partition.prefix(Some(i - 1));
    let phi = petz_rotated(omega, &kept, cur, tol)?;
    let dev = identity_factor_deviation(phi.channel().map(), &far)?;
    Ok(dev <= 10.0 * tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_density;
    use crate::states::{gibbs, HypergraphHamiltonian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_cases() {
        let h = HypergraphHamiltonian::ising_chain(3, 1.0).unwrap();
        let w = gibbs(&h, 0.5).unwrap().state;
        let (d, r) = recoverability_gap(&w, &w, &[0], &[1], 1e-8).unwrap();
        assert!(d.abs() < 1e-12 && r < 1e-14);
        let p = ChainPartition::sites(h.shape());
        let c = chain_recovery_bounds(&w, &w, &p, 1e-8).unwrap();
        assert!(c.rel_entropy < 1e-12 && c.sum_dists < 1e-7);
    }

    #[test]
    fn product_reference_recovers_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let wa = random_density(&RegisterShape::new(vec![0], 2).unwrap(), 2, &mut rng);
        let wb = random_density(&RegisterShape::new(vec![1], 2).unwrap(), 2, &mut rng);
        let omega = DensityState::product(&[wa, wb.clone()]).unwrap();
        let ra = random_density(&RegisterShape::new(vec![0], 2).unwrap(), 2, &mut rng);
        let rho = ra.kron(&wb).unwrap();
        let (d, r) = recoverability_gap(&rho, &omega, &[0], &[1], 1e-8).unwrap();
        assert!(d.abs() < 1e-10 && r < 1e-14);
    }

    #[test]
    fn random_instances_satisfy_inequalities() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = HypergraphHamiltonian::ising_chain(3, 1.0).unwrap();
        let w = gibbs(&h, 0.8).unwrap().state;
        for _ in 0..5 {
            let rho = random_density(h.shape(), 8, &mut rng);
            let (d, r) = recoverability_gap(&rho, &w, &[0, 1], &[2], 1e-8).unwrap();
            assert!(d >= r - 1e-7);
            let c = chain_recovery_bounds(&rho, &w, &ChainPartition::sites(h.shape()), 1e-8).unwrap();
            assert!(c.holds(1e-7));
        }
        // single block: the chain bound is Pinsker on the whole register
        let rho = random_density(h.shape(), 8, &mut rng);
        let one = ChainPartition::new(h.shape(), vec![vec![0, 1, 2]]).unwrap();
        let c = chain_recovery_bounds(&rho, &w, &one, 1e-8).unwrap();
        let tn = (rho.op() - w.op()).trace_norm();
        assert!((c.sum_dists - tn).abs() < 1e-7);
        assert!(c.holds(1e-7));
    }

    #[test]
    fn markov_locality() {
        let h = HypergraphHamiltonian::ising_chain(4, 1.0).unwrap();
        let w = gibbs(&h, 0.6).unwrap().state;
        let p = ChainPartition::sites(h.shape());
        for i in 0..4 {
            assert!(markov_locality_check(&w, &p, i, 1e-8).unwrap());
        }
        let prod = DensityState::maximally_mixed(h.shape().clone());
        assert!(markov_locality_check(&prod, &p, 3, 1e-8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let generic = random_density(h.shape(), 3, &mut rng);
        assert!(matches!(markov_locality_check(&generic, &p, 2, 1e-8), Err(Error::MarkovViolation(_))));
    }
}
