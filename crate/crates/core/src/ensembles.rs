//! Canonical versus microcanonical ensembles: W1 and marginal bounds from
//! entropy gaps, the entropy lower bound on W1, and the shell relative
//! entropy bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, DensityState};
use crate::states::{energy, energy_clusters, microcanonical, rel_entropy, shell_projector, GibbsState};
use crate::w1::{lip_const_with, LipOptions};

/// Relative tolerance on `|Tr ρH − Tr ωH|` against `‖H‖_∞`.
pub const ENERGY_MATCH_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleBounds {
    /// `√(C (S(ω) − S(ρ))/n)`.
    pub w1_per_site_bound: f64,
    /// Twice the per-site bound.
    pub marginal_bound: f64,
    pub energy_matched: bool,
    pub entropy_gap: f64,
    /// Exact `‖Λ(ρ) − Λ(ω)‖_1`.
    pub marginal_distance: f64,
}

/// `Λ(ρ) = (1/n) Σ_v ρ_v` as a `d × d` matrix.
pub fn average_marginal(rho: &DensityState) -> Result<CMatrix> {
    let shape = rho.shape();
    let d = shape.local_dim();
    let mut acc = CMatrix::zeros(d, d);
    for &v in shape.sites() {
        acc += rho.marginal(&[v])?.matrix();
    }
    Ok(acc * c64(1.0 / shape.num_sites() as f64, 0.0))
}

fn trace_norm(m: &CMatrix) -> f64 {
    crate::linalg::eigh(m).values.iter().map(|x| x.abs()).sum()
}

/// Bounds for a state `ρ` with the same mean energy as the Gibbs state,
/// where `c` is the per-site TCI constant (`C(ω) ≤ c n`).
pub fn ensemble_equivalence(rho: &DensityState, omega: &GibbsState, c: f64) -> Result<EnsembleBounds> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("TCI constant must be nonnegative, got {c}")));
    }
    let h = omega.hamiltonian.matrix();
    let mismatch = energy(rho, h) - energy(&omega.state, h);
    if mismatch.abs() > ENERGY_MATCH_TOL * h.op_norm().max(1e-300) {
        return Err(Error::EnergyMismatch(mismatch));
    }
    let n = rho.shape().num_sites() as f64;
    let gap = (omega.state.entropy() - rho.entropy()).max(0.0);
    let per_site = (c * gap / n).sqrt();
    let diff = average_marginal(rho)? - average_marginal(&omega.state)?;
    Ok(EnsembleBounds {
        w1_per_site_bound: per_site,
        marginal_bound: 2.0 * per_site,
        energy_matched: true,
        entropy_gap: gap,
        marginal_distance: trace_norm(&diff),
    })
}

/// `(S(ω) − S(ρ) − ln(n+1) − 1)/ln(d²n)`, a lower bound on `‖ρ − ω‖_{W1}`.
pub fn entropy_w1_lower(rho: &DensityState, omega: &DensityState) -> f64 {
    let shape = rho.shape();
    let n = shape.num_sites() as f64;
    let d = shape.local_dim() as f64;
    (omega.entropy() - rho.entropy() - (n + 1.0).ln() - 1.0) / (d * d * n).ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct MicrocanonicalBound {
    /// `βΔ + ln(4 + 4√(c n ln 4) ‖H‖_L/Δ)`.
    pub bound: f64,
    /// Exact `S(ω_{E,Δ}‖ω)`.
    pub exact: f64,
    pub energy: f64,
    pub delta: f64,
    pub shell_rank: usize,
    pub lipschitz_upper: f64,
}

/// Shell bound for the microcanonical state on `(E − Δ, E]`, with the
/// refined upper bracket of `‖H‖_L`.
pub fn microcanonical_equivalence_bound(omega: &GibbsState, e: f64, delta: f64, c: f64) -> Result<MicrocanonicalBound> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("TCI constant must be nonnegative, got {c}")));
    }
    let h = &omega.hamiltonian;
    let (_, rank) = shell_projector(h.matrix(), e, delta)?;
    let micro = microcanonical(h, e, delta)?;
    let lip = lip_const_with(h.matrix(), &LipOptions::default()).upper;
    let n = h.shape().num_sites() as f64;
    let bound = omega.beta * delta + (4.0 + 4.0 * (c * n * 4f64.ln()).sqrt() * lip / delta).ln();
    Ok(MicrocanonicalBound {
        bound,
        exact: rel_entropy(&micro, &omega.state),
        energy: e,
        delta,
        shell_rank: rank,
        lipschitz_upper: lip,
    })
}

/// Eigenvalue `E` maximizing `e^{−βE} Tr P(E, Δ)`, the shell the bound is
/// proved for. Ties go to the lowest energy.
pub fn best_shell_energy(omega: &GibbsState, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("shell width {delta} must be positive")));
    }
    let clusters = energy_clusters(&omega.hamiltonian.matrix().eig());
    let mut best: Option<(f64, f64)> = None;
    for &(top, _) in clusters.iter().rev() {
        let count: usize = clusters
            .iter()
            .filter(|(rep, _)| *rep <= top + crate::states::ENERGY_GROUP_TOL && *rep > top - delta + crate::states::ENERGY_GROUP_TOL)
            .map(|(_, idx)| idx.len())
            .sum();
        let score = -omega.beta * top + (count as f64).ln();
        if best.is_none_or(|b| score > b.1 + 1e-12) {
            best = Some((top, score));
        }
    }
    best.map(|b| b.0).ok_or_else(|| Error::EmptyShell { lower: f64::NAN, upper: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RegisterShape;
    use crate::states::{gibbs, match_energy, HypergraphHamiltonian};
    use crate::w1::{w1_distance, W1Options};

    fn ising() -> GibbsState {
        gibbs(&HypergraphHamiltonian::ising_chain(3, 1.0).unwrap(), 0.4).unwrap()
    }

    #[test]
    fn identical_states() {
        let g = ising();
        let b = ensemble_equivalence(&g.state, &g, 1.0).unwrap();
        assert!(b.w1_per_site_bound < 1e-6 && b.marginal_distance < 1e-12 && b.energy_matched);
    }

    #[test]
    fn mismatch_is_rejected() {
        let g = ising();
        let s = DensityState::maximally_mixed(RegisterShape::qubits(3).unwrap());
        assert!(matches!(ensemble_equivalence(&s, &g, 1.0), Err(Error::EnergyMismatch(_))));
    }

    #[test]
    fn microcanonical_matched_state() {
        let g = ising();
        let h = g.hamiltonian.matrix();
        let target = energy(&g.state, h);
        let micro = microcanonical(&g.hamiltonian, best_shell_energy(&g, 0.5).unwrap(), 0.5).unwrap();
        let (rho, _) = match_energy(&micro, h, target).unwrap();
        // a generous constant: single-site Gibbs states satisfy c = 1/2 per site
        let b = ensemble_equivalence(&rho, &g, 2.0).unwrap();
        assert!(b.w1_per_site_bound > 0.0);
        assert!(b.marginal_distance <= b.marginal_bound + 1e-9);
        let w = w1_distance(&rho, &g.state, &W1Options::default()).unwrap();
        assert!(b.marginal_distance <= 2.0 / 3.0 * w.value_upper + 1e-6);
        assert!(entropy_w1_lower(&rho, &g.state) <= w.value_upper + 1e-9);
    }

    #[test]
    fn entropy_lower_bound_pure_vs_mixed() {
        let s = RegisterShape::qubits(2).unwrap();
        let mixed = DensityState::maximally_mixed(s.clone());
        let mut v = vec![c64(0.0, 0.0); 4];
        v[0] = c64(1.0, 0.0);
        let pure = DensityState::pure(s, &v).unwrap();
        let want = (4f64.ln() - 3f64.ln() - 1.0) / 8f64.ln();
        assert!((entropy_w1_lower(&pure, &mixed) - want).abs() < 1e-12);
    }

    #[test]
    fn shell_bound_dominates_exact() {
        let g = ising();
        let mean = energy(&g.state, g.hamiltonian.matrix());
        for &delta in &[0.25, 0.5, 1.0, 2.0, 10.0] {
            let e = best_shell_energy(&g, delta).unwrap();
            let m = microcanonical_equivalence_bound(&g, e, delta, 0.5).unwrap();
            assert!(m.exact <= m.bound, "{m:?}");
            if let Ok(m) = microcanonical_equivalence_bound(&g, mean, delta, 0.5) {
                assert!(m.exact.is_finite() && m.bound.is_finite());
            }
        }
        let tiny = microcanonical_equivalence_bound(&g, best_shell_energy(&g, 1e-6).unwrap(), 1e-6, 0.5).unwrap();
        assert!(tiny.bound > 10.0 && tiny.exact.is_finite());
        assert!(matches!(microcanonical_equivalence_bound(&g, 100.0, 0.5, 0.5), Err(Error::EmptyShell { .. })));
    }

    #[test]
    fn best_shell_brute_force() {
        let g = ising();
        let ev = g.hamiltonian.matrix().eigenvalues();
        for &delta in &[0.3, 1.5, 4.0] {
            let e = best_shell_energy(&g, delta).unwrap();
            let score = |x: f64| (-g.beta * x).exp() * ev.iter().filter(|&&l| l <= x + 1e-9 && l > x - delta + 1e-9).count() as f64;
            for &x in &ev {
                assert!(score(x) <= score(e) * (1.0 + 1e-12));
            }
        }
    }
}
