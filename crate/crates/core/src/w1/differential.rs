//! Differential structures and the differential Lipschitz norm.

use serde::Serialize;

use super::lipschitz::lip_const;
use crate::error::{Error, Result};
use crate::linalg::tensor::{embed_raw, site_average_raw};
use crate::linalg::{c64, spectral_norm, CMatrix, DensityState, HermitianOp};
use crate::recovery::channel::gell_mann;
use crate::states::{energy_clusters, HypergraphHamiltonian};

/// Tolerance for the modular eigen-relation and adjoint closure.
pub const STRUCTURE_TOL: f64 = 1e-8;

/// One `L_k` with its modular exponent `ω_k` and optional locality tags.
#[derive(Clone, Debug)]
pub struct LindbladOp {
    pub op: CMatrix,
    pub omega: f64,
    /// Site `i` the operator is attached to.
    pub site: Option<usize>,
    /// Neighborhood `N_i` containing the support of the operator.
    pub support: Option<Vec<usize>>,
}

/// `{L_k, ω_k}` with `Δ_ω(L_k) = e^{−ω_k} L_k` for a full-rank base state.
#[derive(Clone, Debug)]
pub struct DifferentialStructure {
    ops: Vec<LindbladOp>,
    base: DensityState,
}

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

impl DifferentialStructure {
    /// Validates adjoint closure and the modular eigen-relation.
    pub fn new(base: DensityState, ops: Vec<LindbladOp>) -> Result<Self> {
        let dim = base.dim();
        let e = base.op().eig();
        if e.min() <= 0.0 {
            return Err(Error::NotPositiveDefinite(e.min()));
        }
        let inv = e.map_real(|l| 1.0 / l);
        for l in &ops {
            if l.op.nrows() != dim || l.op.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: l.op.nrows() });
            }
            let lhs = base.matrix() * &l.op * &inv;
            let dev = max_entry(&(lhs - &l.op * c64((-l.omega).exp(), 0.0)));
            if dev > STRUCTURE_TOL {
                return Err(Error::InvalidArgument(format!(
                    "operator is not a modular eigenvector (deviation {dev:e})"
                )));
            }
        }
        for l in &ops {
            let adj = l.op.adjoint();
            if !ops.iter().any(|m| max_entry(&(&m.op - &adj)) <= STRUCTURE_TOL) {
                return Err(Error::InvalidArgument("operators are not closed under adjoint".into()));
            }
        }
        Ok(DifferentialStructure { ops, base })
    }

    /// Local structure for the Gibbs state of a commuting Hamiltonian: every
    /// traceless single-site basis element at `i` split into Bohr components
    /// of the local Hamiltonian `H_i`, each supported on `N_i`.
    pub fn for_gibbs(h: &HypergraphHamiltonian, beta: f64) -> Result<Self> {
        if !h.is_commuting() {
            return Err(Error::NonCommuting);
        }
        let shape = h.shape();
        let base = crate::states::gibbs(h, beta)?.state;
        let basis = gell_mann(shape.local_dim());
        let mut ops = Vec::new();
        for (pos, &v) in shape.sites().iter().enumerate() {
            let hloc = h.local_hamiltonian(v)?;
            let eig = hloc.eig();
            let clusters = energy_clusters(&eig);
            let projs: Vec<(f64, CMatrix)> = clusters
                .iter()
                .map(|(en, idx)| {
                    let cols = CMatrix::from_fn(eig.vectors.nrows(), idx.len(), |r, c| eig.vectors[(r, idx[c])]);
                    (*en, &cols * cols.adjoint())
                })
                .collect();
            let support = h.neighborhood(v)?;
            for g in &basis {
                let a = embed_raw(g, shape, &[pos]);
                let mut comps: Vec<(f64, CMatrix)> = Vec::new();
                for (ei, pi) in &projs {
                    for (ej, pj) in &projs {
                        let part = pi * &a * pj;
                        if max_entry(&part) < 1e-13 {
                            continue;
                        }
                        let nu = ei - ej;
                        match comps.iter_mut().find(|(f, _)| (f - nu).abs() < 1e-9) {
                            Some((_, m)) => *m += part,
                            None => comps.push((nu, part)),
                        }
                    }
                }
                for (nu, m) in comps {
                    ops.push(LindbladOp { op: m, omega: beta * nu, site: Some(v), support: Some(support.clone()) });
                }
            }
        }
        Self::new(base, ops)
    }

    pub fn ops(&self) -> &[LindbladOp] {
        &self.ops
    }

    pub fn base_state(&self) -> &DensityState {
        &self.base
    }
}

/// `(Σ_k (e^{−ω_k/2} + e^{ω_k/2}) ‖[L_k, X]‖_∞²)^{1/2}`.
pub fn diff_lipschitz(x: &HermitianOp, d: &DifferentialStructure) -> Result<f64> {
    if x.dim() != d.base.dim() {
        return Err(Error::DimensionMismatch { expected: d.base.dim(), got: x.dim() });
    }
    let xm = x.matrix();
    let mut acc = 0.0;
    for l in &d.ops {
        let c = &l.op * xm - xm * &l.op;
        let w = (-l.omega / 2.0).exp() + (l.omega / 2.0).exp();
        acc += w * spectral_norm(&c).powi(2);
    }
    Ok(acc.sqrt())
}

/// Constants entering the comparison bound.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub lhs: f64,
    pub rhs: f64,
    pub n: usize,
    pub gamma: usize,
    pub omega_max: f64,
    pub max_op_norm: f64,
    pub max_neighborhood: usize,
    pub lipschitz_upper: f64,
}

/// `⦀∇H⦀` against `(d²−1)/d² √(n|Γ|) 2√(2e^{Ω/2}) max‖L‖ max|N_i| ‖H‖_L`,
/// with `‖H‖_L` replaced by its certified upper bound.
pub fn comparison_check(h: &HermitianOp, d: &DifferentialStructure) -> Result<ComparisonReport> {
    let shape = d.base.shape();
    if h.shape() != shape {
        return Err(Error::InvalidRegister("observable and structure live on different registers".into()));
    }
    let mut per_site = vec![0usize; shape.num_sites()];
    let mut max_nb = 0;
    let mut max_norm = 0.0f64;
    let mut omega_max = 0.0f64;
    for l in &d.ops {
        let site = l.site.ok_or_else(|| Error::MissingMetadata("operator without a site tag".into()))?;
        let support =
            l.support.as_ref().ok_or_else(|| Error::MissingMetadata("operator without a support tag".into()))?;
        let pos = shape.position(site)?;
        if !support.contains(&site) {
            return Err(Error::InvalidArgument(format!("site {site} outside its own neighborhood")));
        }
        let scale = max_entry(&l.op).max(1e-300);
        for (q, &w) in shape.sites().iter().enumerate() {
            if support.contains(&w) {
                continue;
            }
            let dev = max_entry(&(site_average_raw(&l.op, shape, q) - &l.op));
            if dev > STRUCTURE_TOL * scale.max(1.0) {
                return Err(Error::InvalidArgument(format!("operator at site {site} acts on site {w}")));
            }
        }
        per_site[pos] += 1;
        max_nb = max_nb.max(support.len());
        max_norm = max_norm.max(spectral_norm(&l.op));
        omega_max = omega_max.max(l.omega.abs());
    }
    let n = shape.num_sites();
    let gamma = per_site.iter().copied().max().unwrap_or(0);
    let dd = (shape.local_dim() * shape.local_dim()) as f64;
    let lip = lip_const(h).upper;
    let rhs = (dd - 1.0) / dd
        * ((n * gamma) as f64).sqrt()
        * 2.0
        * (2.0 * (omega_max / 2.0).exp()).sqrt()
        * max_norm
        * max_nb as f64
        * lip;
    let lhs = diff_lipschitz(h, d)?;
    Ok(ComparisonReport {
        lhs,
        rhs,
        n,
        gamma,
        omega_max,
        max_op_norm: max_norm,
        max_neighborhood: max_nb,
        lipschitz_upper: lip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_hermitian;
    use crate::linalg::{paulis, RegisterShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x_structure() -> DifferentialStructure {
        let s = RegisterShape::qubits(1).unwrap();
        let op = paulis::x(0).into_matrix();
        let ops = vec![LindbladOp { op, omega: 0.0, site: Some(0), support: Some(vec![0]) }];
        DifferentialStructure::new(DensityState::maximally_mixed(s), ops).unwrap()
    }

    #[test]
    fn single_qubit_example() {
        let d = pauli_x_structure();
        let z = paulis::z(0);
        let v = diff_lipschitz(&z, &d).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let id = paulis::id(0);
        assert!(diff_lipschitz(&id, &d).unwrap() < 1e-14);
        assert!(diff_lipschitz(&paulis::x(0), &d).unwrap() < 1e-14);
        let r = comparison_check(&z, &d).unwrap();
        assert!(r.lhs <= r.rhs);
        assert!(comparison_check(&id, &d).unwrap().lhs == 0.0);
    }

    #[test]
    fn validation() {
        let s = RegisterShape::qubits(1).unwrap();
        let base = DensityState::maximally_mixed(s.clone());
        // σ⁺ alone is not closed under adjoint
        let sp = CMatrix::from_fn(2, 2, |i, j| c64(if i == 0 && j == 1 { 1.0 } else { 0.0 }, 0.0));
        let ops = vec![LindbladOp { op: sp, omega: 0.0, site: Some(0), support: Some(vec![0]) }];
        assert!(DifferentialStructure::new(base.clone(), ops).is_err());
        // wrong exponent
        let ops = vec![LindbladOp { op: paulis::x(0).into_matrix(), omega: 1.0, site: None, support: None }];
        assert!(DifferentialStructure::new(base.clone(), ops).is_err());
        let ops = vec![LindbladOp { op: paulis::x(0).into_matrix(), omega: 0.0, site: None, support: None }];
        let d = DifferentialStructure::new(base, ops).unwrap();
        assert!(matches!(comparison_check(&paulis::z(0), &d), Err(Error::MissingMetadata(_))));
    }

    #[test]
    fn gibbs_structure_and_comparison() {
        let h = HypergraphHamiltonian::ising_chain(2, 1.0).unwrap();
        let d = DifferentialStructure::for_gibbs(&h, 0.7).unwrap();
        assert!(d.ops().iter().any(|l| l.omega.abs() > 0.1));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let x = random_hermitian(h.shape(), &mut rng);
            let r = comparison_check(&x, &d).unwrap();
            assert!(r.lhs <= r.rhs, "{} > {}", r.lhs, r.rhs);
        }
        assert!(comparison_check(&HermitianOp::identity(h.shape().clone()), &d).unwrap().lhs < 1e-12);
    }
}
