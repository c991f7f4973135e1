//! Hypergraph Hamiltonians, Gibbs and microcanonical states, entropies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, DensityState, Eigh, HermitianOp, RegisterShape};

/// Commutator norm below which two terms count as commuting.
pub const COMMUTE_TOL: f64 = 1e-10;
/// Eigenvalue threshold for support checks.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Floor on eigenvalues inside logarithms.
pub const LOG_FLOOR: f64 = 1e-14;
/// Tolerance for grouping degenerate energies.
pub const ENERGY_GROUP_TOL: f64 = 1e-9;

/// One local term `h_A` acting on the sites `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub sites: Vec<usize>,
    pub term: HermitianOp,
}

/// `H = Σ_A h_A` on a register.
#[derive(Clone, Debug, PartialEq)]
pub struct HypergraphHamiltonian {
    shape: RegisterShape,
    edges: Vec<Edge>,
    full: HermitianOp,
}

impl HypergraphHamiltonian {
    /// Each term is given on its own sites in the listed order; the labels of
    /// the term's register are ignored.
    pub fn new(shape: RegisterShape, edges: Vec<(Vec<usize>, HermitianOp)>) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        let mut full = CMatrix::zeros(shape.dim(), shape.dim());
        for (sites, term) in edges {
            if sites.is_empty() {
                return Err(Error::InvalidArgument("empty hyperedge".into()));
            }
            let local = RegisterShape::new(sites.clone(), shape.local_dim())?;
            if term.dim() != local.dim() {
                return Err(Error::DimensionMismatch { expected: local.dim(), got: term.dim() });
            }
            let term = HermitianOp::new(local, term.into_matrix())?;
            let emb = HermitianOp::embed(&term, &sites, &shape)?;
            full += emb.matrix();
            out.push(Edge { sites, term });
        }
        let full = HermitianOp::from_raw(shape.clone(), full);
        Ok(HypergraphHamiltonian { shape, edges: out, full })
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn matrix(&self) -> &HermitianOp {
        &self.full
    }

    /// `k = max |A|`.
    pub fn locality(&self) -> usize {
        self.edges.iter().map(|e| e.sites.len()).max().unwrap_or(0)
    }

    /// `N_v = {v} ∪ ⋃{A : v ∈ A}` in register order.
    pub fn neighborhood(&self, v: usize) -> Result<Vec<usize>> {
        self.shape.position(v)?;
        let mut set = vec![v];
        for e in &self.edges {
            if e.sites.contains(&v) {
                set.extend_from_slice(&e.sites);
            }
        }
        Ok(self.shape.sites().iter().copied().filter(|s| set.contains(s)).collect())
    }

    /// `N = max_v |N_v|`.
    pub fn degree(&self) -> usize {
        self.shape
            .sites()
            .iter()
            .map(|&v| self.neighborhood(v).map(|n| n.len()).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// `max_A ‖h_A‖_∞`.
    pub fn max_term_norm(&self) -> f64 {
        self.edges.iter().map(|e| e.term.op_norm()).fold(0.0, f64::max)
    }

    /// `H_v = Σ_{A ∋ v} h_A` on the full register.
    pub fn local_hamiltonian(&self, v: usize) -> Result<HermitianOp> {
        self.shape.position(v)?;
        let mut m = CMatrix::zeros(self.shape.dim(), self.shape.dim());
        for e in self.edges.iter().filter(|e| e.sites.contains(&v)) {
            m += HermitianOp::embed(&e.term, &e.sites, &self.shape)?.matrix();
        }
        Ok(HermitianOp::from_raw(self.shape.clone(), m))
    }

    pub fn embedded_terms(&self) -> Result<Vec<HermitianOp>> {
        self.edges
            .iter()
            .map(|e| HermitianOp::embed(&e.term, &e.sites, &self.shape))
            .collect()
    }

    /// True iff every pair of terms commutes within [`COMMUTE_TOL`].
    pub fn is_commuting(&self) -> bool {
        let terms = match self.embedded_terms() {
            Ok(t) => t,
            Err(_) => return false,
        };
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                let disjoint = !self.edges[i].sites.iter().any(|s| self.edges[j].sites.contains(s));
                if disjoint {
                    continue;
                }
                if terms[i].commutator_norm(&terms[j]).unwrap_or(f64::INFINITY) > COMMUTE_TOL {
                    return false;
                }
            }
        }
        true
    }

    /// Nearest-neighbour `J Σ Z_i Z_{i+1}` on an open chain of qubits.
    pub fn ising_chain(n: usize, coupling: f64) -> Result<Self> {
        Self::ising(n, coupling, false)
    }

    /// Same as [`ising_chain`](Self::ising_chain) with periodic boundary.
    pub fn ising_ring(n: usize, coupling: f64) -> Result<Self> {
        Self::ising(n, coupling, true)
    }

    fn ising(n: usize, coupling: f64, periodic: bool) -> Result<Self> {
        let shape = RegisterShape::qubits(n)?;
        let zz = crate::linalg::paulis::zz(0, 1).scale(coupling);
        let mut edges = Vec::new();
        for i in 0..n.saturating_sub(1) {
            edges.push((vec![i, i + 1], zz.clone()));
        }
        if periodic && n > 2 {
            edges.push((vec![n - 1, 0], zz.clone()));
        }
        Self::new(shape, edges)
    }

    /// Non-interacting `Σ_v h Z_v`.
    pub fn product_field(n: usize, field: f64) -> Result<Self> {
        let shape = RegisterShape::qubits(n)?;
        let z = crate::linalg::paulis::z(0).scale(field);
        Self::new(shape, (0..n).map(|v| (vec![v], z.clone())).collect())
    }
}

/// `e^{−βH}/Tr e^{−βH}` together with its Hamiltonian.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub hamiltonian: HypergraphHamiltonian,
    pub beta: f64,
    pub state: DensityState,
    pub commuting: bool,
}

pub fn gibbs(h: &HypergraphHamiltonian, beta: f64) -> Result<GibbsState> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("inverse temperature {beta} must be finite and ≥ 0")));
    }
    let state = gibbs_of(h.matrix(), beta);
    Ok(GibbsState { hamiltonian: h.clone(), beta, state, commuting: h.is_commuting() })
}

/// Gibbs state of a plain Hermitian matrix.
pub fn gibbs_of(h: &HermitianOp, beta: f64) -> DensityState {
    let e = h.eig();
    let shift = e.min();
    let w: Vec<f64> = e.values.iter().map(|&l| (-beta * (l - shift)).exp()).collect();
    let z: f64 = w.iter().sum();
    let m = weighted(&e, &w.iter().map(|x| x / z).collect::<Vec<_>>());
    DensityState::from_op_unchecked(HermitianOp::from_raw(h.shape().clone(), m))
}

fn weighted(e: &Eigh, w: &[f64]) -> CMatrix {
    let mut u = e.vectors.clone();
    for (j, &x) in w.iter().enumerate() {
        for v in u.column_mut(j).iter_mut() {
            *v *= x;
        }
    }
    u * e.vectors.adjoint()
}

/// Umegaki relative entropy; `+∞` when `supp ρ ⊄ supp ω`.
pub fn rel_entropy(rho: &DensityState, omega: &DensityState) -> f64 {
    let eo = omega.op().eig();
    if !support_contained(rho, &eo) {
        return f64::INFINITY;
    }
    let er = rho.op().eig();
    let neg_entropy: f64 = er.values.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum();
    let log_omega = eo.map_real(|l| l.max(LOG_FLOOR).ln());
    let cross: f64 = rho
        .matrix()
        .iter()
        .zip(log_omega.iter())
        .map(|(a, b)| (a * b.conj()).re)
        .sum();
    (neg_entropy - cross).max(0.0)
}

fn support_contained(rho: &DensityState, eo: &Eigh) -> bool {
    let n = eo.values.len();
    let mut leak = 0.0;
    for j in 0..n {
        if eo.values[j] <= SUPPORT_TOL {
            let v = eo.vectors.column(j);
            leak += (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        }
    }
    leak <= SUPPORT_TOL
}

/// `ln inf{λ : ρ ≤ λω}`; `+∞` on support violation.
pub fn max_divergence(rho: &DensityState, omega: &DensityState) -> f64 {
    let eo = omega.op().eig();
    if !support_contained(rho, &eo) {
        return f64::INFINITY;
    }
    let keep: Vec<usize> = (0..eo.values.len()).filter(|&j| eo.values[j] > SUPPORT_TOL).collect();
    let n = rho.dim();
    let mut v = CMatrix::zeros(n, keep.len());
    for (k, &j) in keep.iter().enumerate() {
        let s = 1.0 / eo.values[j].sqrt();
        v.set_column(k, &(eo.vectors.column(j) * c64(s, 0.0)));
    }
    let m = v.adjoint() * rho.matrix() * &v;
    let lmax = crate::linalg::eigh(&m).max();
    lmax.ln().max(0.0)
}

fn check_partition(shape: &RegisterShape, parts: &[&[usize]]) -> Result<()> {
    let mut seen: Vec<usize> = Vec::new();
    for p in parts {
        for &s in p.iter() {
            if !shape.contains(s) {
                return Err(Error::InvalidPartition(format!("site {s} not in register")));
            }
            if seen.contains(&s) {
                return Err(Error::InvalidPartition(format!("site {s} listed twice")));
            }
            seen.push(s);
        }
    }
    if seen.len() != shape.num_sites() {
        return Err(Error::InvalidPartition("parts do not cover the register".into()));
    }
    Ok(())
}

fn marginal_entropy(rho: &DensityState, sites: &[usize]) -> Result<f64> {
    if sites.is_empty() {
        return Ok(0.0);
    }
    Ok(rho.marginal(sites)?.entropy())
}

/// `I(A;B) = S(A) + S(B) − S(AB)` for a bipartition of the register.
pub fn mutual_info(rho: &DensityState, a: &[usize], b: &[usize]) -> Result<f64> {
    check_partition(rho.shape(), &[a, b])?;
    Ok(marginal_entropy(rho, a)? + marginal_entropy(rho, b)? - rho.entropy())
}

/// `I(A;B|C) = S(AC) + S(BC) − S(ABC) − S(C)` for a tripartition.
pub fn cond_mutual_info(rho: &DensityState, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    check_partition(rho.shape(), &[a, b, c])?;
    cmi_unchecked(rho, a, b, c)
}

/// Conditional mutual information of disjoint subsets that need not cover
/// the register.
pub fn cmi_of_subsets(rho: &DensityState, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let all: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    let sub = rho.marginal(&all)?;
    cond_mutual_info(&sub, a, b, c)
}

fn cmi_unchecked(rho: &DensityState, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let ac: Vec<usize> = a.iter().chain(c).copied().collect();
    let bc: Vec<usize> = b.iter().chain(c).copied().collect();
    Ok(marginal_entropy(rho, &ac)? + marginal_entropy(rho, &bc)? - rho.entropy() - marginal_entropy(rho, c)?)
}

/// Eigenvalue clusters of `H` with tolerance [`ENERGY_GROUP_TOL`]:
/// (representative energy, eigenvector column indices), descending.
pub fn energy_clusters(e: &Eigh) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (j, &l) in e.values.iter().enumerate() {
        match out.last_mut() {
            Some((_, idx)) if (e.values[*idx.last().unwrap()] - l).abs() <= ENERGY_GROUP_TOL => idx.push(j),
            _ => out.push((l, vec![j])),
        }
    }
    for (rep, idx) in out.iter_mut() {
        *rep = idx.iter().map(|&j| e.values[j]).sum::<f64>() / idx.len() as f64;
    }
    out
}

/// Spectral projector onto the shell `(E − Δ, E]` and its rank.
pub fn shell_projector(h: &HermitianOp, energy: f64, delta: f64) -> Result<(CMatrix, usize)> {
    shell_projector_eig(&h.eig(), energy, delta)
}

pub(crate) fn shell_projector_eig(e: &Eigh, energy: f64, delta: f64) -> Result<(CMatrix, usize)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("shell width {delta} must be positive")));
    }
    let mut cols = Vec::new();
    for (rep, idx) in energy_clusters(e) {
        if rep <= energy + ENERGY_GROUP_TOL && rep > energy - delta + ENERGY_GROUP_TOL {
            cols.extend(idx);
        }
    }
    if cols.is_empty() {
        return Err(Error::EmptyShell { lower: energy - delta, upper: energy });
    }
    let n = e.vectors.nrows();
    let mut v = CMatrix::zeros(n, cols.len());
    for (k, &j) in cols.iter().enumerate() {
        v.set_column(k, &e.vectors.column(j));
    }
    Ok((&v * v.adjoint(), cols.len()))
}

/// `P(E, Δ)/Tr P(E, Δ)`.
pub fn microcanonical(h: &HypergraphHamiltonian, energy: f64, delta: f64) -> Result<DensityState> {
    let (p, count) = shell_projector(h.matrix(), energy, delta)?;
    let op = HermitianOp::from_raw(h.shape().clone(), p * c64(1.0 / count as f64, 0.0));
    Ok(DensityState::from_op_unchecked(op))
}

/// `g(t) = (t+1)ln(t+1) − t ln t`.
pub fn continuity_g(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (t + 1.0) * (t + 1.0).ln() - t * t.ln()
}

/// `|S(ρ) − S(σ)|` and `g(w1) + w1 ln(d²n)`.
pub fn entropy_continuity_gap(rho: &DensityState, sigma: &DensityState, w1: f64) -> Result<(f64, f64)> {
    if rho.shape() != sigma.shape() {
        return Err(Error::InvalidRegister("states live on different registers".into()));
    }
    let n = rho.shape().num_sites() as f64;
    let d = rho.shape().local_dim() as f64;
    let lhs = (rho.entropy() - sigma.entropy()).abs();
    let rhs = continuity_g(w1) + w1 * (d * d * n).ln();
    Ok((lhs, rhs))
}

/// `Tr[ρ H]`.
pub fn energy(rho: &DensityState, h: &HermitianOp) -> f64 {
    rho.op().inner(h)
}

/// Finds λ ∈ [0, 1] with `Tr[(λρ + (1−λ)τ) H] = target` by bisection.
pub fn match_energy_by_mixing(
    rho: &DensityState,
    partner: &DensityState,
    h: &HermitianOp,
    target: f64,
) -> Result<(DensityState, f64)> {
    let er = energy(rho, h);
    let ep = energy(partner, h);
    let tol = 1e-12 * (1.0 + h.op_norm());
    if (er - target).abs() <= tol {
        return Ok((rho.clone(), 1.0));
    }
    if (er - target).signum() == (ep - target).signum() && (ep - target).abs() > tol {
        return Err(Error::EnergyMismatch((er - target).abs().min((ep - target).abs())));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let e = mid * er + (1.0 - mid) * ep;
        if (e - target).signum() == (ep - target).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    Ok((rho.mix(partner, lambda)?, lambda))
}

/// Mixes `ρ` with an extreme eigenstate of `H` so that its energy equals
/// `target`. Mixing with a Gibbs state alone cannot move the energy to the
/// Gibbs value, so the partner is taken from the opposite side of the
/// spectrum.
pub fn match_energy(rho: &DensityState, h: &HermitianOp, target: f64) -> Result<(DensityState, f64)> {
    let e = h.eig();
    let er = energy(rho, h);
    let col = if er > target { e.values.len() - 1 } else { 0 };
    let v: Vec<_> = e.vectors.column(col).iter().copied().collect();
    let partner = DensityState::pure(h.shape().clone(), &v)?;
    match_energy_by_mixing(rho, &partner, h, target)
}

/// Summary of a Hamiltonian used in reports.
#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianSummary {
    pub num_sites: usize,
    pub local_dim: usize,
    pub num_edges: usize,
    pub locality: usize,
    pub degree: usize,
    pub max_term_norm: f64,
    pub commuting: bool,
}

impl From<&HypergraphHamiltonian> for HamiltonianSummary {
    fn from(h: &HypergraphHamiltonian) -> Self {
        HamiltonianSummary {
            num_sites: h.shape().num_sites(),
            local_dim: h.shape().local_dim(),
            num_edges: h.edges().len(),
            locality: h.locality(),
            degree: h.degree(),
            max_term_norm: h.max_term_norm(),
            commuting: h.is_commuting(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;
    use crate::linalg::random::{random_density, random_pure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: usize) -> RegisterShape {
        RegisterShape::qubits(n).unwrap()
    }

    fn ket0() -> DensityState {
        DensityState::pure(q(1), &[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn hamiltonian_metadata() {
        let h = HypergraphHamiltonian::ising_chain(4, 1.0).unwrap();
        assert_eq!(h.locality(), 2);
        assert_eq!(h.degree(), 3);
        assert_eq!(h.neighborhood(0).unwrap(), vec![0, 1]);
        assert_eq!(h.neighborhood(2).unwrap(), vec![1, 2, 3]);
        assert!(h.is_commuting());
        let ring = HypergraphHamiltonian::ising_ring(3, 1.0).unwrap();
        assert_eq!(ring.neighborhood(0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_edges() {
        let s = q(2);
        assert!(HypergraphHamiltonian::new(s.clone(), vec![(vec![], paulis::z(0))]).is_err());
        assert!(HypergraphHamiltonian::new(s.clone(), vec![(vec![3], paulis::z(0))]).is_err());
        assert!(HypergraphHamiltonian::new(s, vec![(vec![0, 1], paulis::z(0))]).is_err());
    }

    #[test]
    fn non_commuting_detected() {
        let s = q(2);
        let h = HypergraphHamiltonian::new(
            s,
            vec![(vec![0, 1], paulis::zz(0, 1)), (vec![1], paulis::x(0))],
        )
        .unwrap();
        assert!(!h.is_commuting());
    }

    #[test]
    fn gibbs_examples() {
        let h = HypergraphHamiltonian::new(q(1), vec![(vec![0], paulis::z(0))]).unwrap();
        let g = gibbs(&h, 1.0).unwrap();
        let z = 2.0 * 1f64.cosh();
        let want = HermitianOp::diag(q(1), &[(-1f64).exp() / z, 1f64.exp() / z]).unwrap();
        assert!(g.state.op().max_abs_diff(&want) < 1e-14);
        let g0 = gibbs(&h, 0.0).unwrap();
        assert!(g0.state.op().max_abs_diff(&HermitianOp::identity(q(1)).scale(0.5)) < 1e-15);
        assert!(gibbs(&h, -1.0).is_err());
        // large β·‖H‖ stays finite
        let cold = gibbs(&h, 1e4).unwrap();
        assert!((cold.state.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let mixed = DensityState::maximally_mixed(q(1));
        assert!(rel_entropy(&mixed, &mixed).abs() < 1e-14);
        assert!((rel_entropy(&ket0(), &mixed) - 2f64.ln()).abs() < 1e-12);
        assert!(rel_entropy(&mixed, &ket0()).is_infinite());
        assert!((max_divergence(&ket0(), &mixed) - 2f64.ln()).abs() < 1e-12);
        assert!(max_divergence(&mixed, &ket0()).is_infinite());
        assert!(max_divergence(&mixed, &mixed).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityState::pure(q(2), &[c64(r, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(r, 0.0)]).unwrap();
        assert!((mutual_info(&bell, &[0], &[1]).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_density(&RegisterShape::new(vec![0], 2).unwrap(), 2, &mut rng);
        let b = random_density(&RegisterShape::new(vec![1], 2).unwrap(), 2, &mut rng);
        let c = random_density(&RegisterShape::new(vec![2], 2).unwrap(), 2, &mut rng);
        let abc = DensityState::product(&[a, b, c]).unwrap();
        assert!(cond_mutual_info(&abc, &[0], &[2], &[1]).unwrap().abs() < 1e-12);
        assert!(mutual_info(&abc, &[0], &[1, 2]).unwrap().abs() < 1e-12);
        assert!(matches!(mutual_info(&abc, &[0], &[1]), Err(Error::InvalidPartition(_))));
        assert!(matches!(mutual_info(&abc, &[0, 1], &[1, 2]), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn microcanonical_examples() {
        let hz = HypergraphHamiltonian::new(q(1), vec![(vec![0], paulis::z(0))]).unwrap();
        let m = microcanonical(&hz, 1.0, 0.5).unwrap();
        assert!(m.op().max_abs_diff(ket0().op()) < 1e-14);
        let full = microcanonical(&hz, 1.0, 5.0).unwrap();
        assert!(full.op().max_abs_diff(&HermitianOp::identity(q(1)).scale(0.5)) < 1e-14);
        let hzz = HypergraphHamiltonian::new(q(2), vec![(vec![0, 1], paulis::zz(0, 1))]).unwrap();
        let m2 = microcanonical(&hzz, 1.0, 0.5).unwrap();
        let want = HermitianOp::diag(q(2), &[0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(m2.op().max_abs_diff(&want) < 1e-14);
        assert!(matches!(microcanonical(&hz, 0.0, 0.5), Err(Error::EmptyShell { .. })));
        // the shell is half open: E − Δ itself is excluded
        assert!(matches!(microcanonical(&hz, 1.0, 2.0).map(|s| s.op().trace()), Ok(_)));
        let only_top = microcanonical(&hz, 1.0, 2.0).unwrap();
        assert!(only_top.op().max_abs_diff(ket0().op()) < 1e-14);
    }

    #[test]
    fn continuity_example() {
        let mixed = DensityState::maximally_mixed(q(1));
        let (l, r) = entropy_continuity_gap(&ket0(), &mixed, 0.5).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
        let g = 1.5 * 1.5f64.ln() - 0.5 * 0.5f64.ln();
        assert!((r - (g + 0.5 * 4f64.ln())).abs() < 1e-12);
        assert!((r - 1.648).abs() < 1e-3);
        let (l0, r0) = entropy_continuity_gap(&mixed, &mixed, 0.0).unwrap();
        assert_eq!((l0, r0), (0.0, 0.0));
    }

    #[test]
    fn gibbs_maximizes_entropy_at_fixed_energy() {
        let h = HypergraphHamiltonian::ising_chain(3, 1.0).unwrap();
        let w = gibbs(&h, 0.7).unwrap().state;
        let target = energy(&w, h.matrix());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let rho = random_density(h.shape(), 8, &mut rng);
            let (m, _) = match_energy(&rho, h.matrix(), target).unwrap();
            assert!((energy(&m, h.matrix()) - target).abs() < 1e-10);
            assert!(w.entropy() >= m.entropy() - 1e-12);
        }
        let pure = random_pure(h.shape(), &mut rng);
        assert!(match_energy_by_mixing(&pure, &pure, h.matrix(), 1e3).is_err());
    }

    #[test]
    fn microcanonical_commutes_with_h() {
        let h = HypergraphHamiltonian::ising_ring(3, 1.0).unwrap();
        let m = microcanonical(&h, -1.0, 2.5).unwrap();
        assert!(m.op().commutator_norm(h.matrix()).unwrap() <= 1e-10);
    }
}
