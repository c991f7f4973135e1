//! Rotated Petz recovery maps `Φ_{A→AB}` and the channels `Ψ_v`, `Ψ`.
//!
//! With `ω_AB = Σ a_m |u_m⟩⟨u_m|` and `ω_A = Σ b_k |v_k⟩⟨v_k|`, every
//! quadrature term `M_t (Y ⊗ I) M_t†` is diagonal in the pair of eigenbases
//! up to a phase `e^{ixt}`, so the whole t-average reduces to a scalar
//! kernel `φ(x) = Σ_t w_t cos(xt)` evaluated on differences of log
//! eigenvalues. The result is the same map as summing the terms directly.

use nalgebra::DMatrix;

use super::channel::{ChannelRep, LinearMap, MAX_CHOI_DIM};
use crate::error::{Error, Result};
use crate::linalg::funcs::ClippedSpectrum;
use crate::linalg::tensor::permute_raw;
use crate::linalg::{mu0_quadrature, CMatrix, DensityState, QuadratureRule, RegisterShape, C64};
use crate::states::GibbsState;

/// Default quadrature tolerance for recovery maps.
pub const DEFAULT_TOL: f64 = 1e-8;

/// How the t-average is evaluated.
#[derive(Clone, Debug)]
pub enum TimeAverage {
    /// Weighted sum over the nodes of a μ0 quadrature rule, with the weights
    /// renormalized to sum to one.
    Quadrature(QuadratureRule),
    /// The characteristic function `x / sinh x` of μ0 in closed form.
    ClosedForm,
}

impl TimeAverage {
    /// `φ(u_i + s_j)` for all pairs, as a `|u| × |s|` table.
    fn table(&self, u: &[f64], s: &[f64]) -> DMatrix<f64> {
        match self {
            TimeAverage::ClosedForm => DMatrix::from_fn(u.len(), s.len(), |i, j| x_over_sinh(u[i] + s[j])),
            TimeAverage::Quadrature(rule) => {
                // cos((u+s)t) = cos(ut)cos(st) − sin(ut)sin(st)
                let total: f64 = rule.weights.iter().sum();
                let nt = rule.nodes.len();
                let left = DMatrix::from_fn(u.len(), 2 * nt, |i, c| {
                    let (t, w) = (rule.nodes[c % nt], rule.weights[c % nt] / total);
                    if c < nt {
                        w * (u[i] * t).cos()
                    } else {
                        -w * (u[i] * t).sin()
                    }
                });
                let right = DMatrix::from_fn(2 * nt, s.len(), |c, j| {
                    let t = rule.nodes[c % nt];
                    if c < nt {
                        (s[j] * t).cos()
                    } else {
                        (s[j] * t).sin()
                    }
                });
                left * right
            }
        }
    }
}

/// `x / sinh x` with the removable singularity filled in.
pub fn x_over_sinh(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else if x.abs() > 700.0 {
        0.0
    } else {
        x / x.sinh()
    }
}

/// Precomputed spectral data of `Φ_{A→AB}` with the output in `(A, B)`
/// tensor order.
struct Kernel {
    da: usize,
    db: usize,
    u: CMatrix,
    v: CMatrix,
    w: CMatrix,
    /// `c[((m·D + n)·dA + k)·dA + l]`
    coef: Vec<f64>,
}

impl Kernel {
    fn new(omega_ab: &ClippedSpectrum, omega_a: &ClippedSpectrum, da: usize, db: usize, avg: &TimeAverage) -> Self {
        let d = da * db;
        let a = &omega_ab.eig.values;
        let b = &omega_a.eig.values;
        let u = omega_ab.eig.vectors.clone();
        let v = omega_a.eig.vectors.clone();
        let w = u.adjoint() * v.kronecker(&CMatrix::identity(db, db));
        let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
        let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
        let udiff: Vec<f64> = (0..d * d).map(|i| 0.5 * (la[i % d] - la[i / d])).collect();
        let sdiff: Vec<f64> = (0..da * da).map(|i| 0.5 * (lb[i / da] - lb[i % da])).collect();
        let phi = avg.table(&udiff, &sdiff);
        let mut coef = vec![0.0; d * d * da * da];
        for m in 0..d {
            for n in 0..d {
                for k in 0..da {
                    for l in 0..da {
                        let scale = (a[m] * a[n] / (b[k] * b[l])).sqrt();
                        coef[((m * d + n) * da + k) * da + l] = scale * phi[(m * d + n, k * da + l)];
                    }
                }
            }
        }
        Kernel { da, db, u, v, w, coef }
    }

    fn dim(&self) -> usize {
        self.da * self.db
    }

    /// Output in the ω_AB eigenbasis for the input `|v_k⟩⟨v_l|`.
    fn eigen_block(&self, k: usize, l: usize, out: &mut CMatrix) {
        let d = self.dim();
        let (da, db) = (self.da, self.db);
        for n in 0..d {
            for m in 0..d {
                let mut g = C64::new(0.0, 0.0);
                for beta in 0..db {
                    g += self.w[(m, k * db + beta)] * self.w[(n, l * db + beta)].conj();
                }
                out[(m, n)] = g * self.coef[((m * d + n) * da + k) * da + l];
            }
        }
    }

    /// Applies the map to a matrix on A; output in `(A, B)` order.
    fn apply(&self, y: &CMatrix) -> CMatrix {
        let d = self.dim();
        let yt = self.v.adjoint() * y * &self.v;
        let mut r = CMatrix::zeros(d, d);
        let mut block = CMatrix::zeros(d, d);
        for l in 0..self.da {
            for k in 0..self.da {
                let c = yt[(k, l)];
                if c.norm() == 0.0 {
                    continue;
                }
                self.eigen_block(k, l, &mut block);
                r += &block * c;
            }
        }
        &self.u * r * self.u.adjoint()
    }

    /// Choi matrix with output in `(A, B)` order.
    fn choi(&self) -> CMatrix {
        let d = self.dim();
        let da = self.da;
        let mut f = Vec::with_capacity(da * da);
        let mut block = CMatrix::zeros(d, d);
        for k in 0..da {
            for l in 0..da {
                self.eigen_block(k, l, &mut block);
                f.push(&self.u * &block * self.u.adjoint());
            }
        }
        // Φ(|i⟩⟨j|) = Σ_kl conj(V_ik) V_jl F^{kl}
        let mut h = Vec::with_capacity(da * da);
        for i in 0..da {
            for l in 0..da {
                let mut acc = CMatrix::zeros(d, d);
                for k in 0..da {
                    acc += &f[k * da + l] * self.v[(i, k)].conj();
                }
                h.push(acc);
            }
        }
        let mut j = CMatrix::zeros(da * d, da * d);
        for jj in 0..da {
            for i in 0..da {
                let mut img = CMatrix::zeros(d, d);
                for l in 0..da {
                    img += &h[i * da + l] * self.v[(jj, l)];
                }
                j.view_mut((i * d, jj * d), (d, d)).copy_from(&img);
            }
        }
        j
    }
}

/// Rotated Petz recovery map `Φ_{A→AB}` built from a reference state.
#[derive(Clone, Debug)]
pub struct RecoveryMap {
    pub base: DensityState,
    pub kept: Vec<usize>,
    pub recovered: Vec<usize>,
    pub quadrature: Option<QuadratureRule>,
    /// True when a marginal of ω had eigenvalues raised to the clip floor.
    pub clipped: bool,
    channel: ChannelRep,
}

impl RecoveryMap {
    pub fn channel(&self) -> &ChannelRep {
        &self.channel
    }

    pub fn in_shape(&self) -> &RegisterShape {
        self.channel.in_shape()
    }

    pub fn out_shape(&self) -> &RegisterShape {
        self.channel.out_shape()
    }

    /// Recovers a state on `A ∪ B` from a state on `A`.
    pub fn apply(&self, rho_a: &DensityState) -> Result<DensityState> {
        self.channel.apply_state(rho_a)
    }

    /// `‖Φ(ω_A) − ω_AB‖_1`.
    pub fn fixed_point_error(&self) -> Result<f64> {
        let mut sites = self.kept.clone();
        sites.extend(&self.recovered);
        let target = self.base.marginal(&sites)?;
        let input = if self.kept.is_empty() {
            DensityState::maximally_mixed(RegisterShape::trivial(self.base.shape().local_dim()))
        } else {
            self.base.marginal(&self.kept)?
        };
        let out = self.apply(&input)?;
        Ok((out.op() - &target.op().permuted(out.shape())?).trace_norm())
    }
}

/// Builds `Φ_{A→AB}` with a μ0 quadrature rule of tolerance `tol`.
pub fn petz_rotated(omega: &DensityState, a: &[usize], b: &[usize], tol: f64) -> Result<RecoveryMap> {
    let rule = mu0_quadrature(tol)?;
    petz_with(omega, a, b, TimeAverage::Quadrature(rule))
}

/// Builds `Φ_{A→AB}` with an explicit time-average rule.
pub fn petz_with(omega: &DensityState, a: &[usize], b: &[usize], avg: TimeAverage) -> Result<RecoveryMap> {
    let shape = omega.shape();
    shape.positions(a)?;
    shape.positions(b)?;
    if a.iter().any(|s| b.contains(s)) {
        return Err(Error::InvalidPartition("kept and recovered sites overlap".into()));
    }
    if b.is_empty() {
        return Err(Error::InvalidPartition("no sites to recover".into()));
    }
    let mut ab: Vec<usize> = a.to_vec();
    ab.extend_from_slice(b);
    let a_shape = if a.is_empty() { RegisterShape::trivial(shape.local_dim()) } else { shape.sub_shape(a)? };
    let b_shape = shape.sub_shape(b)?;
    let ab_shape = shape.sub_shape(&ab)?;
    let split = a_shape.join(&b_shape)?;
    let omega_ab = omega.marginal(&ab)?;
    let omega_ab_split = omega_ab.op().permuted(&split)?;
    let omega_a = if a.is_empty() {
        crate::linalg::HermitianOp::identity(a_shape.clone())
    } else {
        omega.marginal(a)?.into_op()
    };
    let spec_ab = ClippedSpectrum::new(&omega_ab_split);
    let spec_a = ClippedSpectrum::new(&omega_a);
    let clipped = spec_ab.clipped || spec_a.clipped;
    let kernel = Kernel::new(&spec_ab, &spec_a, a_shape.dim(), b_shape.dim(), &avg);
    let map = if a_shape.dim() * ab_shape.dim() <= MAX_CHOI_DIM {
        let choi_split = kernel.choi();
        let choi = permute_choi_output(&choi_split, a_shape.dim(), &split, &ab_shape);
        LinearMap::from_choi(a_shape.clone(), ab_shape.clone(), choi)?
    } else {
        let (split2, ab2) = (split.clone(), ab_shape.clone());
        LinearMap::from_fn(a_shape.clone(), ab_shape.clone(), move |y| permute_raw(&kernel.apply(y), &split2, &ab2))
    };
    let quadrature = match avg {
        TimeAverage::Quadrature(r) => Some(r),
        TimeAverage::ClosedForm => None,
    };
    Ok(RecoveryMap {
        base: omega.clone(),
        kept: a_shape.sites().to_vec(),
        recovered: b_shape.sites().to_vec(),
        quadrature,
        clipped,
        channel: ChannelRep::trusted(map),
    })
}

/// Reorders the output factor of a Choi matrix.
fn permute_choi_output(j: &CMatrix, din: usize, from: &RegisterShape, to: &RegisterShape) -> CMatrix {
    if from == to {
        return j.clone();
    }
    let pos: Vec<usize> = to.sites().iter().map(|&s| from.position(s).expect("same sites")).collect();
    let idx = from.offsets(&pos);
    let dout = idx.len();
    CMatrix::from_fn(din * dout, din * dout, |r, c| {
        let (i, a) = (r / dout, r % dout);
        let (jj, b) = (c / dout, c % dout);
        j[(i * dout + idx[a], jj * dout + idx[b])]
    })
}

/// `Ψ_v = Φ_{v^c → V} ∘ Tr_v` for a Gibbs state.
pub fn psi_v(omega: &GibbsState, v: usize, tol: f64) -> Result<ChannelRep> {
    psi_v_of(&omega.state, v, tol)
}

/// `Ψ_v` for an arbitrary full-rank state.
pub fn psi_v_of(omega: &DensityState, v: usize, tol: f64) -> Result<ChannelRep> {
    let shape = omega.shape().clone();
    let pos = shape.position(v)?;
    let rest: Vec<usize> = shape.sites().iter().copied().filter(|&s| s != v).collect();
    let phi = petz_rotated(omega, &rest, &[v], tol)?;
    let dim = shape.dim();
    if dim * dim > MAX_CHOI_DIM {
        let tr = ChannelRep::partial_trace(shape, &[v])?;
        return Ok(ChannelRep::trusted(phi.channel().map().compose(tr.map())?));
    }
    let jphi = phi.channel().choi()?;
    let d = shape.local_dim();
    let stride = shape.strides()[pos];
    let reduce = |i: usize| -> (usize, usize) {
        let digit = (i / stride) % d;
        let hi = i / (stride * d);
        let lo = i % stride;
        (digit, hi * stride + lo)
    };
    let mut j = CMatrix::zeros(dim * dim, dim * dim);
    for jj in 0..dim {
        let (dj, rj) = reduce(jj);
        for i in 0..dim {
            let (di, ri) = reduce(i);
            if di != dj {
                continue;
            }
            for b in 0..dim {
                for a in 0..dim {
                    j[(i * dim + a, jj * dim + b)] = jphi[(ri * dim + a, rj * dim + b)];
                }
            }
        }
    }
    Ok(ChannelRep::trusted(LinearMap::from_choi(shape.clone(), shape, j)?))
}

/// `Ψ = (1/n) Σ_v Ψ_v`.
pub fn psi_avg(omega: &GibbsState, tol: f64) -> Result<ChannelRep> {
    let sites = omega.state.shape().sites().to_vec();
    let parts = sites.iter().map(|&v| psi_v(omega, v, tol)).collect::<Result<Vec<_>>>()?;
    let w = 1.0 / parts.len() as f64;
    let weighted: Vec<(f64, &ChannelRep)> = parts.iter().map(|c| (w, c)).collect();
    ChannelRep::mixture(&weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::funcs::mat_power;
    use crate::linalg::random::random_density;
    use crate::linalg::{c64, HermitianOp};
    use crate::states::{gibbs, HypergraphHamiltonian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct node-by-node evaluation of Σ_t w_t M_t (Y ⊗ I) M_t†.
    fn naive_apply(omega: &DensityState, a: &[usize], b: &[usize], rule: &QuadratureRule, y: &CMatrix) -> CMatrix {
        let shape = omega.shape();
        let a_shape = shape.sub_shape(a).unwrap();
        let b_shape = shape.sub_shape(b).unwrap();
        let split = a_shape.join(&b_shape).unwrap();
        let mut ab = a.to_vec();
        ab.extend(b);
        let wab = omega.marginal(&ab).unwrap().op().permuted(&split).unwrap();
        let wa = omega.marginal(a).unwrap().into_op();
        let db = b_shape.dim();
        let total: f64 = rule.weights.iter().sum();
        let mut out = CMatrix::zeros(split.dim(), split.dim());
        let yi = y.kronecker(&CMatrix::identity(db, db));
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let p = mat_power(&wab, c64(0.5, -0.5 * t)).unwrap();
            let q = mat_power(&wa, c64(-0.5, 0.5 * t)).unwrap().kronecker(&CMatrix::identity(db, db));
            let m = p * q;
            out += (&m * &yi * m.adjoint()) * c64(w / total, 0.0);
        }
        let ab_shape = shape.sub_shape(&ab).unwrap();
        permute_raw(&out, &split, &ab_shape)
    }

    #[test]
    fn agrees_with_naive_quadrature_and_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = RegisterShape::qubits(3).unwrap();
        let omega = random_density(&s, 8, &mut rng);
        let rule = mu0_quadrature(1e-6).unwrap();
        let phi = petz_with(&omega, &[2], &[0], TimeAverage::Quadrature(rule.clone())).unwrap();
        let exact = petz_with(&omega, &[2], &[0], TimeAverage::ClosedForm).unwrap();
        let y = random_density(&RegisterShape::new(vec![2], 2).unwrap(), 2, &mut rng);
        let fast = phi.channel().map().apply_matrix(y.matrix());
        let slow = naive_apply(&omega, &[2], &[0], &rule, y.matrix());
        assert!((&fast - &slow).norm() < 1e-12, "{}", (&fast - &slow).norm());
        let ex = exact.channel().map().apply_matrix(y.matrix());
        assert!((&fast - &ex).norm() < 1e-6);
    }

    #[test]
    fn cptp_and_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = RegisterShape::qubits(3).unwrap();
        let omega = random_density(&s, 8, &mut rng);
        let phi = petz_rotated(&omega, &[0, 2], &[1], 1e-8).unwrap();
        assert_eq!(phi.out_shape().sites(), &[0, 1, 2]);
        assert!(ChannelRep::new(phi.channel().map().clone()).is_ok());
        assert!(phi.fixed_point_error().unwrap() < 1e-7);
        assert!(!phi.clipped);
    }

    #[test]
    fn product_base_appends_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let wa = random_density(&RegisterShape::new(vec![0], 2).unwrap(), 2, &mut rng);
        let wb = random_density(&RegisterShape::new(vec![1], 2).unwrap(), 2, &mut rng);
        let omega = DensityState::product(&[wa, wb.clone()]).unwrap();
        let phi = petz_rotated(&omega, &[0], &[1], 1e-8).unwrap();
        let rho = random_density(&RegisterShape::new(vec![0], 2).unwrap(), 2, &mut rng);
        let out = phi.apply(&rho).unwrap();
        let want = rho.kron(&wb).unwrap();
        assert!(out.op().max_abs_diff(want.op()) < 1e-9);
    }

    #[test]
    fn classical_conditional_kernel() {
        let s = RegisterShape::qubits(2).unwrap();
        let p = [0.1, 0.2, 0.3, 0.4];
        let omega = DensityState::new(HermitianOp::diag(s, &p).unwrap()).unwrap();
        let phi = petz_rotated(&omega, &[0], &[1], 1e-8).unwrap();
        let px = [p[0] + p[1], p[2] + p[3]];
        for x in 0..2 {
            let mut e = CMatrix::zeros(2, 2);
            e[(x, x)] = c64(1.0, 0.0);
            let img = phi.channel().map().apply_matrix(&e);
            for y in 0..2 {
                let want = p[2 * x + y] / px[x];
                assert!((img[(2 * x + y, 2 * x + y)].re - want).abs() < 1e-7);
            }
            let off: f64 = (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).filter(|(r, c)| r != c).map(|(r, c)| img[(r, c)].norm()).sum();
            assert!(off < 1e-12);
        }
    }

    #[test]
    fn psi_at_infinite_temperature_reinserts_mixed() {
        let h = HypergraphHamiltonian::ising_chain(3, 1.0).unwrap();
        let g = gibbs(&h, 0.0).unwrap();
        let psi = psi_v(&g, 1, 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(h.shape(), 8, &mut rng);
        let out = psi.apply(rho.op()).unwrap();
        let want = crate::recovery::ChannelRep::local_replacer(
            h.shape().clone(),
            &DensityState::maximally_mixed(RegisterShape::new(vec![1], 2).unwrap()),
        )
        .unwrap()
        .apply(rho.op())
        .unwrap();
        assert!(out.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn psi_fixed_points() {
        let h = HypergraphHamiltonian::ising_chain(3, 1.0).unwrap();
        let g = gibbs(&h, 0.4).unwrap();
        let avg = psi_avg(&g, 1e-8).unwrap();
        assert!(ChannelRep::new(avg.map().clone()).is_ok());
        let out = avg.apply(g.state.op()).unwrap();
        assert!((&out - g.state.op()).trace_norm() < 1e-7);
        for v in 0..3 {
            let p = psi_v(&g, v, 1e-8).unwrap();
            assert!((&p.apply(g.state.op()).unwrap() - g.state.op()).trace_norm() < 1e-7);
        }
    }

    #[test]
    fn psi_is_local_for_commuting_hamiltonians() {
        let h = HypergraphHamiltonian::ising_chain(4, 1.0).unwrap();
        let g = gibbs(&h, 0.3).unwrap();
        let p0 = psi_v(&g, 0, 1e-8).unwrap();
        // N_0 = {0, 1}; sites 2, 3 are untouched
        let dev = crate::recovery::channel::identity_factor_deviation(p0.map(), &[2, 3]).unwrap();
        assert!(dev < 1e-7, "{dev}");
        let dev_bad = crate::recovery::channel::identity_factor_deviation(p0.map(), &[1, 2, 3]).unwrap();
        assert!(dev_bad > 1e-3);
    }

    #[test]
    fn empty_kept_set_is_a_replacer() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = RegisterShape::qubits(2).unwrap();
        let omega = random_density(&s, 4, &mut rng);
        let phi = petz_rotated(&omega, &[], &[0, 1], 1e-8).unwrap();
        let one = DensityState::maximally_mixed(RegisterShape::trivial(2));
        assert!(phi.apply(&one).unwrap().op().max_abs_diff(omega.op()) < 1e-12);
    }
}
