//! Linear maps on operators stored as Choi matrices.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::tensor::{permute_raw, ptrace_raw};
use crate::linalg::{c64, eigh, CMatrix, DensityState, HermitianOp, RegisterShape, C64};

/// Largest `dim(in)·dim(out)` for which a Choi matrix is materialized.
pub const MAX_CHOI_DIM: usize = 1 << 12;
/// Tolerances for accepting a map as CPTP.
pub const CP_TOL: f64 = 1e-8;
pub const TP_TOL: f64 = 1e-7;

type MapFn = Arc<dyn Fn(&CMatrix) -> CMatrix + Send + Sync>;

/// Hermiticity-preserving linear map `O_in → O_out`.
///
/// Choi convention: `J[(i,a),(j,b)] = Φ(|i⟩⟨j|)[a,b]` with the input index
/// as the major one. The map is held either as a Choi matrix or as a
/// closure; the Choi matrix is built lazily when it fits.
#[derive(Clone)]
pub struct LinearMap {
    in_shape: RegisterShape,
    out_shape: RegisterShape,
    func: Option<MapFn>,
    choi: Arc<OnceLock<CMatrix>>,
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearMap")
            .field("in", &self.in_shape.sites())
            .field("out", &self.out_shape.sites())
            .field("materialized", &self.choi.get().is_some())
            .finish()
    }
}

impl LinearMap {
    pub fn from_choi(in_shape: RegisterShape, out_shape: RegisterShape, choi: CMatrix) -> Result<Self> {
        let n = in_shape.dim() * out_shape.dim();
        if choi.nrows() != n || choi.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: choi.nrows() });
        }
        let cell = OnceLock::new();
        let _ = cell.set(choi);
        Ok(LinearMap { in_shape, out_shape, func: None, choi: Arc::new(cell) })
    }

    /// Wraps a linear function on raw matrices. The Choi matrix is built
    /// immediately when small enough.
    pub fn from_fn<F>(in_shape: RegisterShape, out_shape: RegisterShape, f: F) -> Self
    where
        F: Fn(&CMatrix) -> CMatrix + Send + Sync + 'static,
    {
        let map = LinearMap { in_shape, out_shape, func: Some(Arc::new(f)), choi: Arc::new(OnceLock::new()) };
        if map.in_shape.dim() * map.out_shape.dim() <= MAX_CHOI_DIM {
            let _ = map.choi();
        }
        map
    }

    pub fn in_shape(&self) -> &RegisterShape {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &RegisterShape {
        &self.out_shape
    }

    pub fn has_choi(&self) -> bool {
        self.choi.get().is_some()
    }

    /// Choi matrix, built on first use.
    pub fn choi(&self) -> Result<&CMatrix> {
        if let Some(c) = self.choi.get() {
            return Ok(c);
        }
        let din = self.in_shape.dim();
        let dout = self.out_shape.dim();
        if din * dout > MAX_CHOI_DIM {
            return Err(Error::InvalidArgument(format!(
                "Choi matrix of size {} exceeds the materialization limit {MAX_CHOI_DIM}",
                din * dout
            )));
        }
        let f = self.func.as_ref().expect("map without Choi has a closure");
        let mut j = CMatrix::zeros(din * dout, din * dout);
        for col in 0..din {
            for row in 0..din {
                let mut e = CMatrix::zeros(din, din);
                e[(row, col)] = c64(1.0, 0.0);
                let img = f(&e);
                for b in 0..dout {
                    for a in 0..dout {
                        j[(row * dout + a, col * dout + b)] = img[(a, b)];
                    }
                }
            }
        }
        Ok(self.choi.get_or_init(|| j))
    }

    /// Applies the map to a raw matrix on the input register.
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        if let Some(f) = &self.func {
            if self.choi.get().is_none() {
                return f(x);
            }
        }
        let j = self.choi.get().expect("map holds a Choi matrix or a closure");
        let din = self.in_shape.dim();
        let dout = self.out_shape.dim();
        let mut out = CMatrix::zeros(dout, dout);
        for jj in 0..din {
            for ii in 0..din {
                let w = x[(ii, jj)];
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..dout {
                    let col = jj * dout + b;
                    for a in 0..dout {
                        out[(a, b)] += w * j[(ii * dout + a, col)];
                    }
                }
            }
        }
        out
    }

    fn input_matrix(&self, x: &HermitianOp) -> Result<CMatrix> {
        if x.shape() == &self.in_shape {
            return Ok(x.matrix().clone());
        }
        if x.shape().same_sites(&self.in_shape) {
            return Ok(permute_raw(x.matrix(), x.shape(), &self.in_shape));
        }
        Err(Error::InvalidRegister(format!(
            "map expects sites {:?}, got {:?}",
            self.in_shape.sites(),
            x.shape().sites()
        )))
    }

    pub fn apply(&self, x: &HermitianOp) -> Result<HermitianOp> {
        let m = self.input_matrix(x)?;
        Ok(HermitianOp::from_raw(self.out_shape.clone(), self.apply_matrix(&m)))
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &LinearMap) -> Result<LinearMap> {
        if !first.out_shape.same_sites(&self.in_shape) {
            return Err(Error::InvalidRegister("composition with mismatched registers".into()));
        }
        let a = first.clone();
        let b = self.clone();
        let mid_from = first.out_shape.clone();
        let mid_to = self.in_shape.clone();
        Ok(LinearMap::from_fn(first.in_shape.clone(), self.out_shape.clone(), move |x| {
            let y = a.apply_matrix(x);
            let y = if mid_from == mid_to { y } else { permute_raw(&y, &mid_from, &mid_to) };
            b.apply_matrix(&y)
        }))
    }

    /// `self − other` on identical registers.
    pub fn difference(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.in_shape != other.in_shape || self.out_shape != other.out_shape {
            return Err(Error::InvalidRegister("difference of maps on different registers".into()));
        }
        let j = self.choi()? - other.choi()?;
        LinearMap::from_choi(self.in_shape.clone(), self.out_shape.clone(), j)
    }

    pub fn scaled(&self, s: f64) -> Result<LinearMap> {
        let j = self.choi()? * c64(s, 0.0);
        LinearMap::from_choi(self.in_shape.clone(), self.out_shape.clone(), j)
    }

    /// Smallest eigenvalue of the (Hermitian part of the) Choi matrix.
    pub fn choi_min_eig(&self) -> Result<f64> {
        let j = self.choi()?;
        Ok(eigh(j).min())
    }

    /// `max |Tr_out J − I_in|` entrywise.
    pub fn tp_error(&self) -> Result<f64> {
        let j = self.choi()?;
        let din = self.in_shape.dim();
        let dout = self.out_shape.dim();
        let mut err: f64 = 0.0;
        for jj in 0..din {
            for ii in 0..din {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..dout {
                    acc += j[(ii * dout + a, jj * dout + a)];
                }
                let want = if ii == jj { c64(1.0, 0.0) } else { c64(0.0, 0.0) };
                err = err.max((acc - want).norm());
            }
        }
        Ok(err)
    }

    /// Choi matrix as a Hermitian operator on the joint register
    /// `(input, output)`; used by norm solvers.
    pub fn choi_hermitian(&self) -> Result<CMatrix> {
        let j = self.choi()?.clone();
        Ok((&j + j.adjoint()) * c64(0.5, 0.0))
    }
}

/// Completely positive trace-preserving map.
#[derive(Clone, Debug)]
pub struct ChannelRep {
    map: LinearMap,
}

impl ChannelRep {
    /// Validates complete positivity and trace preservation.
    pub fn new(map: LinearMap) -> Result<Self> {
        if map.has_choi() || map.in_shape.dim() * map.out_shape.dim() <= MAX_CHOI_DIM {
            let min = map.choi_min_eig()?;
            if min < -CP_TOL {
                return Err(Error::NotCptp(format!("Choi matrix has eigenvalue {min:e}")));
            }
            let tp = map.tp_error()?;
            if tp > TP_TOL {
                return Err(Error::NotCptp(format!("trace preservation violated by {tp:e}")));
            }
        }
        Ok(ChannelRep { map })
    }

    /// For maps that are CPTP by construction and too large to validate.
    pub(crate) fn trusted(map: LinearMap) -> Self {
        ChannelRep { map }
    }

    pub fn from_choi(in_shape: RegisterShape, out_shape: RegisterShape, choi: CMatrix) -> Result<Self> {
        Self::new(LinearMap::from_choi(in_shape, out_shape, choi)?)
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn in_shape(&self) -> &RegisterShape {
        self.map.in_shape()
    }

    pub fn out_shape(&self) -> &RegisterShape {
        self.map.out_shape()
    }

    pub fn choi(&self) -> Result<&CMatrix> {
        self.map.choi()
    }

    pub fn apply(&self, x: &HermitianOp) -> Result<HermitianOp> {
        self.map.apply(x)
    }

    pub fn apply_state(&self, rho: &DensityState) -> Result<DensityState> {
        Ok(DensityState::from_op_unchecked(self.map.apply(rho.op())?))
    }

    pub fn identity(shape: RegisterShape) -> Self {
        ChannelRep { map: LinearMap::from_fn(shape.clone(), shape, |x| x.clone()) }
    }

    /// `X ↦ Tr(X)·σ`.
    pub fn replacer(in_shape: RegisterShape, sigma: &DensityState) -> Self {
        let s = sigma.matrix().clone();
        ChannelRep {
            map: LinearMap::from_fn(in_shape, sigma.shape().clone(), move |x| {
                let t: C64 = x.diagonal().iter().sum();
                &s * t
            }),
        }
    }

    /// `X ↦ U X U†` with `U` on the whole register.
    pub fn unitary(shape: RegisterShape, u: CMatrix) -> Result<Self> {
        let n = shape.dim();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.nrows() });
        }
        let dev = (u.adjoint() * &u - CMatrix::identity(n, n)).norm();
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!("matrix is not unitary (deviation {dev:e})")));
        }
        let ud = u.adjoint();
        Ok(ChannelRep { map: LinearMap::from_fn(shape.clone(), shape, move |x| &u * x * &ud) })
    }

    /// `X ↦ Tr_traced X`.
    pub fn partial_trace(in_shape: RegisterShape, traced: &[usize]) -> Result<Self> {
        let pos = in_shape.positions(traced)?;
        let out = in_shape.complement(traced)?;
        let shape = in_shape.clone();
        Ok(ChannelRep { map: LinearMap::from_fn(in_shape, out, move |x| ptrace_raw(x, &shape, &pos)) })
    }

    /// `X ↦ σ_S ⊗ Tr_S X`, output in the input's register order.
    pub fn local_replacer(in_shape: RegisterShape, sigma: &DensityState) -> Result<Self> {
        let s_sites = sigma.shape().sites().to_vec();
        let pos = in_shape.positions(&s_sites)?;
        let rest = in_shape.complement(&s_sites)?;
        let joint = sigma.shape().join(&rest)?;
        let shape = in_shape.clone();
        let s = sigma.matrix().clone();
        Ok(ChannelRep {
            map: LinearMap::from_fn(in_shape.clone(), in_shape, move |x| {
                let r = ptrace_raw(x, &shape, &pos);
                permute_raw(&s.kronecker(&r), &joint, &shape)
            }),
        })
    }

    pub fn compose(&self, first: &ChannelRep) -> Result<ChannelRep> {
        Ok(ChannelRep { map: self.map.compose(&first.map)? })
    }

    /// Convex combination `Σ p_k Φ_k` of channels on the same registers.
    pub fn mixture(parts: &[(f64, &ChannelRep)]) -> Result<ChannelRep> {
        let (_, first) = parts.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(p, _)| p).sum();
        if parts.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution("mixture weights must be a probability vector".into()));
        }
        let mut j = CMatrix::zeros(first.choi()?.nrows(), first.choi()?.ncols());
        for (p, c) in parts {
            if c.in_shape() != first.in_shape() || c.out_shape() != first.out_shape() {
                return Err(Error::InvalidRegister("mixture of channels on different registers".into()));
            }
            j += c.choi()? * c64(*p, 0.0);
        }
        Ok(ChannelRep::trusted(LinearMap::from_choi(first.in_shape().clone(), first.out_shape().clone(), j)?))
    }

    /// Output sites whose reduced image is nonzero for some traceless
    /// single-site input at `v`. Inputs are the generalized Gell-Mann basis
    /// at `v` tensored with the identity elsewhere, plus random partners to
    /// catch correlations with other sites.
    pub fn light_cone(&self, v: usize, thresh: f64) -> Result<Vec<usize>> {
        light_cone_probe(&self.map, v, thresh)
    }
}

/// Traceless Hermitian basis of `d × d` matrices (generalized Gell-Mann).
pub fn gell_mann(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::new();
    for j in 0..d {
        for k in j + 1..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = c64(1.0, 0.0);
            s[(k, j)] = c64(1.0, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = c64(0.0, -1.0);
            a[(k, j)] = c64(0.0, 1.0);
            out.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = c64(norm, 0.0);
        }
        m[(l, l)] = c64(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

/// Images of a basis of `{X : Tr_v X = 0}` on the input register:
/// traceless single-site matrices at `v` tensored with matrix units on the
/// remaining sites.
fn traceless_kernel_images(map: &LinearMap, v: usize) -> Result<Vec<CMatrix>> {
    let shape = map.in_shape().clone();
    let pos = shape.position(v)?;
    let d = shape.local_dim();
    let rest: Vec<usize> = (0..shape.num_sites()).filter(|&p| p != pos).collect();
    let rest_dim = d.pow(rest.len() as u32);
    let mut order = vec![shape.sites()[pos]];
    order.extend(rest.iter().map(|&p| shape.sites()[p]));
    let joint = RegisterShape::new(order, d)?;
    let mut images = Vec::new();
    for g in gell_mann(d) {
        for j in 0..rest_dim {
            for i in 0..rest_dim {
                let mut e = CMatrix::zeros(rest_dim, rest_dim);
                e[(i, j)] = c64(1.0, 0.0);
                let x = permute_raw(&g.kronecker(&e), &joint, &shape);
                images.push(map.apply_matrix(&x));
            }
        }
    }
    Ok(images)
}

/// Smallest set of output sites `A` with `Tr_A Φ(X) = 0` for every `X`
/// with `Tr_v X = 0`, found by probing a basis of that subspace and
/// searching subsets by increasing size.
pub(crate) fn light_cone_probe(map: &LinearMap, v: usize, thresh: f64) -> Result<Vec<usize>> {
    let images = traceless_kernel_images(map, v)?;
    let out = map.out_shape().clone();
    let n = out.num_sites();
    let mut subsets: Vec<u32> = (0..(1u32 << n)).collect();
    subsets.sort_by_key(|m| (m.count_ones(), *m));
    for mask in subsets {
        let pos: Vec<usize> = (0..n).filter(|&p| mask & (1 << p) != 0).collect();
        let ok = images.iter().all(|y| {
            if pos.len() == n {
                y.diagonal().iter().sum::<C64>().norm() <= thresh
            } else {
                ptrace_raw(y, &out, &pos).iter().all(|z| z.norm() <= thresh)
            }
        });
        if ok {
            return Ok(pos.iter().map(|&p| out.sites()[p]).collect());
        }
    }
    Err(Error::NotCptp("no light cone found; the map does not preserve tracelessness".into()))
}

/// `Φ_S(Y) = Tr_R Φ(Y ⊗ I_R)/d_R` on the complement `S` of `untouched`,
/// with sites in register order. Equals the local action of `Φ` when
/// [`identity_factor_deviation`] vanishes.
pub fn restricted_map(map: &LinearMap, untouched: &[usize]) -> Result<LinearMap> {
    if untouched.is_empty() {
        return Ok(map.clone());
    }
    let ins = map.in_shape().clone();
    let outs = map.out_shape().clone();
    ins.positions(untouched)?;
    let traced = outs.positions(untouched)?;
    let s_in = ins.complement(untouched)?;
    let s_out = outs.complement(untouched)?;
    let r_ordered = RegisterShape::new(untouched.to_vec(), ins.local_dim())?;
    let dr = r_ordered.dim();
    let in_joint = s_in.join(&r_ordered)?;
    let inner = map.clone();
    Ok(LinearMap::from_fn(s_in, s_out, move |y: &CMatrix| {
        let x = permute_raw(&y.kronecker(&CMatrix::identity(dr, dr)), &in_joint, &ins);
        ptrace_raw(&inner.apply_matrix(&x), &outs, &traced) * c64(1.0 / dr as f64, 0.0)
    }))
}

/// Largest deviation of `Φ` from `Φ_S ⊗ id_R` on the basis of matrix
/// units, where `R = untouched` must be present in both registers and
/// `Φ_S(Y) = Tr_R Φ(Y ⊗ I_R)/d_R`.
pub fn identity_factor_deviation(map: &LinearMap, untouched: &[usize]) -> Result<f64> {
    let ins = map.in_shape().clone();
    let outs = map.out_shape().clone();
    ins.positions(untouched)?;
    outs.positions(untouched)?;
    let s_in = ins.complement(untouched)?;
    let s_out = outs.complement(untouched)?;
    let r_shape = ins.sub_shape(untouched)?;
    let r_ordered = RegisterShape::new(untouched.to_vec(), ins.local_dim())?;
    let dr = r_shape.dim();
    let ds = s_in.dim();
    // input register reordered as (S, R) with R in the listed order
    let in_joint = s_in.join(&r_ordered)?;
    let out_joint = s_out.join(&r_ordered)?;
    let mut worst: f64 = 0.0;
    // Φ_S on each matrix unit of S
    let mut phi_s = Vec::with_capacity(ds * ds);
    for j in 0..ds {
        for i in 0..ds {
            let mut e = CMatrix::zeros(ds, ds);
            e[(i, j)] = c64(1.0, 0.0);
            let x = permute_raw(&e.kronecker(&CMatrix::identity(dr, dr)), &in_joint, &ins);
            let y = permute_raw(&map.apply_matrix(&x), &outs, &out_joint);
            let pos: Vec<usize> = (s_out.num_sites()..out_joint.num_sites()).collect();
            phi_s.push(ptrace_raw(&y, &out_joint, &pos) * c64(1.0 / dr as f64, 0.0));
        }
    }
    for j in 0..ds {
        for i in 0..ds {
            for rj in 0..dr {
                for ri in 0..dr {
                    let mut e = CMatrix::zeros(ds, ds);
                    e[(i, j)] = c64(1.0, 0.0);
                    let mut f = CMatrix::zeros(dr, dr);
                    f[(ri, rj)] = c64(1.0, 0.0);
                    let x = permute_raw(&e.kronecker(&f), &in_joint, &ins);
                    let y = permute_raw(&map.apply_matrix(&x), &outs, &out_joint);
                    let want = phi_s[j * ds + i].kronecker(&f);
                    let dev = (y - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    worst = worst.max(dev);
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gell_mann_is_traceless_orthogonal() {
        for d in 2..5 {
            let b = gell_mann(d);
            assert_eq!(b.len(), d * d - 1);
            for (i, x) in b.iter().enumerate() {
                assert!(x.trace().norm() < 1e-14);
                for (j, y) in b.iter().enumerate() {
                    let ip = (x.adjoint() * y).trace();
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert!((ip - c64(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn basic_channels_are_cptp() {
        let s = RegisterShape::qubits(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = random_density(&s, 4, &mut rng);
        for c in [
            ChannelRep::identity(s.clone()),
            ChannelRep::replacer(s.clone(), &sigma),
            ChannelRep::unitary(s.clone(), random_unitary(4, &mut rng)).unwrap(),
        ] {
            assert!(ChannelRep::new(c.map().clone()).is_ok());
        }
        let tr = ChannelRep::partial_trace(s.clone(), &[1]).unwrap();
        assert!(ChannelRep::new(tr.map().clone()).is_ok());
    }

    #[test]
    fn rejects_non_cp() {
        let s = RegisterShape::qubits(1).unwrap();
        // transpose map is positive but not completely positive
        let t = LinearMap::from_fn(s.clone(), s, |x| x.transpose());
        assert!(matches!(ChannelRep::new(t), Err(Error::NotCptp(_))));
    }

    #[test]
    fn choi_apply_agrees_with_closure() {
        let s = RegisterShape::qubits(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(4, &mut rng);
        let ud = u.adjoint();
        let uu = u.clone();
        let f = LinearMap::from_fn(s.clone(), s.clone(), move |x| &uu * x * &ud);
        let rho = random_density(&s, 4, &mut rng);
        let direct = &u * rho.matrix() * u.adjoint();
        assert!((f.apply_matrix(rho.matrix()) - direct).norm() < 1e-13);
    }

    #[test]
    fn light_cones_of_simple_channels() {
        let s = RegisterShape::qubits(3).unwrap();
        let id = ChannelRep::identity(s.clone());
        assert_eq!(id.light_cone(1, 1e-10).unwrap(), vec![1]);
        let rep = ChannelRep::replacer(s.clone(), &DensityState::maximally_mixed(s.clone()));
        assert!(rep.light_cone(0, 1e-10).unwrap().is_empty());
        // CNOT from site 0 to 1 spreads both sites to {0, 1} and leaves 2 alone
        let mut cnot = CMatrix::zeros(8, 8);
        for x in 0..8usize {
            let b0 = x >> 2 & 1;
            let y = if b0 == 1 { x ^ 0b010 } else { x };
            cnot[(y, x)] = c64(1.0, 0.0);
        }
        let c = ChannelRep::unitary(s.clone(), cnot).unwrap();
        assert_eq!(c.light_cone(0, 1e-10).unwrap(), vec![0, 1]);
        assert_eq!(c.light_cone(1, 1e-10).unwrap(), vec![0, 1]);
        assert_eq!(c.light_cone(2, 1e-10).unwrap(), vec![2]);
    }

    #[test]
    fn identity_factor_probe() {
        let s = RegisterShape::qubits(3).unwrap();
        let sigma = DensityState::maximally_mixed(RegisterShape::new(vec![2], 2).unwrap());
        let c = ChannelRep::local_replacer(s.clone(), &sigma).unwrap();
        assert!(identity_factor_deviation(c.map(), &[0, 1]).unwrap() < 1e-14);
        assert!(identity_factor_deviation(c.map(), &[2]).unwrap() > 0.1);
    }
}
