use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of site labels with a uniform local dimension.
///
/// The first listed site is the most significant tensor factor. A register
/// with no sites is allowed only through [`RegisterShape::trivial`]; it has
/// dimension 1 and shows up as the result of tracing out every site.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterShape {
    sites: Vec<usize>,
    local_dim: usize,
}

impl RegisterShape {
    pub fn new(sites: Vec<usize>, local_dim: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidRegister("register needs at least one site".into()));
        }
        if local_dim < 2 {
            return Err(Error::InvalidRegister(format!("local dimension {local_dim} < 2")));
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(Error::InvalidRegister(format!("duplicate site label {s}")));
            }
        }
        let shape = RegisterShape { sites, local_dim };
        shape.checked_dim()?;
        Ok(shape)
    }

    /// Sites `0..n` with local dimension `d`.
    pub fn qudits(n: usize, d: usize) -> Result<Self> {
        Self::new((0..n).collect(), d)
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::qudits(n, 2)
    }

    /// Zero-site register of dimension 1.
    pub fn trivial(local_dim: usize) -> Self {
        RegisterShape { sites: Vec::new(), local_dim }
    }

    fn checked_dim(&self) -> Result<usize> {
        let mut dim: usize = 1;
        for _ in &self.sites {
            dim = dim
                .checked_mul(self.local_dim)
                .filter(|&x| x <= 1 << 30)
                .ok_or_else(|| Error::InvalidRegister("register dimension overflows".into()))?;
        }
        Ok(dim)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.sites.len() as u32)
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.contains(&site)
    }

    pub fn position(&self, site: usize) -> Result<usize> {
        self.sites
            .iter()
            .position(|&s| s == site)
            .ok_or(Error::UnknownSite(site))
    }

    pub fn positions(&self, sites: &[usize]) -> Result<Vec<usize>> {
        let pos = sites.iter().map(|&s| self.position(s)).collect::<Result<Vec<_>>>()?;
        for (i, p) in pos.iter().enumerate() {
            if pos[..i].contains(p) {
                return Err(Error::InvalidRegister(format!(
                    "duplicate site label {}",
                    self.sites[*p]
                )));
            }
        }
        Ok(pos)
    }

    /// Register on `sites`, kept in this register's order.
    pub fn sub_shape(&self, sites: &[usize]) -> Result<RegisterShape> {
        let mut pos = self.positions(sites)?;
        pos.sort_unstable();
        Ok(RegisterShape {
            sites: pos.iter().map(|&p| self.sites[p]).collect(),
            local_dim: self.local_dim,
        })
    }

    /// Register on the sites not in `sites`, in this register's order.
    pub fn complement(&self, sites: &[usize]) -> Result<RegisterShape> {
        self.positions(sites)?;
        Ok(RegisterShape {
            sites: self.sites.iter().copied().filter(|s| !sites.contains(s)).collect(),
            local_dim: self.local_dim,
        })
    }

    /// Concatenation of two registers with disjoint labels.
    pub fn join(&self, other: &RegisterShape) -> Result<RegisterShape> {
        if self.local_dim != other.local_dim {
            return Err(Error::InvalidRegister(format!(
                "local dimensions differ: {} vs {}",
                self.local_dim, other.local_dim
            )));
        }
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&other.sites);
        if sites.is_empty() {
            return Ok(RegisterShape::trivial(self.local_dim));
        }
        RegisterShape::new(sites, self.local_dim)
    }

    /// Same label set, possibly in a different order.
    pub fn same_sites(&self, other: &RegisterShape) -> bool {
        self.local_dim == other.local_dim
            && self.sites.len() == other.sites.len()
            && self.sites.iter().all(|s| other.contains(*s))
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let n = self.sites.len();
        let mut st = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            st[k] = st[k + 1] * self.local_dim;
        }
        st
    }

    /// Full-register index contributions of every digit assignment on the
    /// given positions. The first listed position is the most significant
    /// digit of the enumeration.
    pub(crate) fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let st = self.strides();
        let d = self.local_dim;
        let mut out = vec![0usize];
        for &p in positions {
            let mut next = Vec::with_capacity(out.len() * d);
            for &o in &out {
                for k in 0..d {
                    next.push(o + k * st[p]);
                }
            }
            out = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_registers() {
        assert!(RegisterShape::new(vec![], 2).is_err());
        assert!(RegisterShape::new(vec![0, 1], 1).is_err());
        assert!(RegisterShape::new(vec![0, 0], 2).is_err());
    }

    #[test]
    fn offsets_follow_digit_order() {
        let s = RegisterShape::new(vec![5, 7, 9], 2).unwrap();
        assert_eq!(s.dim(), 8);
        assert_eq!(s.offsets(&[0]), vec![0, 4]);
        assert_eq!(s.offsets(&[2, 0]), vec![0, 4, 1, 5]);
        assert_eq!(s.offsets(&[]), vec![0]);
    }

    #[test]
    fn sub_shape_keeps_parent_order() {
        let s = RegisterShape::new(vec![3, 1, 2], 3).unwrap();
        assert_eq!(s.sub_shape(&[2, 3]).unwrap().sites(), &[3, 2]);
        assert_eq!(s.complement(&[1]).unwrap().sites(), &[3, 2]);
        assert!(s.sub_shape(&[4]).is_err());
        assert!(s.sub_shape(&[]).unwrap().is_trivial());
    }
}
