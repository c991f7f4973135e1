//! Ordered block partitions of a one-dimensional register.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::RegisterShape;
use crate::states::HypergraphHamiltonian;

/// `V = A_1 ⊔ … ⊔ A_m`, ordered along the chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainPartition {
    blocks: Vec<Vec<usize>>,
}

impl ChainPartition {
    /// Blocks must be nonempty, disjoint, and cover the register.
    pub fn new(shape: &RegisterShape, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        let mut seen = Vec::new();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &s in b {
                if !shape.contains(s) {
                    return Err(Error::InvalidPartition(format!("site {s} not in register")));
                }
                if seen.contains(&s) {
                    return Err(Error::InvalidPartition(format!("site {s} in two blocks")));
                }
                seen.push(s);
            }
        }
        if seen.len() != shape.num_sites() {
            return Err(Error::InvalidPartition("blocks do not cover the register".into()));
        }
        Ok(ChainPartition { blocks })
    }

    /// One block per site, in register order.
    pub fn sites(shape: &RegisterShape) -> Self {
        ChainPartition { blocks: shape.sites().iter().map(|&s| vec![s]).collect() }
    }

    /// Consecutive blocks of `size` sites in register order (the last block
    /// may be shorter).
    pub fn contiguous(shape: &RegisterShape, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidPartition("block size 0".into()));
        }
        Self::new(shape, shape.sites().chunks(size).map(|c| c.to_vec()).collect())
    }

    /// Also checks that every hyperedge touches at most two consecutive
    /// blocks.
    pub fn for_hamiltonian(h: &HypergraphHamiltonian, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let p = Self::new(h.shape(), blocks)?;
        for e in h.edges() {
            let idx: Vec<usize> = e.sites.iter().map(|&s| p.block_of(s).expect("covered")).collect();
            let lo = *idx.iter().min().unwrap();
            let hi = *idx.iter().max().unwrap();
            if hi - lo > 1 {
                return Err(Error::InvalidPartition(format!(
                    "edge {:?} spans non-adjacent blocks {lo} and {hi}",
                    e.sites
                )));
            }
        }
        Ok(p)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `K = max |A_i|`.
    pub fn max_block(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).max().unwrap_or(0)
    }

    pub fn block_of(&self, site: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&site))
    }

    /// `A_1^i` for 0-based `i`: the union of blocks `0..=i`; empty for
    /// `i < 0` given as `None`.
    pub fn prefix(&self, upto: Option<usize>) -> Vec<usize> {
        match upto {
            None => Vec::new(),
            Some(i) => self.blocks[..=i].iter().flatten().copied().collect(),
        }
    }
}
