//! Trace contexts: direct sums of matrix blocks with positive trace weights.
//!
//! A context describes the algebra `M_{d_1} ⊕ … ⊕ M_{d_B}` together with the
//! faithful trace  `tau(x) = sum_b w_b * Tr(x_b)`.  Every element and every
//! superoperator in this crate carries a context, and all norms, adjoints and
//! cone projections are taken with respect to its trace.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One full matrix block together with its trace weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

/// A finite direct sum of matrix blocks with positive weights.
#[derive(Debug, PartialEq)]
pub struct TraceContext {
    blocks: Vec<Block>,
    /// Row offset where each block starts; one extra entry holding the total dimension.
    offsets: Vec<usize>,
    /// Block index for every row of the ambient matrix.
    block_of_row: Vec<usize>,
}

impl TraceContext {
    pub fn new(blocks: Vec<Block>) -> Result<Arc<Self>> {
        if blocks.is_empty() {
            return Err(Error::InvalidContext("no blocks".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::InvalidContext(format!("block {i} has dimension 0")));
            }
            if !(b.weight > 0.0) || !b.weight.is_finite() {
                return Err(Error::InvalidContext(format!(
                    "block {i} has non-positive weight {}",
                    b.weight
                )));
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut block_of_row = Vec::new();
        let mut off = 0usize;
        for (i, b) in blocks.iter().enumerate() {
            offsets.push(off);
            for _ in 0..b.dim {
                block_of_row.push(i);
            }
            off += b.dim;
        }
        offsets.push(off);
        Ok(Arc::new(TraceContext {
            blocks,
            offsets,
            block_of_row,
        }))
    }

    /// Single full matrix block `M_d` with weight 1 (unnormalized trace).
    pub fn full(dim: usize) -> Arc<Self> {
        Self::new(vec![Block { dim, weight: 1.0 }]).expect("dim >= 1")
    }

    /// `n` one-dimensional blocks, each of weight `w`: the commutative algebra `C^n`.
    pub fn commutative(n: usize, w: f64) -> Result<Arc<Self>> {
        Self::new(vec![Block { dim: 1, weight: w }; n])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Dimension of the ambient matrix holding the direct sum.
    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Row range `[start, end)` of block `b` inside the ambient matrix.
    pub fn block_range(&self, b: usize) -> (usize, usize) {
        (self.offsets[b], self.offsets[b + 1])
    }

    pub fn block_of_row(&self, row: usize) -> usize {
        self.block_of_row[row]
    }

    /// Trace weight attached to a row of the ambient matrix.
    pub fn row_weight(&self, row: usize) -> f64 {
        self.blocks[self.block_of_row[row]].weight
    }

    /// `tau(1)`, the trace of the identity.
    pub fn trace_of_identity(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.dim as f64).sum()
    }

    /// True when rows `i` and `j` belong to the same block, so that matrix
    /// coordinate `(i, j)` may carry a nonzero entry.
    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of_row[i] == self.block_of_row[j]
    }

    /// Weight attached to the vectorized coordinate `(i, j)`; equals the block
    /// weight on legal coordinates and interpolates geometrically elsewhere.
    pub fn coord_weight(&self, i: usize, j: usize) -> f64 {
        (self.row_weight(i) * self.row_weight(j)).sqrt()
    }
}

/// Two contexts are interchangeable when their block data agree.
pub fn same_context(a: &Arc<TraceContext>, b: &Arc<TraceContext>) -> bool {
    Arc::ptr_eq(a, b) || a.blocks == b.blocks
}

pub fn require_same_context(a: &Arc<TraceContext>, b: &Arc<TraceContext>, what: &str) -> Result<()> {
    if same_context(a, b) {
        Ok(())
    } else {
        Err(Error::ContextMismatch(format!(
            "{what}: {:?} vs {:?}",
            a.blocks, b.blocks
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_weight_and_empty() {
        assert!(TraceContext::new(vec![]).is_err());
        assert!(TraceContext::new(vec![Block { dim: 2, weight: 0.0 }]).is_err());
        assert!(TraceContext::new(vec![Block { dim: 0, weight: 1.0 }]).is_err());
        assert!(TraceContext::new(vec![Block {
            dim: 1,
            weight: -1.0
        }])
        .is_err());
    }

    #[test]
    fn offsets_and_block_lookup() {
        let ctx = TraceContext::new(vec![
            Block { dim: 2, weight: 1.0 },
            Block { dim: 3, weight: 0.5 },
        ])
        .unwrap();
        assert_eq!(ctx.total_dim(), 5);
        assert_eq!(ctx.block_range(0), (0, 2));
        assert_eq!(ctx.block_range(1), (2, 5));
        assert_eq!(ctx.block_of_row(1), 0);
        assert_eq!(ctx.block_of_row(2), 1);
        assert!(ctx.same_block(3, 4));
        assert!(!ctx.same_block(1, 2));
        assert_eq!(ctx.trace_of_identity(), 2.0 + 1.5);
    }
}
