//! Blocked multi-indices and their graded enumeration.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};

/// A multi-index `alpha = (alpha_1, .., alpha_l)` split into fiber blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockedMultiIndex {
    pub blocks: Vec<Vec<u32>>,
}

impl BlockedMultiIndex {
    pub fn new(blocks: Vec<Vec<u32>>) -> Self {
        Self { blocks }
    }

    pub fn zero(spec: &DomainSpec) -> Self {
        Self {
            blocks: spec.block_dims().iter().map(|&d| vec![0; d]).collect(),
        }
    }

    /// Splits a flat index over all fiber coordinates into blocks.
    pub fn from_flat(spec: &DomainSpec, flat: &[u32]) -> Result<Self> {
        if flat.len() != spec.fiber_dim() {
            return Err(Error::DimensionMismatch {
                what: "flat multi-index",
                expected: spec.fiber_dim(),
                found: flat.len(),
            });
        }
        let mut rest = flat;
        let mut blocks = Vec::with_capacity(spec.num_blocks());
        for &d in spec.block_dims() {
            blocks.push(rest[..d].to_vec());
            rest = &rest[d..];
        }
        Ok(Self { blocks })
    }

    /// The unit multi-index on fiber coordinate `j` of `block`.
    pub fn unit(spec: &DomainSpec, block: usize, j: usize) -> Self {
        let mut alpha = Self::zero(spec);
        alpha.blocks[block][j] = 1;
        alpha
    }

    pub fn flat(&self) -> Vec<u32> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// `|alpha_i|` for block `i`.
    pub fn block_degree(&self, i: usize) -> u32 {
        self.blocks[i].iter().sum()
    }

    /// `|alpha|`, the total degree.
    pub fn total_degree(&self) -> u32 {
        self.blocks.iter().map(|b| b.iter().sum::<u32>()).sum()
    }

    pub fn check(&self, spec: &DomainSpec) -> Result<()> {
        if self.blocks.len() != spec.num_blocks() {
            return Err(Error::DimensionMismatch {
                what: "multi-index block count",
                expected: spec.num_blocks(),
                found: self.blocks.len(),
            });
        }
        for (b, &d) in self.blocks.iter().zip(spec.block_dims()) {
            if b.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "multi-index block",
                    expected: d,
                    found: b.len(),
                });
            }
        }
        Ok(())
    }
}

/// Binomial coefficient as `u128`, saturating on overflow.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(u128::from(n - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of multi-indices in `len` coordinates with total degree at most `max_degree`.
pub fn count_up_to(len: usize, max_degree: u32) -> u128 {
    binomial(u64::from(max_degree) + len as u64, len as u64)
}

/// Streams all flat multi-indices of length `len` with `|alpha| <= max_degree`.
///
/// Degrees are visited in increasing order. Inside one degree the order is
/// lexicographically decreasing, so `(d, 0, .., 0)` comes first.
#[derive(Debug, Clone)]
pub struct FlatMultiIndices {
    current: Vec<u32>,
    degree: u32,
    max_degree: u32,
    done: bool,
}

impl FlatMultiIndices {
    pub fn new(len: usize, max_degree: u32) -> Self {
        Self {
            current: vec![0; len],
            degree: 0,
            max_degree,
            done: false,
        }
    }

    fn advance(&mut self) {
        let n = self.current.len();
        if n == 0 {
            self.done = true;
            return;
        }
        // rightmost position before the last one that still holds mass
        if let Some(k) = (0..n - 1).rev().find(|&k| self.current[k] > 0) {
            let tail = self.current[n - 1];
            self.current[n - 1] = 0;
            self.current[k] -= 1;
            self.current[k + 1] = tail + 1;
            return;
        }
        if self.degree == self.max_degree {
            self.done = true;
            return;
        }
        self.degree += 1;
        self.current.iter_mut().for_each(|c| *c = 0);
        self.current[0] = self.degree;
    }
}

impl Iterator for FlatMultiIndices {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.advance();
        Some(out)
    }
}

/// Every blocked multi-index of `spec` with `|alpha| <= max_total_degree`, graded.
pub fn enumerate_multiindices(
    spec: &DomainSpec,
    max_total_degree: u32,
) -> impl Iterator<Item = BlockedMultiIndex> + '_ {
    FlatMultiIndices::new(spec.fiber_dim(), max_total_degree).map(move |flat| {
        BlockedMultiIndex::from_flat(spec, &flat).expect("enumerator produces fiber-length indices")
    })
}

/// Position of `alpha` in the order produced by [`FlatMultiIndices`].
///
/// `binom` must hold `binom[a][b] = C(a, b)` for all `a` up to
/// `|alpha| + alpha.len()`.
pub(crate) fn rank_flat(alpha: &[u32], binom: &[Vec<u64>]) -> usize {
    let n = alpha.len();
    let d: u32 = alpha.iter().sum();
    // indices with smaller degree
    let mut rank = if d == 0 {
        0
    } else {
        binom[(d - 1) as usize + n][n] as usize
    };
    let mut remaining = d;
    for (i, &a) in alpha.iter().enumerate().take(n.saturating_sub(1)) {
        let parts_left = n - i - 1;
        // compositions whose entry here exceeds a come first
        for v in (a + 1)..=remaining {
            let rest = (remaining - v) as usize;
            rank += binom[rest + parts_left - 1][parts_left - 1] as usize;
        }
        remaining -= a;
    }
    rank
}

pub(crate) fn binomial_table(max_n: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; max_n + 1]; max_n + 1];
    for n in 0..=max_n {
        t[n][0] = 1;
        for k in 1..=n {
            t[n][k] = t[n - 1][k - 1].saturating_add(if k < n { t[n - 1][k] } else { 0 });
        }
    }
    t
}
