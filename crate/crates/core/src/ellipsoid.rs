//! Generalized complex ellipsoids and the classifier for linear maps between them.
//!
//! Maps act on row vectors: `w -> w M`. A rigid map sends source block
//! `sigma(j)` to target block `j` through a unitary `Gamma_j`, so the target
//! block is `w_{sigma(j)} Gamma_j` and every other block of `M` vanishes.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

/// `{ sum_k |zeta_k|^{2 p_k} < 1 }` with blocked coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec {
    pub block_dims: Vec<usize>,
    pub exponents: Vec<f64>,
}

impl EllipsoidSpec {
    pub fn new(block_dims: Vec<usize>, exponents: Vec<f64>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidSpec("at least one block is required"));
        }
        if block_dims.len() != exponents.len() {
            return Err(Error::DimensionMismatch {
                what: "exponent list",
                expected: block_dims.len(),
                found: exponents.len(),
            });
        }
        if block_dims.contains(&0) {
            return Err(Error::InvalidSpec("block dimensions must be positive"));
        }
        if exponents.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidSpec("exponents must be positive and finite"));
        }
        Ok(Self {
            block_dims,
            exponents,
        })
    }

    pub fn dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn block_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.block_dims
            .iter()
            .map(|&d| {
                let o = acc;
                acc += d;
                o
            })
            .collect()
    }

    /// `sum_k |zeta_k|^{2 p_k}` for a flat coordinate vector.
    pub fn level(&self, flat: &[C64]) -> f64 {
        let mut rest = flat;
        let mut acc = 0.0;
        for (&d, &p) in self.block_dims.iter().zip(&self.exponents) {
            let s: f64 = rest[..d].iter().map(|c| c.norm_sqr()).sum();
            acc += libm::pow(s, p);
            rest = &rest[d..];
        }
        acc
    }
}

/// Why a matrix is not a block-unitary map with permutation.
#[derive(Debug, Clone, PartialEq)]
pub enum EllipsoidRejection {
    /// The `(dimension, exponent)` multisets of the two ellipsoids differ.
    NoMatchingPermutation,
    /// Frobenius norm of the entries outside the best block pattern.
    OffBlockMass { mass: f64 },
    /// `max |Gamma^H Gamma - I|` of the first failing block.
    NonUnitaryBlock { block: usize, defect: f64 },
}

/// `sigma[j]` is the source block feeding target block `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub sigma: Vec<usize>,
    pub gammas: Vec<DMatrix<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearMapVerdict {
    Rigid(BlockDecomposition),
    Rejected(EllipsoidRejection),
}

impl LinearMapVerdict {
    pub fn is_rigid(&self) -> bool {
        matches!(self, LinearMapVerdict::Rigid(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub tol: f64,
    /// Largest class of interchangeable blocks searched exhaustively.
    pub max_class_size: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_class_size: 6,
        }
    }
}

fn same_key(src: &EllipsoidSpec, i: usize, dst: &EllipsoidSpec, j: usize) -> bool {
    src.block_dims[i] == dst.block_dims[j] && src.exponents[i] == dst.exponents[j]
}

/// All orderings of `0..k`.
pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    // Heap's algorithm
    let mut c = vec![0usize; k];
    out.push(cur.clone());
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                cur.swap(0, i);
            } else {
                cur.swap(c[i], i);
            }
            out.push(cur.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Sign of a permutation given as an image list.
pub(crate) fn permutation_sign(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1.0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

pub(crate) fn unitary_defect(m: &DMatrix<C64>) -> f64 {
    let g = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Checks whether `m` maps `src` onto `dst` as a block permutation with
/// unitary blocks, and extracts `(sigma, Gamma)` when it does.
pub fn decompose_linear_ellipsoid_map(
    src: &EllipsoidSpec,
    dst: &EllipsoidSpec,
    m: &DMatrix<C64>,
    cfg: &ClassifierConfig,
) -> Result<LinearMapVerdict> {
    let n = src.dim();
    if dst.dim() != n {
        return Err(Error::IncompatibleSpecs("ellipsoid dimensions differ"));
    }
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "linear map",
            expected: n,
            found: if m.nrows() != n { m.nrows() } else { m.ncols() },
        });
    }
    let l = src.num_blocks();
    if dst.num_blocks() != l {
        return Ok(LinearMapVerdict::Rejected(EllipsoidRejection::NoMatchingPermutation));
    }
    let src_off = src.block_offsets();
    let dst_off = dst.block_offsets();
    let block_mass = |i: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for r in 0..src.block_dims[i] {
            for c in 0..dst.block_dims[j] {
                acc += m[(src_off[i] + r, dst_off[j] + c)].norm_sqr();
            }
        }
        acc
    };

    // partition target blocks into classes of equal key, paired with the
    // source blocks of that key
    let mut sigma = vec![usize::MAX; l];
    let mut class_done = vec![false; l];
    for j0 in 0..l {
        if class_done[j0] {
            continue;
        }
        let targets: Vec<usize> = (j0..l).filter(|&j| same_key(dst, j, dst, j0)).collect();
        targets.iter().for_each(|&j| class_done[j] = true);
        let sources: Vec<usize> = (0..l).filter(|&i| same_key(src, i, dst, j0)).collect();
        if sources.len() != targets.len() {
            return Ok(LinearMapVerdict::Rejected(EllipsoidRejection::NoMatchingPermutation));
        }
        let k = targets.len();
        if k > cfg.max_class_size {
            return Err(Error::InvalidArgument("block class exceeds permutation search bound"));
        }
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for perm in permutations(k) {
            let on: f64 = (0..k).map(|t| block_mass(sources[perm[t]], targets[t])).sum();
            if on > best.0 {
                best = (on, perm);
            }
        }
        for (t, &pi) in best.1.iter().enumerate() {
            sigma[targets[t]] = sources[pi];
        }
    }

    // target block of every source coordinate's image under the chosen pattern
    let mut owner = vec![0usize; n];
    for (j, &i) in sigma.iter().enumerate() {
        owner[src_off[i]..src_off[i] + src.block_dims[i]].iter_mut().for_each(|o| *o = j);
    }
    let mut col_block = vec![0usize; n];
    for j in 0..l {
        col_block[dst_off[j]..dst_off[j] + dst.block_dims[j]].iter_mut().for_each(|o| *o = j);
    }
    let mut off_sq = 0.0;
    for r in 0..n {
        for c in 0..n {
            if owner[r] != col_block[c] {
                off_sq += m[(r, c)].norm_sqr();
            }
        }
    }
    let off = libm::sqrt(off_sq);
    if off > cfg.tol {
        return Ok(LinearMapVerdict::Rejected(EllipsoidRejection::OffBlockMass { mass: off }));
    }

    let mut gammas = Vec::with_capacity(l);
    for j in 0..l {
        let i = sigma[j];
        let d = dst.block_dims[j];
        let g = m.view((src_off[i], dst_off[j]), (d, d)).into_owned();
        let defect = unitary_defect(&g);
        if defect > cfg.tol {
            return Ok(LinearMapVerdict::Rejected(EllipsoidRejection::NonUnitaryBlock {
                block: j,
                defect,
            }));
        }
        gammas.push(g);
    }
    Ok(LinearMapVerdict::Rigid(BlockDecomposition { sigma, gammas }))
}

/// Matrix of the map `w -> (w_{sigma(j)} Gamma_j)_j` from `src` to `dst` coordinates.
pub fn block_map_matrix(
    src: &EllipsoidSpec,
    dst: &EllipsoidSpec,
    decomposition: &BlockDecomposition,
) -> DMatrix<C64> {
    let n = src.dim();
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let src_off = src.block_offsets();
    let dst_off = dst.block_offsets();
    for (j, g) in decomposition.gammas.iter().enumerate() {
        let i = decomposition.sigma[j];
        m.view_mut((src_off[i], dst_off[j]), (g.nrows(), g.ncols()))
            .copy_from(g);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn permutation_helpers() {
        assert_eq!(permutations(0).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        let mut all = permutations(4);
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 24);
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
    }

    #[test]
    fn identity_is_rigid() {
        let e = EllipsoidSpec::new(vec![2, 1], vec![1.0, 3.0]).unwrap();
        let m = DMatrix::identity(3, 3);
        match decompose_linear_ellipsoid_map(&e, &e, &m, &ClassifierConfig::default()).unwrap() {
            LinearMapVerdict::Rigid(d) => {
                assert_eq!(d.sigma, vec![0, 1]);
                assert_eq!(d.gammas[0], DMatrix::identity(2, 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn swapped_equal_blocks_are_recovered() {
        let e = EllipsoidSpec::new(vec![1, 1], vec![2.0, 2.0]).unwrap();
        let phase = c(0.6, 0.8);
        let dec = BlockDecomposition {
            sigma: vec![1, 0],
            gammas: vec![
                DMatrix::from_element(1, 1, phase),
                DMatrix::from_element(1, 1, c(0.0, 1.0)),
            ],
        };
        let m = block_map_matrix(&e, &e, &dec);
        assert_eq!(m[(1, 0)], phase);
        let got = decompose_linear_ellipsoid_map(&e, &e, &m, &ClassifierConfig::default()).unwrap();
        assert_eq!(got, LinearMapVerdict::Rigid(dec));
    }

    #[test]
    fn rejections() {
        let e = EllipsoidSpec::new(vec![1, 1], vec![2.0, 0.5]).unwrap();
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = c(1e-3, 0.0);
        assert_eq!(
            decompose_linear_ellipsoid_map(&e, &e, &m, &ClassifierConfig::default()).unwrap(),
            LinearMapVerdict::Rejected(EllipsoidRejection::OffBlockMass { mass: 1e-3 })
        );

        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = c(2.0, 0.0);
        assert!(matches!(
            decompose_linear_ellipsoid_map(&e, &e, &m, &ClassifierConfig::default()).unwrap(),
            LinearMapVerdict::Rejected(EllipsoidRejection::NonUnitaryBlock { block: 0, .. })
        ));

        let f = EllipsoidSpec::new(vec![1, 1], vec![2.0, 3.0]).unwrap();
        assert_eq!(
            decompose_linear_ellipsoid_map(&e, &f, &DMatrix::identity(2, 2), &ClassifierConfig::default())
                .unwrap(),
            LinearMapVerdict::Rejected(EllipsoidRejection::NoMatchingPermutation)
        );

        let g = EllipsoidSpec::new(vec![3], vec![2.0]).unwrap();
        assert!(decompose_linear_ellipsoid_map(&e, &g, &DMatrix::identity(2, 2), &ClassifierConfig::default()).is_err());
    }
}
