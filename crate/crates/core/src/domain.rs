//! Domain parameters, points, the defining function and the boundary strata.
//!
//! A domain is fibered over `C^{n0}`: the fiber over `z` is the generalized
//! complex ellipsoid `sum_j |w_j|^{2 p_j} < exp(-mu |z|^2)`. Fiber coordinates
//! are grouped into blocks `w_1, .., w_l` with dimensions `n_1, .., n_l`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::C64;

/// Where an input block ended up after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPlacement {
    /// Index of the normalized block holding the input block.
    pub block: usize,
    /// Coordinate offset of the input block inside that normalized block.
    pub offset: usize,
}

/// Parameters `(n0, n, p, mu)` of a domain.
///
/// Construction normalizes the block list so that at most one block has
/// exponent 1 and, if present, it comes first. Blocks with exponent 1 are
/// merged in input order; every other block keeps its relative order.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    n0: usize,
    block_dims: Vec<usize>,
    exponents: Vec<f64>,
    mu: f64,
    placement: Vec<BlockPlacement>,
}

impl DomainSpec {
    pub fn new(n0: usize, block_dims: &[usize], exponents: &[f64], mu: f64) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidSpec("n0 must be positive"));
        }
        if block_dims.is_empty() {
            return Err(Error::InvalidSpec("at least one fiber block is required"));
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
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidSpec("mu must be positive and finite"));
        }

        let unit_dim: usize = block_dims
            .iter()
            .zip(exponents)
            .filter(|(_, &p)| p == 1.0)
            .map(|(&d, _)| d)
            .sum();
        let has_unit = unit_dim > 0;

        let mut dims = Vec::with_capacity(block_dims.len());
        let mut exps = Vec::with_capacity(block_dims.len());
        if has_unit {
            dims.push(unit_dim);
            exps.push(1.0);
        }
        let mut placement = Vec::with_capacity(block_dims.len());
        let mut unit_offset = 0;
        for (&d, &p) in block_dims.iter().zip(exponents) {
            if p == 1.0 {
                placement.push(BlockPlacement {
                    block: 0,
                    offset: unit_offset,
                });
                unit_offset += d;
            } else {
                placement.push(BlockPlacement {
                    block: dims.len(),
                    offset: 0,
                });
                dims.push(d);
                exps.push(p);
            }
        }

        Ok(Self {
            n0,
            block_dims: dims,
            exponents: exps,
            mu,
            placement,
        })
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Number of fiber blocks `l`.
    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Total fiber dimension `n_1 + .. + n_l`.
    pub fn fiber_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Complex dimension of the ambient space.
    pub fn dim(&self) -> usize {
        self.n0 + self.fiber_dim()
    }

    /// 1 when the first block has exponent 1, otherwise 0.
    pub fn epsilon(&self) -> usize {
        usize::from(self.exponents[0] == 1.0)
    }

    /// `sum_i n_i / p_i`, the decay weight of the constant monomial.
    pub fn lambda0(&self) -> f64 {
        self.block_dims
            .iter()
            .zip(&self.exponents)
            .map(|(&n, &p)| n as f64 / p)
            .sum()
    }

    /// Placement of each input block in the normalized layout.
    pub fn input_placement(&self) -> &[BlockPlacement] {
        &self.placement
    }

    /// True when normalization changed the block layout.
    pub fn was_reordered(&self) -> bool {
        self.placement.len() != self.block_dims.len()
            || self
                .placement
                .iter()
                .enumerate()
                .any(|(i, pl)| pl.block != i || pl.offset != 0)
    }

    /// Generalized ellipsoid carried by the fibers.
    pub fn fibers(&self) -> crate::ellipsoid::EllipsoidSpec {
        crate::ellipsoid::EllipsoidSpec {
            block_dims: self.block_dims.clone(),
            exponents: self.exponents.clone(),
        }
    }

    /// Starting flat index of each block inside the fiber coordinates.
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

    /// Builds a point from fiber blocks given in the un-normalized input layout.
    pub fn point_from_input_blocks(&self, z: Vec<C64>, raw: &[Vec<C64>]) -> Result<DomainPoint> {
        if raw.len() != self.placement.len() {
            return Err(Error::DimensionMismatch {
                what: "input block count",
                expected: self.placement.len(),
                found: raw.len(),
            });
        }
        let mut w: Vec<Vec<C64>> = self
            .block_dims
            .iter()
            .map(|&d| vec![C64::new(0.0, 0.0); d])
            .collect();
        for (block, pl) in raw.iter().zip(&self.placement) {
            let target = &mut w[pl.block];
            if pl.offset + block.len() > target.len() {
                return Err(Error::DimensionMismatch {
                    what: "input block",
                    expected: target.len() - pl.offset,
                    found: block.len(),
                });
            }
            target[pl.offset..pl.offset + block.len()].copy_from_slice(block);
        }
        let pt = DomainPoint { z, w };
        pt.check(self)?;
        Ok(pt)
    }
}

/// A point `(z, w_1, .., w_l)` of the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPoint {
    pub z: Vec<C64>,
    pub w: Vec<Vec<C64>>,
}

impl DomainPoint {
    pub fn new(z: Vec<C64>, w: Vec<Vec<C64>>) -> Self {
        Self { z, w }
    }

    /// The origin of the ambient space of `spec`.
    pub fn origin(spec: &DomainSpec) -> Self {
        Self::on_zero_section(vec![C64::new(0.0, 0.0); spec.n0()], spec)
    }

    /// The point `(z, 0, .., 0)`.
    pub fn on_zero_section(z: Vec<C64>, spec: &DomainSpec) -> Self {
        let w = spec
            .block_dims()
            .iter()
            .map(|&d| vec![C64::new(0.0, 0.0); d])
            .collect();
        Self { z, w }
    }

    /// Checks that the block layout matches `spec` exactly.
    pub fn check(&self, spec: &DomainSpec) -> Result<()> {
        if self.z.len() != spec.n0() {
            return Err(Error::DimensionMismatch {
                what: "base coordinates",
                expected: spec.n0(),
                found: self.z.len(),
            });
        }
        if self.w.len() != spec.num_blocks() {
            return Err(Error::DimensionMismatch {
                what: "fiber block count",
                expected: spec.num_blocks(),
                found: self.w.len(),
            });
        }
        for (block, &d) in self.w.iter().zip(spec.block_dims()) {
            if block.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "fiber block",
                    expected: d,
                    found: block.len(),
                });
            }
        }
        Ok(())
    }

    /// Coordinates `(z, w_1, .., w_l)` as one vector.
    pub fn flatten(&self) -> Vec<C64> {
        let mut out = self.z.clone();
        for b in &self.w {
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`DomainPoint::flatten`].
    pub fn from_flat(spec: &DomainSpec, flat: &[C64]) -> Result<Self> {
        if flat.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                what: "flat point",
                expected: spec.dim(),
                found: flat.len(),
            });
        }
        let z = flat[..spec.n0()].to_vec();
        let mut rest = &flat[spec.n0()..];
        let mut w = Vec::with_capacity(spec.num_blocks());
        for &d in spec.block_dims() {
            w.push(rest[..d].to_vec());
            rest = &rest[d..];
        }
        Ok(Self { z, w })
    }

    /// Fiber coordinates as one vector.
    pub fn fiber_flat(&self) -> Vec<C64> {
        self.w.iter().flatten().copied().collect()
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Hermitian pairing `<x, y> = sum x_i conj(y_i)`.
pub fn hermitian_dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// `|w|^{2p}` computed from the squared norm.
pub(crate) fn block_power(norm_sq: f64, p: f64) -> f64 {
    if p == 1.0 {
        norm_sq
    } else {
        libm::pow(norm_sq, p)
    }
}

/// The defining function `sum_j |w_j|^{2 p_j} - exp(-mu |z|^2)`.
pub fn rho(spec: &DomainSpec, pt: &DomainPoint) -> Result<f64> {
    pt.check(spec)?;
    Ok(rho_unchecked(spec, pt))
}

pub(crate) fn rho_unchecked(spec: &DomainSpec, pt: &DomainPoint) -> f64 {
    let fiber: f64 = pt
        .w
        .iter()
        .zip(spec.exponents())
        .map(|(b, &p)| block_power(norm_sqr(b), p))
        .sum();
    fiber - libm::exp(-spec.mu() * norm_sqr(&pt.z))
}

/// True when `rho(pt) < 0`.
pub fn is_interior(spec: &DomainSpec, pt: &DomainPoint) -> Result<bool> {
    Ok(rho(spec, pt)? < 0.0)
}

/// Default tolerance on `|rho|` for deciding that a point is on the boundary.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StratumTag {
    /// Smooth strongly pseudoconvex part of the boundary.
    B0,
    /// Smooth part where a block with exponent above 1 vanishes.
    B1,
    /// Non-smooth part where a block with exponent below 1 vanishes.
    B2,
    Interior,
    Exterior,
}

impl StratumTag {
    pub fn is_boundary(self) -> bool {
        matches!(self, StratumTag::B0 | StratumTag::B1 | StratumTag::B2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StratumTag::B0 => "b0",
            StratumTag::B1 => "b1",
            StratumTag::B2 => "b2",
            StratumTag::Interior => "interior",
            StratumTag::Exterior => "exterior",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryStratum {
    pub tag: StratumTag,
    /// Blocks (0-based) among `1 + epsilon ..= l` whose norm is within tolerance of zero.
    pub null_blocks: Vec<usize>,
    /// Null blocks with exponents on both sides of 1 were found; the point is
    /// reported as `B2` by convention.
    pub mixed: bool,
}

/// Locates `pt` relative to the domain and, on the boundary, in `b0`, `b1` or `b2`.
pub fn classify_boundary(spec: &DomainSpec, pt: &DomainPoint, tol: f64) -> Result<BoundaryStratum> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    let r = rho(spec, pt)?;
    if r.abs() > tol {
        let tag = if r < 0.0 {
            StratumTag::Interior
        } else {
            StratumTag::Exterior
        };
        return Ok(BoundaryStratum {
            tag,
            null_blocks: Vec::new(),
            mixed: false,
        });
    }
    let null_blocks: Vec<usize> = (spec.epsilon()..spec.num_blocks())
        .filter(|&j| libm::sqrt(norm_sqr(&pt.w[j])) <= tol)
        .collect();
    let smooth = null_blocks.iter().any(|&j| spec.exponents()[j] > 1.0);
    let singular = null_blocks.iter().any(|&j| spec.exponents()[j] < 1.0);
    let tag = if singular {
        StratumTag::B2
    } else if smooth {
        StratumTag::B1
    } else {
        StratumTag::B0
    };
    Ok(BoundaryStratum {
        tag,
        null_blocks,
        mixed: smooth && singular,
    })
}

const LIFT_MAX_ITER: usize = 200;

/// Scales `direction` by the unique `r > 0` that puts `(z, r * direction)` on the boundary.
///
/// The direction is normalized first. With a single nonzero block the radius
/// is solved in closed form, otherwise by bisection on `rho`.
pub fn boundary_lift(spec: &DomainSpec, z: &[C64], direction: &[Vec<C64>]) -> Result<DomainPoint> {
    let mut pt = DomainPoint::new(z.to_vec(), direction.to_vec());
    pt.check(spec)?;
    let total: f64 = direction.iter().map(|b| norm_sqr(b)).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroDirection);
    }
    let inv = 1.0 / libm::sqrt(total);
    for b in pt.w.iter_mut() {
        for c in b.iter_mut() {
            *c *= inv;
        }
    }
    let target = libm::exp(-spec.mu() * norm_sqr(z));
    let norms: Vec<f64> = pt.w.iter().map(|b| norm_sqr(b)).collect();
    let nonzero: Vec<usize> = (0..norms.len()).filter(|&j| norms[j] > 0.0).collect();

    let radius = if let [j] = nonzero[..] {
        // r^{2p} |d|^{2p} = target
        let p = spec.exponents()[j];
        libm::pow(target, 1.0 / (2.0 * p)) / libm::sqrt(norms[j])
    } else {
        let f = |r: f64| -> f64 {
            norms
                .iter()
                .zip(spec.exponents())
                .map(|(&n, &p)| block_power(r * r * n, p))
                .sum::<f64>()
                - target
        };
        let min_p = spec.exponents().iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = 2.0 * libm::exp(-spec.mu() * norm_sqr(z) / (2.0 * min_p)).max(1.0);
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..LIFT_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if f(hi).abs() < f(lo).abs() {
            hi
        } else {
            lo
        }
    };

    for b in pt.w.iter_mut() {
        for c in b.iter_mut() {
            *c *= radius;
        }
    }
    Ok(pt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rho_at_origin_and_unit_fiber() {
        let spec = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
        let origin = DomainPoint::new(vec![c(0.0)], vec![vec![c(0.0)]]);
        assert_eq!(rho(&spec, &origin).unwrap(), -1.0);
        let edge = DomainPoint::new(vec![c(0.0)], vec![vec![c(1.0)]]);
        assert_eq!(rho(&spec, &edge).unwrap(), 0.0);
    }

    #[test]
    fn rho_mixed_blocks_matches_direct_formula() {
        let spec = DomainSpec::new(2, &[2, 1], &[1.0, 2.0], 0.5).unwrap();
        let pt = DomainPoint::new(
            vec![c(1.0), c(0.0)],
            vec![vec![c(0.3), c(0.1)], vec![c(0.5)]],
        );
        // 0.09 + 0.01 + 0.5^4 - e^{-0.5}
        let expected = 0.1 + 0.0625 - (-0.5f64).exp();
        assert!((rho(&spec, &pt).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = DomainSpec::new(1, &[2], &[2.0], 1.0).unwrap();
        let pt = DomainPoint::new(vec![c(0.0)], vec![vec![c(0.0)]]);
        assert!(matches!(
            rho(&spec, &pt),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unit_exponent_blocks_are_merged_first() {
        let spec = DomainSpec::new(1, &[2, 1, 3], &[2.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(spec.block_dims(), &[4, 2]);
        assert_eq!(spec.exponents(), &[1.0, 2.0]);
        assert_eq!(spec.epsilon(), 1);
        assert!(spec.was_reordered());
        assert_eq!(
            spec.input_placement(),
            &[
                BlockPlacement { block: 1, offset: 0 },
                BlockPlacement { block: 0, offset: 0 },
                BlockPlacement { block: 0, offset: 1 },
            ]
        );
        let pt = spec
            .point_from_input_blocks(
                vec![c(0.0)],
                &[vec![c(1.0), c(2.0)], vec![c(3.0)], vec![c(4.0), c(5.0), c(6.0)]],
            )
            .unwrap();
        assert_eq!(pt.w[0], vec![c(3.0), c(4.0), c(5.0), c(6.0)]);
        assert_eq!(pt.w[1], vec![c(1.0), c(2.0)]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(DomainSpec::new(0, &[1], &[1.0], 1.0).is_err());
        assert!(DomainSpec::new(1, &[], &[], 1.0).is_err());
        assert!(DomainSpec::new(1, &[1], &[0.0], 1.0).is_err());
        assert!(DomainSpec::new(1, &[1], &[1.0], -1.0).is_err());
        assert!(DomainSpec::new(1, &[0], &[2.0], 1.0).is_err());
    }

    #[test]
    fn strata_examples() {
        let ball = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
        let pt = boundary_lift(&ball, &[c(0.7)], &[vec![C64::new(0.3, 0.4)]]).unwrap();
        let s = classify_boundary(&ball, &pt, DEFAULT_BOUNDARY_TOL).unwrap();
        assert_eq!(s.tag, StratumTag::B0);

        let smooth = DomainSpec::new(1, &[1, 1], &[1.0, 2.0], 1.0).unwrap();
        let pt = DomainPoint::new(vec![c(0.0)], vec![vec![c(1.0)], vec![c(0.0)]]);
        let s = classify_boundary(&smooth, &pt, DEFAULT_BOUNDARY_TOL).unwrap();
        assert_eq!(s.tag, StratumTag::B1);
        assert_eq!(s.null_blocks, vec![1]);

        let cusp = DomainSpec::new(1, &[1, 1], &[1.0, 0.5], 1.0).unwrap();
        let s = classify_boundary(&cusp, &pt, DEFAULT_BOUNDARY_TOL).unwrap();
        assert_eq!(s.tag, StratumTag::B2);
    }

    #[test]
    fn mixed_null_blocks_are_b2() {
        let spec = DomainSpec::new(1, &[1, 1, 1], &[1.0, 2.0, 0.5], 1.0).unwrap();
        let pt = DomainPoint::new(
            vec![c(0.0)],
            vec![vec![c(1.0)], vec![c(0.0)], vec![c(0.0)]],
        );
        let s = classify_boundary(&spec, &pt, DEFAULT_BOUNDARY_TOL).unwrap();
        assert_eq!(s.tag, StratumTag::B2);
        assert!(s.mixed);
    }

    #[test]
    fn interior_and_exterior() {
        let spec = DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap();
        let inside = DomainPoint::new(vec![c(0.0)], vec![vec![c(0.5)]]);
        let outside = DomainPoint::new(vec![c(0.0)], vec![vec![c(1.5)]]);
        assert_eq!(
            classify_boundary(&spec, &inside, 1e-10).unwrap().tag,
            StratumTag::Interior
        );
        assert_eq!(
            classify_boundary(&spec, &outside, 1e-10).unwrap().tag,
            StratumTag::Exterior
        );
        assert!(classify_boundary(&spec, &inside, 0.0).is_err());
    }

    #[test]
    fn lift_closed_form_radii() {
        let ball = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
        let pt = boundary_lift(&ball, &[c(0.0)], &[vec![c(1.0)]]).unwrap();
        assert!((pt.w[0][0] - c(1.0)).norm() < 1e-15);

        let quartic = DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap();
        let pt = boundary_lift(&quartic, &[c(1.0)], &[vec![c(1.0)]]).unwrap();
        assert!((pt.w[0][0].re - (-0.25f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn lift_by_bisection_lands_on_boundary() {
        let spec = DomainSpec::new(1, &[2, 1], &[0.5, 3.0], 1.3).unwrap();
        let pt = boundary_lift(
            &spec,
            &[C64::new(0.4, -0.2)],
            &[vec![c(0.2), C64::new(0.0, 0.1)], vec![c(0.7)]],
        )
        .unwrap();
        assert!(rho(&spec, &pt).unwrap().abs() < 1e-12);
    }

    #[test]
    fn lift_rejects_zero_direction() {
        let spec = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
        assert_eq!(
            boundary_lift(&spec, &[c(0.0)], &[vec![c(0.0)]]),
            Err(Error::ZeroDirection)
        );
    }
}
