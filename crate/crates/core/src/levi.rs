//! Levi form of the defining function and pseudoconvexity of boundary points.
//!
//! With `S_k = |w_k|^2` and `e = exp(-mu |z|^2)`, the complex Hessian of `rho`
//! applied to `T = (zeta, eta)` is
//!
//! ```text
//! sum_k p_k (p_k - 1) S_k^{p_k - 2} |conj(w_k) . eta_k|^2 + sum_k p_k S_k^{p_k - 1} |eta_k|^2
//!   + mu e |zeta|^2 - mu^2 e |conj(z) . zeta|^2
//! ```
//!
//! and `T` is complex tangent when `g . T = 0` for `g = (mu e conj(z), p_k S_k^{p_k - 1} conj(w_k))`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::domain::{classify_boundary, norm_sqr, rho_unchecked, DomainPoint, DomainSpec, StratumTag};
use crate::error::{Error, Result};
use crate::C64;

/// A vector `(zeta, eta_1, .., eta_l)` at a boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub zeta: Vec<C64>,
    pub eta: Vec<Vec<C64>>,
}

impl TangentVector {
    pub fn flatten(&self) -> Vec<C64> {
        let mut v = self.zeta.clone();
        for b in &self.eta {
            v.extend_from_slice(b);
        }
        v
    }

    pub fn from_flat(spec: &DomainSpec, flat: &[C64]) -> Result<Self> {
        let p = DomainPoint::from_flat(spec, flat)?;
        Ok(Self { zeta: p.z, eta: p.w })
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.zeta) + self.eta.iter().map(|b| norm_sqr(b)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PseudoconvexityClass {
    StronglyPseudoconvexPoint,
    WeaklyPseudoconvexPoint,
    NotSmooth,
}

impl PseudoconvexityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PseudoconvexityClass::StronglyPseudoconvexPoint => "strongly_pseudoconvex",
            PseudoconvexityClass::WeaklyPseudoconvexPoint => "weakly_pseudoconvex",
            PseudoconvexityClass::NotSmooth => "not_smooth",
        }
    }
}

/// Levi form of one tangent vector with the lower bound it must respect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeviReport {
    pub value: f64,
    /// `mu e |zeta|^2`.
    pub lower_bound_witness: f64,
    pub classification: PseudoconvexityClass,
}

fn require_b0(spec: &DomainSpec, pt: &DomainPoint) -> Result<()> {
    let s = classify_boundary(spec, pt, crate::domain::DEFAULT_BOUNDARY_TOL)?;
    if s.tag != StratumTag::B0 {
        return Err(Error::WrongStratum {
            expected: StratumTag::B0,
            found: s.tag,
        });
    }
    Ok(())
}

fn check_vector(spec: &DomainSpec, t: &TangentVector) -> Result<()> {
    DomainPoint::new(t.zeta.clone(), t.eta.clone()).check(spec)
}

fn bilinear(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn conj(v: &[C64]) -> Vec<C64> {
    v.iter().map(|c| c.conj()).collect()
}

/// Holomorphic gradient `g` with `g . T` the tangency residual.
fn gradient(spec: &DomainSpec, pt: &DomainPoint) -> Vec<C64> {
    let e = libm::exp(-spec.mu() * norm_sqr(&pt.z));
    let mut g: Vec<C64> = pt.z.iter().map(|c| c.conj() * (spec.mu() * e)).collect();
    for (b, &p) in pt.w.iter().zip(spec.exponents()) {
        let s = norm_sqr(b);
        let f = if p == 1.0 { 1.0 } else { p * libm::pow(s, p - 1.0) };
        g.extend(b.iter().map(|c| c.conj() * f));
    }
    g
}

/// `|g . T|`, zero for complex tangent vectors.
pub fn tangent_residual(spec: &DomainSpec, pt: &DomainPoint, t: &TangentVector) -> Result<f64> {
    pt.check(spec)?;
    check_vector(spec, t)?;
    Ok(bilinear(&gradient(spec, pt), &t.flatten()).norm())
}

fn levi_value(spec: &DomainSpec, pt: &DomainPoint, t: &TangentVector) -> Result<f64> {
    let mu = spec.mu();
    let e = libm::exp(-mu * norm_sqr(&pt.z));
    let mut acc = mu * e * norm_sqr(&t.zeta) - mu * mu * e * bilinear(&conj(&pt.z), &t.zeta).norm_sqr();
    for (k, ((w, eta), &p)) in pt.w.iter().zip(&t.eta).zip(spec.exponents()).enumerate() {
        let s = norm_sqr(w);
        if p == 1.0 {
            acc += norm_sqr(eta);
            continue;
        }
        if s == 0.0 {
            return Err(Error::VanishingBlock(k));
        }
        let pair = bilinear(&conj(w), eta).norm_sqr();
        acc += p * (p - 1.0) * libm::pow(s, p - 2.0) * pair + p * libm::pow(s, p - 1.0) * norm_sqr(eta);
    }
    Ok(acc)
}

/// Levi form `L(T, T)` at a point of the smooth strongly pseudoconvex stratum.
pub fn levi_form(spec: &DomainSpec, pt: &DomainPoint, t: &TangentVector) -> Result<LeviReport> {
    check_vector(spec, t)?;
    require_b0(spec, pt)?;
    let value = levi_value(spec, pt, t)?;
    let e = libm::exp(-spec.mu() * norm_sqr(&pt.z));
    Ok(LeviReport {
        value,
        lower_bound_witness: spec.mu() * e * norm_sqr(&t.zeta),
        classification: PseudoconvexityClass::StronglyPseudoconvexPoint,
    })
}

/// `(sum_k p_k^2 S_k^{p_k-2} |conj(w_k).eta_k|^2)(sum_k S_k^{p_k}) - |sum_k p_k S_k^{p_k-1} conj(w_k).eta_k|^2`,
/// non-negative by Cauchy-Schwarz.
pub fn cauchy_schwarz_discriminant(spec: &DomainSpec, pt: &DomainPoint, t: &TangentVector) -> Result<f64> {
    pt.check(spec)?;
    check_vector(spec, t)?;
    let mut weighted = 0.0;
    let mut level = 0.0;
    let mut cross = C64::new(0.0, 0.0);
    for ((w, eta), &p) in pt.w.iter().zip(&t.eta).zip(spec.exponents()) {
        let s = norm_sqr(w);
        level += libm::pow(s, p);
        if s == 0.0 {
            continue;
        }
        let pair = bilinear(&conj(w), eta);
        weighted += p * p * libm::pow(s, p - 2.0) * pair.norm_sqr();
        cross += pair * (p * libm::pow(s, p - 1.0));
    }
    Ok(weighted * level - cross.norm_sqr())
}

/// Orthonormal basis of the complex tangent space at a point of the smooth
/// strongly pseudoconvex stratum: columns `2..N` of the Householder reflector
/// sending `e_1` to a multiple of `conj(g)`.
pub fn tangent_basis(spec: &DomainSpec, pt: &DomainPoint) -> Result<Vec<TangentVector>> {
    require_b0(spec, pt)?;
    let basis = householder_complement(&conj(&gradient(spec, pt)));
    basis
        .iter()
        .map(|col| TangentVector::from_flat(spec, col))
        .collect()
}

/// Orthonormal vectors spanning the orthogonal complement of `v != 0`.
fn householder_complement(v: &[C64]) -> Vec<Vec<C64>> {
    let n = v.len();
    let norm = libm::sqrt(norm_sqr(v));
    let x: Vec<C64> = v.iter().map(|c| c / norm).collect();
    let alpha = if x[0].norm() > 0.0 {
        -x[0] / x[0].norm()
    } else {
        C64::new(-1.0, 0.0)
    };
    let mut u = x.clone();
    u[0] -= alpha;
    let uu = norm_sqr(&u);
    (1..n)
        .map(|col| {
            // column `col` of I - 2 u u^H / |u|^2
            let f = u[col].conj() * (2.0 / uu);
            (0..n)
                .map(|row| {
                    let id = if row == col { 1.0 } else { 0.0 };
                    C64::new(id, 0.0) - u[row] * f
                })
                .collect()
        })
        .collect()
}

/// Matrix of the Levi form in the tangent basis, `M_ab = L(B_a, B_b)`.
pub fn levi_matrix(spec: &DomainSpec, pt: &DomainPoint) -> Result<DMatrix<C64>> {
    let basis = tangent_basis(spec, pt)?;
    let k = basis.len();
    let mut m = DMatrix::from_element(k, k, C64::new(0.0, 0.0));
    for a in 0..k {
        for b in a..k {
            let v = levi_sesquilinear(spec, pt, &basis[a], &basis[b]);
            m[(a, b)] = v;
            m[(b, a)] = v.conj();
        }
    }
    Ok(m)
}

/// `L(S, T) = sum_ij rho_{i jbar} S_i conj(T_j)` at a point with no vanishing
/// block of exponent other than 1.
fn levi_sesquilinear(spec: &DomainSpec, pt: &DomainPoint, s: &TangentVector, t: &TangentVector) -> C64 {
    let mu = spec.mu();
    let e = libm::exp(-mu * norm_sqr(&pt.z));
    let zb = conj(&pt.z);
    let mut acc = bilinear(&s.zeta, &conj(&t.zeta)) * (mu * e)
        - bilinear(&zb, &s.zeta) * bilinear(&zb, &t.zeta).conj() * (mu * mu * e);
    for ((w, (es, et)), &p) in pt.w.iter().zip(s.eta.iter().zip(&t.eta)).zip(spec.exponents()) {
        let sq = norm_sqr(w);
        let inner = bilinear(es, &conj(et));
        if p == 1.0 {
            acc += inner;
            continue;
        }
        let wb = conj(w);
        acc += bilinear(&wb, es) * bilinear(&wb, et).conj() * (p * (p - 1.0) * libm::pow(sq, p - 2.0))
            + inner * (p * libm::pow(sq, p - 1.0));
    }
    acc
}

/// Outcome of [`classify_pseudoconvexity`].
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoconvexityReport {
    pub stratum: StratumTag,
    pub classification: PseudoconvexityClass,
    /// Smallest eigenvalue of the tangential Levi form, on the smooth strongly
    /// pseudoconvex stratum.
    pub min_eigenvalue: Option<f64>,
    /// Null direction exhibited on the weakly pseudoconvex stratum.
    pub null_direction: Option<TangentVector>,
    /// Levi form along `null_direction`, by the limit formula.
    pub null_value: Option<f64>,
    /// The certificate supports the classification at `eigen_tol`.
    pub certified: bool,
}

/// Eigenvalues below this are not counted as strictly positive.
pub const EIGEN_TOL: f64 = 1e-9;

/// Classifies a boundary point by its stratum and certifies the answer.
pub fn classify_pseudoconvexity(spec: &DomainSpec, pt: &DomainPoint, tol: f64) -> Result<PseudoconvexityReport> {
    let s = classify_boundary(spec, pt, tol)?;
    match s.tag {
        StratumTag::Interior | StratumTag::Exterior => Err(Error::WrongStratum {
            expected: StratumTag::B0,
            found: s.tag,
        }),
        StratumTag::B0 => {
            let m = levi_matrix(spec, pt)?;
            let min = if m.nrows() == 0 {
                f64::INFINITY
            } else {
                m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
            };
            Ok(PseudoconvexityReport {
                stratum: s.tag,
                classification: PseudoconvexityClass::StronglyPseudoconvexPoint,
                min_eigenvalue: Some(min),
                null_direction: None,
                null_value: None,
                certified: min > EIGEN_TOL,
            })
        }
        StratumTag::B1 => {
            let j0 = *s
                .null_blocks
                .iter()
                .find(|&&j| spec.exponents()[j] > 1.0)
                .ok_or(Error::VanishingBlock(0))?;
            let mut t = TangentVector {
                zeta: vec![C64::new(0.0, 0.0); spec.n0()],
                eta: spec.block_dims().iter().map(|&d| vec![C64::new(0.0, 0.0); d]).collect(),
            };
            t.eta[j0][0] = C64::new(1.0, 0.0);
            let value = null_block_limit(spec, pt, &t, j0);
            Ok(PseudoconvexityReport {
                stratum: s.tag,
                classification: PseudoconvexityClass::WeaklyPseudoconvexPoint,
                min_eigenvalue: None,
                null_direction: Some(t),
                null_value: Some(value),
                certified: value.abs() <= 1e-12,
            })
        }
        StratumTag::B2 => Ok(PseudoconvexityReport {
            stratum: s.tag,
            classification: PseudoconvexityClass::NotSmooth,
            min_eigenvalue: None,
            null_direction: None,
            null_value: None,
            certified: true,
        }),
    }
}

/// Levi form along a vector supported on block `j0`, where that block
/// vanishes and `p_{j0} > 1`. Both terms of block `j0` carry a positive power
/// of `|w_{j0}|` and tend to zero; every other block and `zeta` are zero in `t`.
fn null_block_limit(spec: &DomainSpec, pt: &DomainPoint, t: &TangentVector, j0: usize) -> f64 {
    let p = spec.exponents()[j0];
    let s = norm_sqr(&pt.w[j0]);
    debug_assert!(p > 1.0);
    if s == 0.0 {
        return 0.0;
    }
    let pair = bilinear(&conj(&pt.w[j0]), &t.eta[j0]).norm_sqr();
    p * (p - 1.0) * libm::pow(s, p - 2.0) * pair + p * libm::pow(s, p - 1.0) * norm_sqr(&t.eta[j0])
}

/// Levi form by finite differences of `rho`:
/// `L(T,T) = (d^2/ds^2 rho(x + sT) + d^2/ds^2 rho(x + isT)) / 4`.
pub fn levi_form_fd(spec: &DomainSpec, pt: &DomainPoint, t: &TangentVector, h: f64) -> Result<f64> {
    pt.check(spec)?;
    check_vector(spec, t)?;
    let x = pt.flatten();
    let dir = t.flatten();
    let at = |scale: C64| -> Result<f64> {
        let moved: Vec<C64> = x.iter().zip(&dir).map(|(a, b)| a + b * scale).collect();
        Ok(rho_unchecked(spec, &DomainPoint::from_flat(spec, &moved)?))
    };
    let r0 = at(C64::new(0.0, 0.0))?;
    let mut acc = 0.0;
    for unit in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        acc += (at(unit * h)? - 2.0 * r0 + at(unit * -h)?) / (h * h);
    }
    Ok(acc / 4.0)
}
