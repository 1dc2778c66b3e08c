//! Automorphisms in normal form and the generators they are built from.
//!
//! Points are row vectors. The three generator families are
//!
//! * `phi_A : (z, w) -> (z A, w)` with `A` unitary,
//! * `phi_D : (z, w) -> (z, (w_{sigma(j)} Gamma_j)_j)` with `sigma` preserving
//!   block dimension and exponent and every `Gamma_j` unitary,
//! * `phi_a : (z, w) -> (z + a, (w_j exp(E(z) / (2 p_j)))_j)` with
//!   `E(z) = -2 mu <z, a> - mu |a|^2`.
//!
//! A normal form `(a, A, sigma, Gamma)` is the composite `phi_a . phi_D . phi_A`.
//! The same formulas, with the target's `mu` and exponents in `phi_a`, describe
//! biholomorphisms between two domains.
//!
//! Translations do not commute exactly: `phi_a . phi_c = phi_{a+c}` followed by
//! a rotation of block `j` by `exp(-i mu Im<c, a> / p_j)`. [`compose`] folds that
//! phase into the block unitaries.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::bergman::{KernelSeries, KernelValue};
use crate::domain::{hermitian_dot, norm_sqr, rho, DomainPoint, DomainSpec};
use crate::ellipsoid::{permutation_sign, unitary_defect};
use crate::error::{Error, Result};
use crate::C64;

/// Default tolerance for unitarity checks on generator data.
pub const UNITARY_TOL: f64 = 1e-10;

/// Normal form `phi_a . phi_D . phi_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Automorphism {
    pub a: Vec<C64>,
    pub linear: DMatrix<C64>,
    /// `sigma[j]` is the source block that lands in block `j`.
    pub sigma: Vec<usize>,
    pub gammas: Vec<DMatrix<C64>>,
}

/// One generator of the automorphism group.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Linear(DMatrix<C64>),
    Block {
        sigma: Vec<usize>,
        gammas: Vec<DMatrix<C64>>,
    },
    Translation(Vec<C64>),
}

/// A word of generators, applied first to last: `[g1, g2]` means `g2 . g1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneratorWord(pub Vec<Generator>);

fn identity_gammas(dims: &[usize]) -> Vec<DMatrix<C64>> {
    dims.iter().map(|&d| DMatrix::identity(d, d)).collect()
}

impl Automorphism {
    pub fn identity(spec: &DomainSpec) -> Self {
        Self {
            a: vec![C64::new(0.0, 0.0); spec.n0()],
            linear: DMatrix::identity(spec.n0(), spec.n0()),
            sigma: (0..spec.num_blocks()).collect(),
            gammas: identity_gammas(spec.block_dims()),
        }
    }

    pub fn translation(spec: &DomainSpec, a: Vec<C64>) -> Self {
        Self {
            a,
            ..Self::identity(spec)
        }
    }

    pub fn linear(spec: &DomainSpec, linear: DMatrix<C64>) -> Self {
        Self {
            linear,
            ..Self::identity(spec)
        }
    }

    pub fn block(spec: &DomainSpec, sigma: Vec<usize>, gammas: Vec<DMatrix<C64>>) -> Self {
        Self {
            sigma,
            gammas,
            ..Self::identity(spec)
        }
    }

    pub fn from_generator(spec: &DomainSpec, g: &Generator) -> Self {
        match g {
            Generator::Linear(m) => Self::linear(spec, m.clone()),
            Generator::Block { sigma, gammas } => Self::block(spec, sigma.clone(), gammas.clone()),
            Generator::Translation(a) => Self::translation(spec, a.clone()),
        }
    }

    /// Checks shapes, `sigma` against the block data of `src` and `dst`, and
    /// unitarity of `sqrt(nu / mu) A` and of every `Gamma_j`.
    pub fn validate_between(&self, src: &DomainSpec, dst: &DomainSpec, tol: f64) -> Result<()> {
        if src.n0() != dst.n0() || src.num_blocks() != dst.num_blocks() {
            return Err(Error::IncompatibleSpecs("base dimension or block count differs"));
        }
        let n0 = src.n0();
        if self.a.len() != n0 {
            return Err(Error::DimensionMismatch {
                what: "translation",
                expected: n0,
                found: self.a.len(),
            });
        }
        if self.linear.nrows() != n0 || self.linear.ncols() != n0 {
            return Err(Error::DimensionMismatch {
                what: "base matrix",
                expected: n0,
                found: self.linear.nrows(),
            });
        }
        let l = src.num_blocks();
        if self.sigma.len() != l || self.gammas.len() != l {
            return Err(Error::DimensionMismatch {
                what: "block permutation",
                expected: l,
                found: self.sigma.len(),
            });
        }
        let mut seen = vec![false; l];
        for (j, &i) in self.sigma.iter().enumerate() {
            if i >= l || seen[i] {
                return Err(Error::InvalidArgument("sigma is not a permutation"));
            }
            seen[i] = true;
            if src.block_dims()[i] != dst.block_dims()[j] || src.exponents()[i] != dst.exponents()[j] {
                return Err(Error::IncompatibleSpecs("sigma does not respect block data"));
            }
            let g = &self.gammas[j];
            if g.nrows() != dst.block_dims()[j] || g.ncols() != dst.block_dims()[j] {
                return Err(Error::DimensionMismatch {
                    what: "block unitary",
                    expected: dst.block_dims()[j],
                    found: g.nrows(),
                });
            }
            if unitary_defect(g) > tol {
                return Err(Error::InvalidArgument("block matrix is not unitary"));
            }
        }
        let scaled = &self.linear * C64::new(libm::sqrt(dst.mu() / src.mu()), 0.0);
        if unitary_defect(&scaled) > tol {
            return Err(Error::InvalidArgument("base matrix is not conformally unitary"));
        }
        Ok(())
    }

    pub fn validate(&self, spec: &DomainSpec, tol: f64) -> Result<()> {
        self.validate_between(spec, spec, tol)
    }

    /// Image of `pt` under the map from `src` to `dst`. Shapes are checked,
    /// unitarity is not.
    pub fn apply_between(&self, src: &DomainSpec, dst: &DomainSpec, pt: &DomainPoint) -> Result<DomainPoint> {
        pt.check(src)?;
        if self.a.len() != dst.n0() || self.sigma.len() != dst.num_blocks() {
            return Err(Error::IncompatibleSpecs("map shape does not match target"));
        }
        let n0 = src.n0();
        let mut z = vec![C64::new(0.0, 0.0); n0];
        for (k, out) in z.iter_mut().enumerate() {
            *out = (0..n0).map(|i| pt.z[i] * self.linear[(i, k)]).sum();
        }
        let e = translation_exponent(dst.mu(), &z, &self.a);
        let mut w = Vec::with_capacity(dst.num_blocks());
        for (j, g) in self.gammas.iter().enumerate() {
            let srcb = &pt.w[self.sigma[j]];
            let scale = (e / (2.0 * dst.exponents()[j])).exp();
            let block: Vec<C64> = (0..g.ncols())
                .map(|c| (0..g.nrows()).map(|r| srcb[r] * g[(r, c)]).sum::<C64>() * scale)
                .collect();
            w.push(block);
        }
        for (zk, ak) in z.iter_mut().zip(&self.a) {
            *zk += ak;
        }
        Ok(DomainPoint::new(z, w))
    }

    pub fn apply(&self, spec: &DomainSpec, pt: &DomainPoint) -> Result<DomainPoint> {
        self.apply_between(spec, spec, pt)
    }

    /// Holomorphic Jacobian determinant at `pt`.
    ///
    /// The Jacobian is block triangular: the base part is `A`, the fiber part
    /// is the block permutation with unitaries, scaled in block `j` by
    /// `exp(E(zA) / (2 q_j))`.
    pub fn jacobian_det_between(&self, src: &DomainSpec, dst: &DomainSpec, pt: &DomainPoint) -> Result<C64> {
        pt.check(src)?;
        let n0 = src.n0();
        let z: Vec<C64> = (0..n0)
            .map(|k| (0..n0).map(|i| pt.z[i] * self.linear[(i, k)]).sum())
            .collect();
        let e = translation_exponent(dst.mu(), &z, &self.a);
        let mut det = self.linear.determinant();
        let weight: f64 = dst
            .block_dims()
            .iter()
            .zip(dst.exponents())
            .map(|(&m, &q)| m as f64 / (2.0 * q))
            .sum();
        det *= (e * weight).exp();
        for g in &self.gammas {
            det *= g.determinant();
        }
        det *= self.coordinate_sign(src);
        Ok(det)
    }

    pub fn jacobian_det(&self, spec: &DomainSpec, pt: &DomainPoint) -> Result<C64> {
        self.jacobian_det_between(spec, spec, pt)
    }

    /// Sign of the fiber-coordinate permutation induced by `sigma`.
    fn coordinate_sign(&self, src: &DomainSpec) -> f64 {
        let offsets = src.block_offsets();
        let mut perm = Vec::with_capacity(src.fiber_dim());
        for &i in &self.sigma {
            perm.extend(offsets[i]..offsets[i] + src.block_dims()[i]);
        }
        permutation_sign(&perm)
    }
}

/// `E(z) = -2 mu <z, a> - mu |a|^2`.
pub fn translation_exponent(mu: f64, z: &[C64], a: &[C64]) -> C64 {
    hermitian_dot(z, a) * (-2.0 * mu) - mu * norm_sqr(a)
}

/// Normal form of `phi . psi` (apply `psi` first).
pub fn compose(spec: &DomainSpec, phi: &Automorphism, psi: &Automorphism) -> Result<Automorphism> {
    phi.validate(spec, 1e-6)?;
    psi.validate(spec, 1e-6)?;
    let n0 = spec.n0();
    // b A
    let c: Vec<C64> = (0..n0)
        .map(|k| (0..n0).map(|i| psi.a[i] * phi.linear[(i, k)]).sum())
        .collect();
    let a: Vec<C64> = phi.a.iter().zip(&c).map(|(x, y)| x + y).collect();
    let phase_arg = -spec.mu() * hermitian_dot(&c, &phi.a).im;
    let sigma = phi.sigma.iter().map(|&s| psi.sigma[s]).collect();
    let gammas = (0..spec.num_blocks())
        .map(|j| {
            let rot = C64::from_polar(1.0, phase_arg / spec.exponents()[j]);
            &psi.gammas[phi.sigma[j]] * &phi.gammas[j] * rot
        })
        .collect();
    Ok(Automorphism {
        a,
        linear: &psi.linear * &phi.linear,
        sigma,
        gammas,
    })
}

/// Normal form of the inverse map.
pub fn inverse(spec: &DomainSpec, phi: &Automorphism) -> Result<Automorphism> {
    phi.validate(spec, 1e-6)?;
    let l = spec.num_blocks();
    let mut inv_sigma = vec![0; l];
    for (j, &i) in phi.sigma.iter().enumerate() {
        inv_sigma[i] = j;
    }
    let gammas = (0..l).map(|i| phi.gammas[inv_sigma[i]].adjoint()).collect();
    let lin = Automorphism::linear(spec, phi.linear.adjoint());
    let blk = Automorphism::block(spec, inv_sigma, gammas);
    let tr = Automorphism::translation(spec, phi.a.iter().map(|x| -x).collect());
    compose(spec, &compose(spec, &lin, &blk)?, &tr)
}

impl GeneratorWord {
    /// Collapses the word into one normal form.
    pub fn normal_form(&self, spec: &DomainSpec) -> Result<Automorphism> {
        let mut acc = Automorphism::identity(spec);
        for g in &self.0 {
            acc = compose(spec, &Automorphism::from_generator(spec, g), &acc)?;
        }
        Ok(acc)
    }

    /// Applies the generators one at a time.
    pub fn apply(&self, spec: &DomainSpec, pt: &DomainPoint) -> Result<DomainPoint> {
        let mut cur = pt.clone();
        for g in &self.0 {
            cur = Automorphism::from_generator(spec, g).apply(spec, &cur)?;
        }
        Ok(cur)
    }
}

/// Numerical Jacobian of a holomorphic map, by central differences along real
/// coordinate directions.
pub fn finite_difference_jacobian<F>(spec: &DomainSpec, f: F, pt: &DomainPoint, h: f64) -> Result<DMatrix<C64>>
where
    F: Fn(&DomainPoint) -> Result<DomainPoint>,
{
    let x = pt.flatten();
    let n = x.len();
    let mut jac = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += C64::new(h, 0.0);
        xm[i] -= C64::new(h, 0.0);
        let fp = f(&DomainPoint::from_flat(spec, &xp)?)?.flatten();
        let fm = f(&DomainPoint::from_flat(spec, &xm)?)?.flatten();
        for k in 0..n {
            jac[(i, k)] = (fp[k] - fm[k]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Largest `tail_estimate / |K|` accepted by [`transformation_rule_check`].
pub const TRANSFORMATION_TAIL_TOL: f64 = 1e-6;

/// `|K(phi p, phi q) J(p) conj(J(q)) - K(p, q)| / |K(p, q)|`.
///
/// Use a fixed-degree series: the rule then holds term by term, so both
/// sides are compared at the same truncation.
pub fn transformation_rule_check(
    series: &KernelSeries,
    phi: &Automorphism,
    p: &DomainPoint,
    q: &DomainPoint,
) -> Result<f64> {
    let spec = series.spec();
    for pt in [p, q] {
        if rho(spec, pt)? >= 0.0 {
            return Err(Error::NotInterior);
        }
    }
    let converged = |v: KernelValue| -> Result<C64> {
        if v.tail_estimate > TRANSFORMATION_TAIL_TOL * v.value.norm() {
            return Err(Error::NotConverged {
                tail: v.tail_estimate,
            });
        }
        Ok(v.value)
    };
    let base = converged(series.eval(p, q)?)?;
    let (fp, fq) = (phi.apply(spec, p)?, phi.apply(spec, q)?);
    let moved = converged(series.eval(&fp, &fq)?)?;
    let jp = phi.jacobian_det(spec, p)?;
    let jq = phi.jacobian_det(spec, q)?;
    Ok((moved * jp * jq.conj() - base).norm() / base.norm())
}
