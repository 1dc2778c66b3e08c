//! Recovering the normal form of a biholomorphism from point evaluations.
//!
//! Given `f` between two domains, `f(0) = (a, 0)`; composing with the inverse
//! translation on the target leaves a map fixing the origin, which for a
//! genuine biholomorphism is linear. Its matrix is read off by central
//! differences, split into base and fiber parts, and the fiber part is handed
//! to the ellipsoid classifier. The recovered map is then compared with `f` on
//! random interior points.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::automorphism::{translation_exponent, Automorphism};
use crate::domain::{norm_sqr, DomainPoint, DomainSpec};
use crate::ellipsoid::{decompose_linear_ellipsoid_map, unitary_defect, ClassifierConfig, EllipsoidRejection, LinearMapVerdict};
use crate::error::{Error, Result};
use crate::sampling::random_interior_point;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeConfig {
    /// Step of the central differences. The map is linear after the
    /// translation is removed, so a large step loses nothing.
    pub step: f64,
    pub tol: f64,
    pub residual_points: usize,
    pub seed: u64,
    pub max_class_size: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            step: 0.5,
            tol: 1e-9,
            residual_points: 100,
            seed: 0x5eed,
            max_class_size: 6,
        }
    }
}

fn not_biholomorphic(reason: &'static str, residual: f64) -> Error {
    Error::NotABiholomorphism { reason, residual }
}

/// Undo the target translation by `a`: `phi_{-a}` on `dst`.
fn untranslate(dst: &DomainSpec, a: &[C64], y: &DomainPoint) -> DomainPoint {
    let neg: Vec<C64> = a.iter().map(|c| -c).collect();
    let e = translation_exponent(dst.mu(), &y.z, &neg);
    let z = y.z.iter().zip(&neg).map(|(x, b)| x + b).collect();
    let w = y
        .w
        .iter()
        .zip(dst.exponents())
        .map(|(b, &q)| {
            let s = (e / (2.0 * q)).exp();
            b.iter().map(|c| c * s).collect()
        })
        .collect();
    DomainPoint::new(z, w)
}

/// Normal form of the map `f : src -> dst`, or the reason it has none.
pub fn decompose_map<F>(src: &DomainSpec, dst: &DomainSpec, mut f: F, cfg: &DecomposeConfig) -> Result<Automorphism>
where
    F: FnMut(&DomainPoint) -> Result<DomainPoint>,
{
    if src.n0() != dst.n0() || src.fiber_dim() != dst.fiber_dim() {
        return Err(Error::IncompatibleSpecs("dimensions differ"));
    }
    let mut eval = |p: &DomainPoint| -> Result<DomainPoint> {
        let y = f(p)?;
        y.check(dst)?;
        Ok(y)
    };
    let at_origin = eval(&DomainPoint::origin(src))?;
    let fiber_norm = libm::sqrt(at_origin.w.iter().map(|b| norm_sqr(b)).sum::<f64>());
    if fiber_norm > cfg.tol {
        return Err(not_biholomorphic("origin is not sent to the zero section", fiber_norm));
    }
    let a = at_origin.z.clone();

    let n0 = src.n0();
    let n = src.dim();
    let h = cfg.step;
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let zero = DomainPoint::origin(src).flatten();
    for i in 0..n {
        let mut plus = zero.clone();
        let mut minus = zero.clone();
        plus[i] = C64::new(h, 0.0);
        minus[i] = C64::new(-h, 0.0);
        let gp = untranslate(dst, &a, &eval(&DomainPoint::from_flat(src, &plus)?)?).flatten();
        let gm = untranslate(dst, &a, &eval(&DomainPoint::from_flat(src, &minus)?)?).flatten();
        for k in 0..n {
            m[(i, k)] = (gp[k] - gm[k]) / (2.0 * h);
        }
    }

    let mut cross: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            if (i < n0) != (k < n0) {
                cross = cross.max(m[(i, k)].norm());
            }
        }
    }
    if cross > cfg.tol {
        return Err(not_biholomorphic("base and fiber coordinates mix", cross));
    }
    let linear = m.view((0, 0), (n0, n0)).into_owned();
    let scaled = &linear * C64::new(libm::sqrt(dst.mu() / src.mu()), 0.0);
    let defect = unitary_defect(&scaled);
    if defect > cfg.tol {
        return Err(not_biholomorphic("base matrix is not conformally unitary", defect));
    }
    let fiber = m.view((n0, n0), (n - n0, n - n0)).into_owned();
    let classifier = ClassifierConfig {
        tol: cfg.tol,
        max_class_size: cfg.max_class_size,
    };
    let dec = match decompose_linear_ellipsoid_map(&src.fibers(), &dst.fibers(), &fiber, &classifier)? {
        LinearMapVerdict::Rigid(d) => d,
        LinearMapVerdict::Rejected(EllipsoidRejection::NoMatchingPermutation) => {
            return Err(not_biholomorphic("fiber block data cannot be matched", f64::INFINITY))
        }
        LinearMapVerdict::Rejected(EllipsoidRejection::OffBlockMass { mass }) => {
            return Err(not_biholomorphic("fiber map mixes blocks", mass))
        }
        LinearMapVerdict::Rejected(EllipsoidRejection::NonUnitaryBlock { defect, .. }) => {
            return Err(not_biholomorphic("fiber block is not unitary", defect))
        }
    };
    let phi = Automorphism {
        a,
        linear,
        sigma: dec.sigma,
        gammas: dec.gammas,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.residual_points {
        let p = random_interior_point(src, &mut rng, 1.0, 0.95);
        let want = eval(&p)?.flatten();
        let got = phi.apply_between(src, dst, &p)?.flatten();
        let scale = want.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let err = want.iter().zip(&got).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
    }
    if worst > cfg.tol {
        return Err(not_biholomorphic("recovered map disagrees with the oracle", worst));
    }
    Ok(phi)
}

/// Normal form of an automorphism given only as a point-evaluation oracle.
pub fn decompose_automorphism<F>(spec: &DomainSpec, f: F, cfg: &DecomposeConfig) -> Result<Automorphism>
where
    F: FnMut(&DomainPoint) -> Result<DomainPoint>,
{
    decompose_map(spec, spec, f, cfg)
}

/// Largest entrywise gap between two normal forms.
pub fn parameter_distance(x: &Automorphism, y: &Automorphism) -> f64 {
    if x.sigma != y.sigma || x.gammas.len() != y.gammas.len() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for (p, q) in x.a.iter().zip(&y.a) {
        worst = worst.max((p - q).norm());
    }
    for (p, q) in x.linear.iter().zip(y.linear.iter()) {
        worst = worst.max((p - q).norm());
    }
    for (g, d) in x.gammas.iter().zip(&y.gammas) {
        for (p, q) in g.iter().zip(d.iter()) {
            worst = worst.max((p - q).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_automorphism;

    #[test]
    fn identity_oracle() {
        let spec = DomainSpec::new(2, &[1, 2], &[2.0, 0.5], 1.0).unwrap();
        let phi = decompose_automorphism(&spec, |p| Ok(p.clone()), &DecomposeConfig::default()).unwrap();
        assert!(parameter_distance(&phi, &Automorphism::identity(&spec)) < 1e-12);
    }

    #[test]
    fn hidden_normal_form_is_recovered() {
        let spec = DomainSpec::new(1, &[1, 1, 2], &[1.0, 3.0, 3.0], 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hidden = random_automorphism(&spec, &mut rng, 1.0);
        let got = decompose_automorphism(&spec, |p| hidden.apply(&spec, p), &DecomposeConfig::default()).unwrap();
        assert!(parameter_distance(&got, &hidden) < 1e-9);
    }

    #[test]
    fn fiber_squaring_is_rejected() {
        let spec = DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap();
        let square = |p: &DomainPoint| Ok(DomainPoint::new(p.z.clone(), alloc::vec![alloc::vec![p.w[0][0] * p.w[0][0]]]));
        assert!(matches!(
            decompose_automorphism(&spec, square, &DecomposeConfig::default()),
            Err(Error::NotABiholomorphism { .. })
        ));
    }

    #[test]
    fn scaling_relation_across_domains() {
        // z -> sqrt(mu / nu) z U between domains differing only in mu
        let src = DomainSpec::new(2, &[1], &[2.0], 2.0).unwrap();
        let dst = DomainSpec::new(2, &[1], &[2.0], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = crate::sampling::haar_unitary(&mut rng, 2);
        let hidden = Automorphism {
            a: alloc::vec![C64::new(0.2, -0.1), C64::new(0.0, 0.3)],
            linear: u * C64::new(2.0, 0.0),
            sigma: alloc::vec![0],
            gammas: alloc::vec![DMatrix::from_element(1, 1, C64::new(0.0, 1.0))],
        };
        hidden.validate_between(&src, &dst, 1e-12).unwrap();
        let got = decompose_map(&src, &dst, |p| hidden.apply_between(&src, &dst, p), &DecomposeConfig::default()).unwrap();
        for i in 0..2 {
            let row: alloc::vec::Vec<C64> = (0..2).map(|k| got.linear[(i, k)]).collect();
            assert!((dst.mu() * norm_sqr(&row) - src.mu()).abs() < 1e-10);
        }
    }
}
