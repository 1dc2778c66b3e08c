//! Closed-form fiber moments and the Bergman series coefficients.
//!
//! For a multi-index `alpha` the fiber integral
//! `int_{sum |w_j|^{2p_j} < t} |w^alpha|^2 dV = C(alpha) t^{lambda_alpha}` has
//!
//! ```text
//! C(alpha) = pi^{N} prod_{ij} Gamma(alpha_ij + 1) prod_i Gamma((|alpha_i| + n_i) / p_i)
//!            / ( prod_i p_i  prod_i Gamma(|alpha_i| + n_i)  Gamma(lambda_alpha + 1) )
//! lambda_alpha = sum_i (|alpha_i| + n_i) / p_i
//! ```
//!
//! with `N = n_1 + .. + n_l`. The series coefficient `c_alpha` is `1 / C(alpha)`.
//! Everything is evaluated through `ln Gamma`.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::multiindex::{enumerate_multiindices, BlockedMultiIndex};

#[inline]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `int_{B_+^n} r^{2 alpha - 1} dV(r) = beta(alpha) / (2^n |alpha|)` over the positive
/// part of the real unit ball, with `beta(alpha) = prod Gamma(alpha_i) / Gamma(|alpha|)`.
pub fn dangelo_ball_integral(alpha: &[f64]) -> Result<f64> {
    if alpha.is_empty() {
        return Err(Error::InvalidArgument("empty exponent vector"));
    }
    if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument("exponents must be positive"));
    }
    let total: f64 = alpha.iter().sum();
    let log_beta = alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(total);
    Ok(libm::exp(
        log_beta - alpha.len() as f64 * LN_2 - libm::log(total),
    ))
}

/// `int_{S_+^{n-1}} w^{2 alpha - 1} dsigma = beta(alpha) / 2^{n-1}`.
pub fn dangelo_sphere_integral(alpha: &[f64]) -> Result<f64> {
    let ball = dangelo_ball_integral(alpha)?;
    let total: f64 = alpha.iter().sum();
    Ok(ball * 2.0 * total)
}

/// The fiber moment `C(alpha) t^{lambda}` in logarithmic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConstant {
    /// `ln C(alpha)`.
    pub log_value: f64,
    /// `lambda_alpha`.
    pub lambda: f64,
}

impl MomentConstant {
    pub fn value(&self) -> f64 {
        libm::exp(self.log_value)
    }

    /// The moment over the fiber of radius parameter `t`.
    pub fn at(&self, t: f64) -> f64 {
        libm::exp(self.log_value + self.lambda * libm::log(t))
    }
}

/// `lambda_alpha = sum_i (|alpha_i| + n_i) / p_i`.
pub fn lambda(spec: &DomainSpec, alpha: &BlockedMultiIndex) -> Result<f64> {
    alpha.check(spec)?;
    Ok(lambda_unchecked(spec, alpha))
}

fn lambda_unchecked(spec: &DomainSpec, alpha: &BlockedMultiIndex) -> f64 {
    (0..spec.num_blocks())
        .map(|i| (alpha.block_degree(i) as f64 + spec.block_dims()[i] as f64) / spec.exponents()[i])
        .sum()
}

pub fn moment_constant(spec: &DomainSpec, alpha: &BlockedMultiIndex) -> Result<MomentConstant> {
    alpha.check(spec)?;
    Ok(moment_constant_unchecked(spec, alpha))
}

pub(crate) fn moment_constant_unchecked(
    spec: &DomainSpec,
    alpha: &BlockedMultiIndex,
) -> MomentConstant {
    let lam = lambda_unchecked(spec, alpha);
    let mut log_c = spec.fiber_dim() as f64 * libm::log(PI);
    for (i, block) in alpha.blocks.iter().enumerate() {
        let n = spec.block_dims()[i] as f64;
        let p = spec.exponents()[i];
        let deg = alpha.block_degree(i) as f64;
        log_c += block.iter().map(|&a| ln_gamma(a as f64 + 1.0)).sum::<f64>();
        log_c += ln_gamma((deg + n) / p);
        log_c -= libm::log(p);
        log_c -= ln_gamma(deg + n);
    }
    log_c -= ln_gamma(lam + 1.0);
    MomentConstant {
        log_value: log_c,
        lambda: lam,
    }
}

/// `ln c_alpha`, the logarithm of the Bergman series coefficient.
pub fn bergman_coefficient(spec: &DomainSpec, alpha: &BlockedMultiIndex) -> Result<f64> {
    Ok(-moment_constant(spec, alpha)?.log_value)
}

/// Volume of the fiber `{sum |w_j|^{2 p_j} < t}`.
pub fn fiber_volume(spec: &DomainSpec, t: f64) -> f64 {
    moment_constant_unchecked(spec, &BlockedMultiIndex::zero(spec)).at(t)
}

/// Volume of the whole domain: `C(0) (pi / (mu lambda_0))^{n0}`.
pub fn domain_volume(spec: &DomainSpec) -> f64 {
    let c0 = moment_constant_unchecked(spec, &BlockedMultiIndex::zero(spec));
    let base = PI / (spec.mu() * c0.lambda);
    libm::exp(c0.log_value + spec.n0() as f64 * libm::log(base))
}

/// One row of an exported coefficient table.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub alpha: BlockedMultiIndex,
    pub lambda: f64,
    pub log_c: f64,
}

/// `(alpha, lambda_alpha, ln c_alpha)` for every `|alpha| <= max_degree`.
pub fn coefficient_table(spec: &DomainSpec, max_degree: u32) -> Vec<CoefficientRow> {
    enumerate_multiindices(spec, max_degree)
        .map(|alpha| {
            let m = moment_constant_unchecked(spec, &alpha);
            CoefficientRow {
                alpha,
                lambda: m.lambda,
                log_c: -m.log_value,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    // midpoint rule over the quarter disc
    fn quarter_disc_oracle(a1: f64, a2: f64, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = (j as f64 + 0.5) * h;
                if x * x + y * y < 1.0 {
                    acc += libm::pow(x, 2.0 * a1 - 1.0) * libm::pow(y, 2.0 * a2 - 1.0);
                }
            }
        }
        acc * h * h
    }

    #[test]
    fn ball_integral_examples() {
        assert!(close(dangelo_ball_integral(&[1.0]).unwrap(), 0.5, 1e-14));
        assert!(close(dangelo_ball_integral(&[2.0]).unwrap(), 0.25, 1e-14));
        let two_d = dangelo_ball_integral(&[1.0, 1.0]).unwrap();
        assert!(close(two_d, 0.125, 1e-14));
        let quad = quarter_disc_oracle(1.0, 1.0, 2000);
        assert!(close(two_d, quad, 1e-3));
        let quad = quarter_disc_oracle(1.5, 2.0, 2000);
        assert!(close(dangelo_ball_integral(&[1.5, 2.0]).unwrap(), quad, 1e-3));
        assert!(dangelo_ball_integral(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn sphere_integral_quarter_circle() {
        // int_0^{pi/2} cos t sin t dt = 1/2
        assert!(close(dangelo_sphere_integral(&[1.0, 1.0]).unwrap(), 0.5, 1e-14));
    }

    #[test]
    fn disc_and_ball_volumes() {
        let disc = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
        let m = moment_constant(&disc, &BlockedMultiIndex::zero(&disc)).unwrap();
        assert!(close(m.value(), PI, 1e-14));
        assert_eq!(m.lambda, 1.0);

        for dim in 1..=5usize {
            let spec = DomainSpec::new(1, &[dim], &[1.0], 1.0).unwrap();
            let m = moment_constant(&spec, &BlockedMultiIndex::zero(&spec)).unwrap();
            let fact: f64 = (1..=dim).map(|k| k as f64).product();
            assert!(close(m.value(), libm::pow(PI, dim as f64) / fact, 1e-13));
        }
    }

    #[test]
    fn single_variable_moments_by_polar_integration() {
        // int_{|w|^{2p} < 1} |w|^{2k} = 2 pi / (2k + 2) over the unit disc, any p
        for &p in &[0.5, 2.0, 3.0] {
            let spec = DomainSpec::new(1, &[1], &[p], 1.0).unwrap();
            for k in 0..4u32 {
                let alpha = BlockedMultiIndex::new(vec![vec![k]]);
                let m = moment_constant(&spec, &alpha).unwrap();
                assert!(close(m.value(), PI / (k as f64 + 1.0), 1e-13));
                assert!(close(m.lambda, (k as f64 + 1.0) / p, 1e-15));
            }
        }
    }

    #[test]
    fn coefficient_reciprocity_and_ball_prefactor() {
        let spec = DomainSpec::new(2, &[2, 1, 1], &[1.0, 0.5, 3.0], 0.7).unwrap();
        for alpha in enumerate_multiindices(&spec, 6) {
            let m = moment_constant(&spec, &alpha).unwrap();
            let c = bergman_coefficient(&spec, &alpha).unwrap();
            assert!((c + m.log_value).abs() <= 1e-12);
        }
        for dim in 1..=4usize {
            let spec = DomainSpec::new(1, &[dim], &[1.0], 1.0).unwrap();
            let c0 = bergman_coefficient(&spec, &BlockedMultiIndex::zero(&spec)).unwrap();
            let fact: f64 = (1..=dim).map(|k| k as f64).product();
            assert!(close(libm::exp(c0), fact / libm::pow(PI, dim as f64), 1e-13));
        }
    }

    #[test]
    fn lambda_steps_by_inverse_exponent() {
        let spec = DomainSpec::new(1, &[2, 1], &[2.0, 0.5], 1.0).unwrap();
        let base = BlockedMultiIndex::new(vec![vec![1, 0], vec![2]]);
        let l0 = lambda(&spec, &base).unwrap();
        let mut up = base.clone();
        up.blocks[0][1] += 1;
        assert!(close(lambda(&spec, &up).unwrap() - l0, 0.5, 1e-14));
        let mut up = base.clone();
        up.blocks[1][0] += 1;
        assert!(close(lambda(&spec, &up).unwrap() - l0, 2.0, 1e-14));
    }

    #[test]
    fn large_degrees_stay_finite() {
        let spec = DomainSpec::new(1, &[2, 2], &[0.5, 3.0], 1.0).unwrap();
        let alpha = BlockedMultiIndex::new(vec![vec![200, 150], vec![300, 100]]);
        let m = moment_constant(&spec, &alpha).unwrap();
        assert!(m.log_value.is_finite());
    }

    #[test]
    fn domain_volume_of_classical_domain() {
        // |w|^2 < e^{-|z|^2} in C^2: int pi e^{-|z|^2} dV(z) = pi^2
        let spec = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
        assert!(close(domain_volume(&spec), PI * PI, 1e-14));
    }
}
