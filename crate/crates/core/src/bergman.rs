//! The Bergman kernel series, its classical special cases, the Cartan data at
//! the origin and the Monte-Carlo reproducing-property check.
//!
//! The kernel is
//!
//! ```text
//! K((z,w),(s,t)) = sum_alpha c_alpha (lambda_alpha mu / pi)^{n0} exp(lambda_alpha mu <z,s>) w^alpha conj(t)^alpha
//! ```
//!
//! Since `lambda_alpha = lambda_0 + sum_i |alpha_i| / p_i`, every term factors as
//! `exp(lambda_0 mu <z,s>) a_alpha prod_k y_k^{alpha_k}` with
//! `y_k = w_k conj(t_k) exp(mu <z,s> / p_{block(k)})`. The products are built
//! incrementally from a parent index, one complex multiplication per term, and
//! summed band by band in total degree.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::domain::{hermitian_dot, rho_unchecked, DomainPoint, DomainSpec};
use crate::error::{Error, Result};
use crate::mc::{integrate_domain_many, McEstimate, SamplerConfig};
use crate::moments::{ln_gamma, moment_constant_unchecked};
use crate::multiindex::{binomial_table, count_up_to, rank_flat, BlockedMultiIndex, FlatMultiIndices};
use crate::C64;

/// Truncation policy for the kernel series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSeriesConfig {
    pub max_degree: u32,
    /// Stop after the first degree band whose summed magnitude is below
    /// `rel_tol` times the partial sum. Zero disables early stopping.
    pub rel_tol: f64,
    pub term_budget: usize,
}

impl Default for KernelSeriesConfig {
    fn default() -> Self {
        Self {
            max_degree: 60,
            rel_tol: 1e-10,
            term_budget: 5_000_000,
        }
    }
}

impl KernelSeriesConfig {
    /// Sums every band up to `max_degree`, with no early stop.
    pub fn fixed(max_degree: u32) -> Self {
        Self {
            max_degree,
            rel_tol: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: C64,
    /// Highest degree band included in `value`.
    pub degree_used: u32,
    /// Magnitude of the last included band. A convergence witness, not a bound.
    pub tail_estimate: f64,
    /// One of the two points is not strictly inside the domain; the value was
    /// computed anyway but convergence is not guaranteed.
    pub outside_domain: bool,
}

/// `(scale / pi)^{n0} exp(scale <z, w>)`, the reproducing kernel of the
/// Fock-Bargmann space with Gaussian weight `exp(-scale |z|^2)`.
pub fn fock_bargmann_kernel(n0: usize, scale: f64, z: &[C64], w: &[C64]) -> C64 {
    let pre = libm::pow(scale / PI, n0 as f64);
    (hermitian_dot(z, w) * scale).exp() * pre
}

/// Precomputed coefficient table for the kernel series of one domain.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    spec: DomainSpec,
    config: KernelSeriesConfig,
    coeffs: Vec<f64>,
    parents: Vec<u32>,
    coords: Vec<u32>,
    band_ends: Vec<usize>,
    inv_exponent: Vec<f64>,
}

impl KernelSeries {
    pub fn new(spec: &DomainSpec, config: KernelSeriesConfig) -> Result<Self> {
        if !(config.rel_tol >= 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be non-negative"));
        }
        let n = spec.fiber_dim();
        let needed = count_up_to(n, config.max_degree);
        if needed > config.term_budget as u128 {
            return Err(Error::TermBudgetExceeded {
                needed: usize::try_from(needed).unwrap_or(usize::MAX),
                budget: config.term_budget,
            });
        }
        let total = needed as usize;
        let binom = binomial_table(config.max_degree as usize + n + 1);
        let mut coeffs = Vec::with_capacity(total);
        let mut parents = Vec::with_capacity(total);
        let mut coords = Vec::with_capacity(total);
        let mut band_ends = vec![0usize; config.max_degree as usize + 1];
        let log_scale = libm::log(spec.mu() / PI);
        let n0 = spec.n0() as f64;

        for (idx, flat) in FlatMultiIndices::new(n, config.max_degree).enumerate() {
            let alpha = BlockedMultiIndex::from_flat(spec, &flat)?;
            let m = moment_constant_unchecked(spec, &alpha);
            coeffs.push(libm::exp(
                -m.log_value + n0 * (libm::log(m.lambda) + log_scale),
            ));
            match flat.iter().position(|&a| a > 0) {
                Some(k) => {
                    let mut parent = flat.clone();
                    parent[k] -= 1;
                    parents.push(rank_flat(&parent, &binom) as u32);
                    coords.push(k as u32);
                }
                None => {
                    parents.push(0);
                    coords.push(0);
                }
            }
            let deg: u32 = flat.iter().sum();
            band_ends[deg as usize] = idx + 1;
        }

        let mut inv_exponent = Vec::with_capacity(n);
        for (&d, &p) in spec.block_dims().iter().zip(spec.exponents()) {
            inv_exponent.extend(core::iter::repeat_n(1.0 / p, d));
        }

        Ok(Self {
            spec: spec.clone(),
            config,
            coeffs,
            parents,
            coords,
            band_ends,
            inv_exponent,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn config(&self) -> &KernelSeriesConfig {
        &self.config
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// `K(p, q)` truncated according to the configuration.
    pub fn eval(&self, p: &DomainPoint, q: &DomainPoint) -> Result<KernelValue> {
        let mut scratch = Vec::new();
        self.eval_with(p, q, &mut scratch)
    }

    /// As [`KernelSeries::eval`], reusing `scratch` for the monomial products.
    pub fn eval_with(
        &self,
        p: &DomainPoint,
        q: &DomainPoint,
        scratch: &mut Vec<C64>,
    ) -> Result<KernelValue> {
        p.check(&self.spec)?;
        q.check(&self.spec)?;
        let outside_domain =
            rho_unchecked(&self.spec, p) >= 0.0 || rho_unchecked(&self.spec, q) >= 0.0;
        let (value, degree_used, tail_estimate) = self.sum_series(p, q, scratch);
        Ok(KernelValue {
            value,
            degree_used,
            tail_estimate,
            outside_domain,
        })
    }

    fn sum_series(&self, p: &DomainPoint, q: &DomainPoint, vals: &mut Vec<C64>) -> (C64, u32, f64) {
        let mu = self.spec.mu();
        let zs = hermitian_dot(&p.z, &q.z) * mu;
        let pref = (zs * self.spec.lambda0()).exp();
        let pref_abs = pref.norm();

        let mut y = Vec::with_capacity(self.inv_exponent.len());
        for ((wb, tb), _) in p.w.iter().zip(&q.w).zip(self.spec.exponents()) {
            for (a, b) in wb.iter().zip(tb) {
                y.push(a * b.conj());
            }
        }
        for (yk, &inv_p) in y.iter_mut().zip(&self.inv_exponent) {
            *yk *= (zs * inv_p).exp();
        }

        vals.clear();
        vals.resize(self.coeffs.len(), C64::new(0.0, 0.0));
        vals[0] = C64::new(1.0, 0.0);
        let mut partial = C64::new(self.coeffs[0], 0.0);
        let mut last_band = partial.norm() * pref_abs;
        let mut degree_used = 0;

        for d in 1..self.band_ends.len() {
            let (start, end) = (self.band_ends[d - 1], self.band_ends[d]);
            let mut band = C64::new(0.0, 0.0);
            let mut band_abs = 0.0;
            for idx in start..end {
                let v = vals[self.parents[idx] as usize] * y[self.coords[idx] as usize];
                vals[idx] = v;
                let term = v * self.coeffs[idx];
                band += term;
                band_abs += term.norm();
            }
            partial += band;
            degree_used = d as u32;
            last_band = band.norm() * pref_abs;
            if self.config.rel_tol > 0.0 && band_abs <= self.config.rel_tol * partial.norm() {
                break;
            }
        }
        (partial * pref, degree_used, last_band)
    }
}

/// One-shot kernel evaluation; builds the coefficient table on every call.
pub fn kernel_eval(
    spec: &DomainSpec,
    cfg: KernelSeriesConfig,
    p: &DomainPoint,
    q: &DomainPoint,
) -> Result<KernelValue> {
    KernelSeries::new(spec, cfg)?.eval(p, q)
}

/// Truncated closed-form series for the classical domain `|w|^2 < exp(-mu |z|^2)`
/// in `C^{n0} x C^m`, with terms `0..=max_degree`.
///
/// `p = (z, w)` and `q = (t, s)` each carry a single fiber block of length `m`.
pub fn yamamori_eval(
    n0: usize,
    m: usize,
    mu: f64,
    p: &DomainPoint,
    q: &DomainPoint,
    max_degree: u32,
) -> Result<C64> {
    for pt in [p, q] {
        if pt.z.len() != n0 {
            return Err(Error::DimensionMismatch {
                what: "base coordinates",
                expected: n0,
                found: pt.z.len(),
            });
        }
        if pt.w.len() != 1 || pt.w[0].len() != m {
            return Err(Error::DimensionMismatch {
                what: "single fiber block",
                expected: m,
                found: pt.w.iter().map(|b| b.len()).sum(),
            });
        }
    }
    let (nf, mf) = (n0 as f64, m as f64);
    let zt = hermitian_dot(&p.z, &q.z);
    let ws = hermitian_dot(&p.w[0], &q.w[0]);
    // ln of m! mu^n / pi^{m+n}, then (m+1)_k (k+m)^n / k! per term
    let log_front = ln_gamma(mf + 1.0) + nf * libm::log(mu) - (mf + nf) * libm::log(PI);
    let ratio = ws * (zt * mu).exp();
    let mut power = (zt * (mu * mf)).exp();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..=max_degree {
        let kf = k as f64;
        let log_coef = log_front + ln_gamma(mf + 1.0 + kf) - ln_gamma(mf + 1.0)
            + nf * libm::log(kf + mf)
            - ln_gamma(kf + 1.0);
        acc += power * libm::exp(log_coef);
        power *= ratio;
    }
    Ok(acc)
}

/// `K(0,0)` and the matrix `T(0,0) = (d^2 log K / dx_i d conj(y_j))` at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanMatrix {
    pub entries: DMatrix<C64>,
    pub kernel_at_origin: f64,
}

impl CartanMatrix {
    pub fn hermitian_defect(&self) -> f64 {
        let adj = self.entries.adjoint();
        (&self.entries - adj).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

fn series_coefficient(spec: &DomainSpec, alpha: &BlockedMultiIndex) -> f64 {
    let m = moment_constant_unchecked(spec, alpha);
    libm::exp(-m.log_value + spec.n0() as f64 * libm::log(m.lambda * spec.mu() / PI))
}

/// Closed form at the origin: only the constant and degree-one terms of the
/// series contribute, so `T` is diagonal with `lambda_0 mu` on the base
/// coordinates and `a_{e_k} / a_0` on fiber coordinate `k`.
pub fn cartan_matrix(spec: &DomainSpec) -> CartanMatrix {
    let k00 = series_coefficient(spec, &BlockedMultiIndex::zero(spec));
    let n = spec.dim();
    let mut entries = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let base = spec.lambda0() * spec.mu();
    for i in 0..spec.n0() {
        entries[(i, i)] = C64::new(base, 0.0);
    }
    let mut k = spec.n0();
    for (block, &d) in spec.block_dims().iter().enumerate() {
        for j in 0..d {
            let unit = BlockedMultiIndex::unit(spec, block, j);
            entries[(k, k)] = C64::new(series_coefficient(spec, &unit) / k00, 0.0);
            k += 1;
        }
    }
    CartanMatrix {
        entries,
        kernel_at_origin: k00,
    }
}

/// Central-difference estimate of `T(0,0)` from `log K` along real coordinate directions.
///
/// `K(x, y)` is holomorphic in `x` and antiholomorphic in `y`, so real steps
/// in each argument give the mixed derivative `d/dx_i d/d conj(y_j)`.
pub fn cartan_matrix_fd(series: &KernelSeries, h: f64) -> Result<DMatrix<C64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step must be positive"));
    }
    let spec = series.spec();
    let n = spec.dim();
    let origin = DomainPoint::origin(spec).flatten();
    let shifted = |i: usize, step: f64| -> Result<DomainPoint> {
        let mut v = origin.clone();
        v[i] += C64::new(step, 0.0);
        DomainPoint::from_flat(spec, &v)
    };
    let mut scratch = Vec::new();
    let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        let (xp, xm) = (shifted(i, h)?, shifted(i, -h)?);
        for j in 0..n {
            let (yp, ym) = (shifted(j, h)?, shifted(j, -h)?);
            let mut log_k = |x: &DomainPoint, y: &DomainPoint| -> Result<C64> {
                Ok(series.eval_with(x, y, &mut scratch)?.value.ln())
            };
            let d = log_k(&xp, &yp)? - log_k(&xp, &ym)? - log_k(&xm, &yp)? + log_k(&xm, &ym)?;
            out[(i, j)] = d / (4.0 * h * h);
        }
    }
    Ok(out)
}

/// Outcome of a Monte-Carlo reproducing-property check for `f = t^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproducingReport {
    pub alpha: BlockedMultiIndex,
    pub estimate: McEstimate,
    /// `w^alpha` at the evaluation point.
    pub target: C64,
    pub rel_error: f64,
    /// `|estimate - target| / std_err`.
    pub z_score: f64,
}

fn monomial(w: &[Vec<C64>], alpha: &BlockedMultiIndex) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for (wb, ab) in w.iter().zip(&alpha.blocks) {
        for (&c, &a) in wb.iter().zip(ab) {
            if a > 0 {
                acc *= c.powu(a);
            }
        }
    }
    acc
}

/// Estimates `int_D t^alpha K(pt, (s,t)) dV(s,t)` for each `alpha` from one
/// shared sample stream and compares with `w^alpha`.
pub fn reproducing_check_many(
    series: &KernelSeries,
    alphas: &[BlockedMultiIndex],
    pt: &DomainPoint,
    cfg: &SamplerConfig,
) -> Result<Vec<ReproducingReport>> {
    let spec = series.spec();
    pt.check(spec)?;
    for a in alphas {
        a.check(spec)?;
    }
    if rho_unchecked(spec, pt) >= 0.0 {
        return Err(Error::NotInterior);
    }
    let mut scratch = Vec::new();
    let estimates = integrate_domain_many(spec, alphas.len(), cfg, |q, out| {
        let k = series
            .eval_with(pt, q, &mut scratch)
            .map(|v| v.value)
            .unwrap_or(C64::new(f64::NAN, f64::NAN));
        for (slot, a) in out.iter_mut().zip(alphas) {
            *slot = monomial(&q.w, a) * k;
        }
    })?;
    Ok(alphas
        .iter()
        .zip(estimates)
        .map(|(a, est)| {
            let target = monomial(&pt.w, a);
            let diff = (est.mean - target).norm();
            ReproducingReport {
                alpha: a.clone(),
                target,
                rel_error: diff / target.norm(),
                z_score: diff / est.std_err,
                estimate: est,
            }
        })
        .collect())
}

pub fn reproducing_check(
    series: &KernelSeries,
    alpha: &BlockedMultiIndex,
    pt: &DomainPoint,
    cfg: &SamplerConfig,
) -> Result<ReproducingReport> {
    let mut v = reproducing_check_many(series, core::slice::from_ref(alpha), pt, cfg)?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fock_bargmann_examples() {
        let z0 = [c(0.0, 0.0)];
        assert!((fock_bargmann_kernel(1, 1.0, &z0, &z0) - c(1.0 / PI, 0.0)).norm() < 1e-15);
        let z00 = [c(0.0, 0.0), c(0.0, 0.0)];
        assert!((fock_bargmann_kernel(2, 3.0, &z00, &z00) - c(9.0 / (PI * PI), 0.0)).norm() < 1e-15);
        let one = [c(1.0, 0.0)];
        let v = fock_bargmann_kernel(1, 1.0, &one, &one);
        assert!((v - c(core::f64::consts::E / PI, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kernel_at_origin_is_constant_term() {
        let spec = DomainSpec::new(2, &[1, 2], &[1.0, 3.0], 0.5).unwrap();
        let o = DomainPoint::origin(&spec);
        let v = kernel_eval(&spec, KernelSeriesConfig::default(), &o, &o).unwrap();
        let cm = cartan_matrix(&spec);
        assert!((v.value.re - cm.kernel_at_origin).abs() < 1e-15 * cm.kernel_at_origin);
        assert_eq!(v.value.im, 0.0);
        assert!(!v.outside_domain);
    }

    #[test]
    fn yamamori_origin_value() {
        let spec = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
        let o = DomainPoint::origin(&spec);
        let v = yamamori_eval(1, 1, 1.0, &o, &o, 10).unwrap();
        assert!((v.re - 1.0 / (PI * PI)).abs() < 1e-15);

        // m! mu^n m^n / pi^{m+n}
        let spec = DomainSpec::new(2, &[3], &[1.0], 0.7).unwrap();
        let o = DomainPoint::origin(&spec);
        let v = yamamori_eval(2, 3, 0.7, &o, &o, 10).unwrap();
        let expect = 6.0 * 0.49 * 9.0 / libm::pow(PI, 5.0);
        assert!((v.re - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn term_budget_is_enforced() {
        let spec = DomainSpec::new(1, &[4], &[2.0], 1.0).unwrap();
        let cfg = KernelSeriesConfig {
            max_degree: 60,
            rel_tol: 1e-10,
            term_budget: 1000,
        };
        assert!(matches!(
            KernelSeries::new(&spec, cfg),
            Err(Error::TermBudgetExceeded { .. })
        ));
    }

    #[test]
    fn outside_points_are_flagged() {
        let spec = DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap();
        let o = DomainPoint::origin(&spec);
        let far = DomainPoint::new(vec![c(0.0, 0.0)], vec![vec![c(1.5, 0.0)]]);
        let v = kernel_eval(&spec, KernelSeriesConfig::fixed(5), &far, &o).unwrap();
        assert!(v.outside_domain);
    }

    #[test]
    fn cartan_closed_form_for_ball_fibers() {
        let spec = DomainSpec::new(2, &[3], &[1.0], 1.5).unwrap();
        let cm = cartan_matrix(&spec);
        for i in 0..2 {
            assert!((cm.entries[(i, i)].re - 3.0 * 1.5).abs() < 1e-14);
        }
        assert!(cm.hermitian_defect() == 0.0);
        assert!(cm.min_eigenvalue() > 0.0);
    }
}
