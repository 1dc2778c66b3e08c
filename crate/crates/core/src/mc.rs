//! Monte-Carlo integration over fibers and over the whole domain.
//!
//! Runs are reproducible: a configuration splits its samples into a fixed
//! number of partitions, partition `i` draws from a ChaCha8 stream seeded by
//! `seed` with stream id `i`, and partition sums are merged in order with
//! compensated addition. Results therefore do not depend on how partitions are
//! scheduled.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Gamma, StandardNormal};

use crate::domain::{block_power, norm_sqr, DomainPoint, DomainSpec};
use crate::error::{Error, Result};
use crate::moments::moment_constant_unchecked;
use crate::multiindex::BlockedMultiIndex;
use crate::C64;

/// Below this acceptance ratio a rejection sampler gives up.
pub const MIN_ACCEPTANCE: f64 = 1e-6;
const MIN_ATTEMPTS_BEFORE_GIVING_UP: u64 = 1 << 22;

/// Distribution used to draw fiber points inside integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FiberProposal {
    /// Uniform on the enclosing polydisc, rejected outside the fiber.
    Polydisc,
    /// Exact uniform sampling: uniform block directions with block levels
    /// drawn from a Dirichlet law. Never rejects.
    #[default]
    Radial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Number of proposals, accepted or not.
    pub samples: u64,
    pub partitions: u32,
    /// Radius of the base ball the Gaussian base proposal is truncated to.
    /// `None` picks a radius whose truncated mass is below `e^{-46}`.
    pub z_cutoff: Option<f64>,
    pub proposal: FiberProposal,
}

impl SamplerConfig {
    pub const DEFAULT_PARTITIONS: u32 = 16;

    pub fn new(seed: u64, samples: u64) -> Self {
        Self {
            seed,
            samples,
            partitions: Self::DEFAULT_PARTITIONS,
            z_cutoff: None,
            proposal: FiberProposal::default(),
        }
    }

    /// Sample count of partition `part`.
    pub fn partition_len(&self, part: u32) -> u64 {
        let p = u64::from(self.partitions.max(1));
        self.samples / p + u64::from(u64::from(part) < self.samples % p)
    }

    pub fn partition_rng(&self, part: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(part));
        rng
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidArgument("at least two samples are required"));
        }
        if self.partitions == 0 {
            return Err(Error::InvalidArgument("partition count must be positive"));
        }
        if let Some(r) = self.z_cutoff {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument("z cutoff must be positive"));
            }
        }
        Ok(())
    }
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: C64,
    pub std_err: f64,
    pub samples: u64,
    pub accepted: u64,
}

impl McEstimate {
    pub fn acceptance_ratio(&self) -> f64 {
        self.accepted as f64 / self.samples as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Running sums of one partition, or of several merged in order.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums {
    re: Vec<Compensated>,
    im: Vec<Compensated>,
    sq: Vec<Compensated>,
    samples: u64,
    accepted: u64,
}

impl PartialSums {
    pub fn new(outputs: usize) -> Self {
        Self {
            re: vec![Compensated::default(); outputs],
            im: vec![Compensated::default(); outputs],
            sq: vec![Compensated::default(); outputs],
            samples: 0,
            accepted: 0,
        }
    }

    fn absorb(&mut self, re: &[f64], im: &[f64], sq: &[f64], samples: u64, accepted: u64) {
        for k in 0..self.re.len() {
            self.re[k].add(re[k]);
            self.im[k].add(im[k]);
            self.sq[k].add(sq[k]);
        }
        self.samples += samples;
        self.accepted += accepted;
    }

    /// Appends `other`; callers merge partitions in index order.
    pub fn merge(&mut self, other: &PartialSums) {
        for k in 0..self.re.len() {
            self.re[k].add(other.re[k].value());
            self.im[k].add(other.im[k].value());
            self.sq[k].add(other.sq[k].value());
        }
        self.samples += other.samples;
        self.accepted += other.accepted;
    }

    pub fn finish(&self) -> Vec<McEstimate> {
        let n = self.samples as f64;
        (0..self.re.len())
            .map(|k| {
                let mean = C64::new(self.re[k].value() / n, self.im[k].value() / n);
                let var = (self.sq[k].value() / n - mean.norm_sqr()).max(0.0);
                McEstimate {
                    mean,
                    std_err: libm::sqrt(var / (n - 1.0)),
                    samples: self.samples,
                    accepted: self.accepted,
                }
            })
            .collect()
    }
}

fn random_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [C64]) {
    loop {
        let mut total = 0.0;
        for c in out.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *c = C64::new(re, im);
            total += re * re + im * im;
        }
        if total > 1e-300 {
            let inv = 1.0 / libm::sqrt(total);
            out.iter_mut().for_each(|c| *c *= inv);
            return;
        }
    }
}

/// Uniform point on the unit sphere of `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    random_sphere(rng, &mut v);
    v
}

/// Uniform point of the disc `|c| < r`.
fn random_disc<R: Rng + ?Sized>(rng: &mut R, r: f64) -> C64 {
    let rad = r * libm::sqrt(rng.random::<f64>());
    let theta = 2.0 * PI * rng.random::<f64>();
    C64::from_polar(rad, theta)
}

/// Per-block constants for the fiber proposals, independent of `t`.
#[derive(Debug, Clone)]
struct FiberGeometry {
    dims: Vec<usize>,
    exps: Vec<f64>,
    /// `Gamma(n_j / p_j, 1)` laws of the unnormalized block levels.
    levels: Vec<Gamma<f64>>,
    /// Fiber volume at `t` is `exp(log_c0) t^lambda0`.
    log_c0: f64,
    lambda0: f64,
}

impl FiberGeometry {
    fn new(spec: &DomainSpec) -> Self {
        let dims = spec.block_dims().to_vec();
        let exps = spec.exponents().to_vec();
        let levels = dims
            .iter()
            .zip(&exps)
            .map(|(&n, &p)| Gamma::new(n as f64 / p, 1.0).expect("positive shape"))
            .collect();
        let c0 = moment_constant_unchecked(spec, &BlockedMultiIndex::zero(spec));
        Self {
            dims,
            exps,
            levels,
            log_c0: c0.log_value,
            lambda0: c0.lambda,
        }
    }

    /// Draws fiber coordinates over `t` into `w` and returns the importance
    /// weight, zero on rejection.
    fn propose<R: Rng + ?Sized>(
        &self,
        proposal: FiberProposal,
        t: f64,
        rng: &mut R,
        w: &mut [Vec<C64>],
    ) -> f64 {
        match proposal {
            FiberProposal::Polydisc => {
                let mut vol = 1.0;
                let mut level = 0.0;
                for (j, block) in w.iter_mut().enumerate() {
                    let r = libm::pow(t, 1.0 / (2.0 * self.exps[j]));
                    for c in block.iter_mut() {
                        *c = random_disc(rng, r);
                    }
                    vol *= libm::pow(PI * r * r, self.dims[j] as f64);
                    level += block_power(norm_sqr(block), self.exps[j]);
                }
                if level < t {
                    vol
                } else {
                    0.0
                }
            }
            FiberProposal::Radial => {
                // u_j = |w_j|^{2 p_j} / t is Dirichlet(n_1/p_1, .., n_l/p_l; 1)
                // under the uniform law on the fiber.
                let mut total: f64 = rng.sample(Exp1);
                for (j, block) in w.iter_mut().enumerate() {
                    let g: f64 = rng.sample(self.levels[j]);
                    total += g;
                    random_sphere(rng, block);
                    block.iter_mut().for_each(|c| *c *= g);
                }
                for (j, block) in w.iter_mut().enumerate() {
                    let g = libm::sqrt(norm_sqr(block));
                    if g > 0.0 {
                        let r = libm::pow(t * g / total, 1.0 / (2.0 * self.exps[j]));
                        block.iter_mut().for_each(|c| *c *= r / g);
                    }
                }
                libm::exp(self.log_c0 + self.lambda0 * libm::log(t))
            }
        }
    }
}

/// Runs one partition of a domain integral of `f`, which writes `outputs`
/// values for each sample point.
///
/// The base point is drawn from a complex Gaussian matched to the decay
/// `exp(-mu lambda_0 |z|^2)` of the fiber volume and truncated to a ball.
pub fn integrate_domain_partition<F>(
    spec: &DomainSpec,
    outputs: usize,
    cfg: &SamplerConfig,
    part: u32,
    mut f: F,
) -> Result<PartialSums>
where
    F: FnMut(&DomainPoint, &mut [C64]),
{
    cfg.validate()?;
    if part >= cfg.partitions {
        return Err(Error::InvalidArgument("partition index out of range"));
    }
    let geo = FiberGeometry::new(spec);
    let n0 = spec.n0();
    let kappa = spec.mu() * spec.lambda0();
    let cutoff = cfg.z_cutoff.unwrap_or_else(|| libm::sqrt(46.0 / kappa));
    let cutoff_sq = cutoff * cutoff;
    // mass of the Gamma(n0, 1) law below kappa R^2
    let x = kappa * cutoff_sq;
    let mut tail = 0.0;
    let mut term = 1.0;
    for k in 0..n0 {
        if k > 0 {
            term *= x / k as f64;
        }
        tail += term;
    }
    let mass = 1.0 - libm::exp(-x) * tail;
    let base_const = mass * libm::pow(PI / kappa, n0 as f64);
    let sigma = libm::sqrt(0.5 / kappa);

    let mut rng = cfg.partition_rng(part);
    let mut pt = DomainPoint::origin(spec);
    let mut vals = vec![C64::new(0.0, 0.0); outputs];
    let (mut re, mut im, mut sq) = (vec![0.0; outputs], vec![0.0; outputs], vec![0.0; outputs]);
    let n = cfg.partition_len(part);
    let mut accepted = 0;
    for _ in 0..n {
        let zz = loop {
            let mut acc = 0.0;
            for c in pt.z.iter_mut() {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                *c = C64::new(a * sigma, b * sigma);
                acc += c.norm_sqr();
            }
            if acc <= cutoff_sq {
                break acc;
            }
        };
        let t = libm::exp(-spec.mu() * zz);
        let wf = geo.propose(cfg.proposal, t, &mut rng, &mut pt.w);
        if wf == 0.0 {
            continue;
        }
        accepted += 1;
        let weight = base_const * libm::exp(kappa * zz) * wf;
        f(&pt, &mut vals);
        for k in 0..outputs {
            let v = vals[k] * weight;
            re[k] += v.re;
            im[k] += v.im;
            sq[k] += v.norm_sqr();
        }
    }
    let mut out = PartialSums::new(outputs);
    out.absorb(&re, &im, &sq, n, accepted);
    Ok(out)
}

/// Integrates `f` over the domain, running all partitions in order.
pub fn integrate_domain_many<F>(
    spec: &DomainSpec,
    outputs: usize,
    cfg: &SamplerConfig,
    mut f: F,
) -> Result<Vec<McEstimate>>
where
    F: FnMut(&DomainPoint, &mut [C64]),
{
    cfg.validate()?;
    let mut total = PartialSums::new(outputs);
    for part in 0..cfg.partitions {
        let p = integrate_domain_partition(spec, outputs, cfg, part, &mut f)?;
        total.merge(&p);
    }
    Ok(total.finish())
}

pub fn integrate_domain<F>(spec: &DomainSpec, cfg: &SamplerConfig, mut f: F) -> Result<McEstimate>
where
    F: FnMut(&DomainPoint) -> C64,
{
    let mut v = integrate_domain_many(spec, 1, cfg, |pt, out| out[0] = f(pt))?;
    Ok(v.remove(0))
}

fn monomial(w: &[Vec<C64>], alpha: &[Vec<u32>]) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for (wb, ab) in w.iter().zip(alpha) {
        for (&c, &a) in wb.iter().zip(ab) {
            if a > 0 {
                acc *= c.powu(a);
            }
        }
    }
    acc
}

/// Monte-Carlo estimate of `int_D w^alpha conj(w^beta) dV`.
pub fn monomial_inner_product(
    spec: &DomainSpec,
    alpha: &BlockedMultiIndex,
    beta: &BlockedMultiIndex,
    cfg: &SamplerConfig,
) -> Result<McEstimate> {
    alpha.check(spec)?;
    beta.check(spec)?;
    integrate_domain(spec, cfg, |pt| {
        monomial(&pt.w, &alpha.blocks) * monomial(&pt.w, &beta.blocks).conj()
    })
}

/// Runs one partition of the fiber moments `int_{F_t} |w^alpha|^2 dV` for each `alpha`.
pub fn integrate_fiber_partition(
    spec: &DomainSpec,
    t: f64,
    alphas: &[BlockedMultiIndex],
    cfg: &SamplerConfig,
    part: u32,
) -> Result<PartialSums> {
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument("fiber level must be positive"));
    }
    if part >= cfg.partitions {
        return Err(Error::InvalidArgument("partition index out of range"));
    }
    for a in alphas {
        a.check(spec)?;
    }
    let flat: Vec<Vec<u32>> = alphas.iter().map(|a| a.flat()).collect();
    let geo = FiberGeometry::new(spec);
    let mut rng = cfg.partition_rng(part);
    let mut w: Vec<Vec<C64>> = spec.block_dims().iter().map(|&d| vec![C64::new(0.0, 0.0); d]).collect();
    let k = alphas.len();
    let mut sq_coords = vec![0.0; spec.fiber_dim()];
    let (mut re, mut sq) = (vec![0.0; k], vec![0.0; k]);
    let n = cfg.partition_len(part);
    let mut accepted = 0;
    for _ in 0..n {
        let weight = geo.propose(cfg.proposal, t, &mut rng, &mut w);
        if weight == 0.0 {
            continue;
        }
        accepted += 1;
        for (slot, c) in sq_coords.iter_mut().zip(w.iter().flatten()) {
            *slot = c.norm_sqr();
        }
        for (i, a) in flat.iter().enumerate() {
            let mut v = weight;
            for (&x, &e) in sq_coords.iter().zip(a) {
                for _ in 0..e {
                    v *= x;
                }
            }
            re[i] += v;
            sq[i] += v * v;
        }
    }
    let mut out = PartialSums::new(k);
    out.absorb(&re, &vec![0.0; k], &sq, n, accepted);
    Ok(out)
}

/// Fiber moments `int_{F_t} |w^alpha|^2 dV` from one shared sample stream.
pub fn integrate_fiber_moments(
    spec: &DomainSpec,
    t: f64,
    alphas: &[BlockedMultiIndex],
    cfg: &SamplerConfig,
) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    let mut total = PartialSums::new(alphas.len());
    for part in 0..cfg.partitions {
        total.merge(&integrate_fiber_partition(spec, t, alphas, cfg, part)?);
    }
    let est = total.finish();
    if let Some(e) = est.first() {
        if e.acceptance_ratio() < MIN_ACCEPTANCE {
            return Err(Error::LowAcceptance {
                ratio: e.acceptance_ratio(),
            });
        }
    }
    Ok(est)
}

/// `int_{F_t} |w^alpha|^2 dV` with the default proposal.
pub fn integrate_fiber(
    spec: &DomainSpec,
    t: f64,
    alpha: &BlockedMultiIndex,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let cfg = SamplerConfig::new(seed, samples);
    let mut v = integrate_fiber_moments(spec, t, core::slice::from_ref(alpha), &cfg)?;
    Ok(v.remove(0))
}

/// A uniform fiber point together with the sampler's running acceptance ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSample {
    pub w: Vec<Vec<C64>>,
    pub acceptance_ratio: f64,
}

/// Exact uniform sampling of a fiber by polydisc rejection.
#[derive(Debug, Clone)]
pub struct FiberSampler {
    geo: FiberGeometry,
    t: f64,
    attempts: u64,
    accepted: u64,
}

impl FiberSampler {
    pub fn new(spec: &DomainSpec, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument("fiber level must be positive"));
        }
        Ok(Self {
            geo: FiberGeometry::new(spec),
            t,
            attempts: 0,
            accepted: 0,
        })
    }

    pub fn acceptance_ratio(&self) -> f64 {
        if self.attempts == 0 {
            return 1.0;
        }
        self.accepted as f64 / self.attempts as f64
    }

    /// Volume of the enclosing polydisc.
    pub fn polydisc_volume(&self) -> f64 {
        self.geo
            .dims
            .iter()
            .zip(&self.geo.exps)
            .map(|(&n, &p)| libm::pow(PI * libm::pow(self.t, 1.0 / p), n as f64))
            .product()
    }

    /// Fiber volume estimated from the acceptance ratio so far.
    pub fn volume_estimate(&self) -> f64 {
        self.acceptance_ratio() * self.polydisc_volume()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<FiberSample> {
        let mut w: Vec<Vec<C64>> = self.geo.dims.iter().map(|&d| vec![C64::new(0.0, 0.0); d]).collect();
        loop {
            self.attempts += 1;
            if self.geo.propose(FiberProposal::Polydisc, self.t, rng, &mut w) > 0.0 {
                self.accepted += 1;
                return Ok(FiberSample {
                    w,
                    acceptance_ratio: self.acceptance_ratio(),
                });
            }
            if self.attempts >= MIN_ATTEMPTS_BEFORE_GIVING_UP && self.acceptance_ratio() < MIN_ACCEPTANCE {
                return Err(Error::LowAcceptance {
                    ratio: self.acceptance_ratio(),
                });
            }
        }
    }
}

/// One uniform point of the fiber `{sum |w_j|^{2 p_j} < t}`.
pub fn sample_fiber<R: Rng + ?Sized>(spec: &DomainSpec, t: f64, rng: &mut R) -> Result<FiberSample> {
    FiberSampler::new(spec, t)?.sample(rng)
}
