//! Random test data: unitaries, points in and on the domain, automorphisms.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::automorphism::{Automorphism, Generator, GeneratorWord};
use crate::domain::{DomainPoint, DomainSpec};
use crate::error::{Error, Result};
use crate::mc::random_unit_vector;
use crate::C64;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Point of `C^n` uniform in the ball of radius `radius`.
pub fn random_ball_point<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<C64> {
    let r = radius * libm::pow(rng.random::<f64>(), 1.0 / (2.0 * n as f64));
    random_unit_vector(rng, n).into_iter().map(|c| c * r).collect()
}

/// Uniform point of the open simplex `{u >= 0, sum u = 1}` in `k` coordinates.
fn simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + 1e-300).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn place_blocks<R: Rng + ?Sized>(spec: &DomainSpec, rng: &mut R, t: f64, levels: &[f64]) -> Vec<Vec<C64>> {
    spec.block_dims()
        .iter()
        .zip(spec.exponents())
        .zip(levels)
        .map(|((&d, &p), &u)| {
            let r = libm::pow(t * u, 1.0 / (2.0 * p));
            random_unit_vector(rng, d).into_iter().map(|c| c * r).collect()
        })
        .collect()
}

/// Interior point with `|z| <= z_radius` and fiber level at most `depth`
/// times the local bound, `0 < depth < 1`.
pub fn random_interior_point<R: Rng + ?Sized>(
    spec: &DomainSpec,
    rng: &mut R,
    z_radius: f64,
    depth: f64,
) -> DomainPoint {
    let z = random_ball_point(rng, spec.n0(), z_radius);
    let t = libm::exp(-spec.mu() * z.iter().map(|c| c.norm_sqr()).sum::<f64>());
    let scale = depth * rng.random::<f64>();
    let mut levels = simplex(rng, spec.num_blocks() + 1);
    levels.pop();
    levels.iter_mut().for_each(|u| *u *= scale);
    let w = place_blocks(spec, rng, t, &levels);
    DomainPoint::new(z, w)
}

/// Boundary point whose blocks `epsilon..l` all have norm at least
/// `min_block_norm`, so it lies on the smooth strongly pseudoconvex stratum.
pub fn random_b0_point<R: Rng + ?Sized>(
    spec: &DomainSpec,
    rng: &mut R,
    z_radius: f64,
    min_block_norm: f64,
) -> Result<DomainPoint> {
    for _ in 0..10_000 {
        let z = random_ball_point(rng, spec.n0(), z_radius);
        let t = libm::exp(-spec.mu() * z.iter().map(|c| c.norm_sqr()).sum::<f64>());
        let levels = simplex(rng, spec.num_blocks());
        let w = place_blocks(spec, rng, t, &levels);
        let ok = (spec.epsilon()..spec.num_blocks())
            .all(|j| libm::sqrt(w[j].iter().map(|c| c.norm_sqr()).sum::<f64>()) >= min_block_norm);
        if ok {
            return Ok(DomainPoint::new(z, w));
        }
    }
    Err(Error::InvalidArgument("minimum block norm is unreachable"))
}

/// Boundary point with block `null_block` set to zero and the others nonzero.
pub fn random_boundary_point_with_null_block<R: Rng + ?Sized>(
    spec: &DomainSpec,
    rng: &mut R,
    z_radius: f64,
    null_block: usize,
) -> Result<DomainPoint> {
    let l = spec.num_blocks();
    if null_block >= l {
        return Err(Error::InvalidArgument("block index out of range"));
    }
    if l < 2 {
        return Err(Error::InvalidArgument("a second block is needed to reach the boundary"));
    }
    let z = random_ball_point(rng, spec.n0(), z_radius);
    let t = libm::exp(-spec.mu() * z.iter().map(|c| c.norm_sqr()).sum::<f64>());
    let rest = simplex(rng, l - 1);
    let mut levels = Vec::with_capacity(l);
    let mut it = rest.into_iter();
    for j in 0..l {
        levels.push(if j == null_block { 0.0 } else { it.next().unwrap_or(0.0) });
    }
    let mut w = place_blocks(spec, rng, t, &levels);
    w[null_block].iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
    Ok(DomainPoint::new(z, w))
}

/// Random block permutation respecting block dimensions and exponents, with
/// Haar unitaries on every block.
pub fn random_block_map<R: Rng + ?Sized>(
    dims: &[usize],
    exps: &[f64],
    rng: &mut R,
) -> (Vec<usize>, Vec<DMatrix<C64>>) {
    let l = dims.len();
    let mut sigma: Vec<usize> = (0..l).collect();
    let mut done = vec![false; l];
    for j0 in 0..l {
        if done[j0] {
            continue;
        }
        let class: Vec<usize> = (j0..l)
            .filter(|&j| dims[j] == dims[j0] && exps[j] == exps[j0])
            .collect();
        class.iter().for_each(|&j| done[j] = true);
        let mut shuffled = class.clone();
        shuffled.shuffle(rng);
        for (&j, &i) in class.iter().zip(&shuffled) {
            sigma[j] = i;
        }
    }
    let gammas = dims.iter().map(|&d| haar_unitary(rng, d)).collect();
    (sigma, gammas)
}

/// Random normal form with `|a| <= a_radius`.
pub fn random_automorphism<R: Rng + ?Sized>(spec: &DomainSpec, rng: &mut R, a_radius: f64) -> Automorphism {
    let a = random_ball_point(rng, spec.n0(), a_radius);
    let linear = haar_unitary(rng, spec.n0());
    let (sigma, gammas) = random_block_map(spec.block_dims(), spec.exponents(), rng);
    Automorphism {
        a,
        linear,
        sigma,
        gammas,
    }
}

pub fn random_generator<R: Rng + ?Sized>(spec: &DomainSpec, rng: &mut R, a_radius: f64) -> Generator {
    match rng.random_range(0..3) {
        0 => Generator::Linear(haar_unitary(rng, spec.n0())),
        1 => {
            let (sigma, gammas) = random_block_map(spec.block_dims(), spec.exponents(), rng);
            Generator::Block { sigma, gammas }
        }
        _ => Generator::Translation(random_ball_point(rng, spec.n0(), a_radius)),
    }
}

pub fn random_word<R: Rng + ?Sized>(spec: &DomainSpec, rng: &mut R, len: usize, a_radius: f64) -> GeneratorWord {
    GeneratorWord((0..len).map(|_| random_generator(spec, rng, a_radius)).collect())
}
