//! Proper holomorphic maps that are not biholomorphisms.

use alloc::vec::Vec;

use crate::domain::{DomainPoint, DomainSpec};
use crate::error::{Error, Result};


#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleKind {
    /// `(z, w_1, w_2, ..) -> (z, w_1^2, w_2, ..)` onto the domain with `p_1`
    /// halved. Needs `n_1 = 1` and `p_1 != 1`.
    FiberSquare,
    /// `(z, w) -> (sqrt(2) z, w^2)` from a domain to itself. Needs a single
    /// one-dimensional fiber block.
    ScaledSquare,
}

impl CounterexampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CounterexampleKind::FiberSquare => "fiber_square",
            CounterexampleKind::ScaledSquare => "scaled_square",
        }
    }
}

/// A proper map with its source and target domains.
#[derive(Debug, Clone, PartialEq)]
pub struct ProperMapFixture {
    pub kind: CounterexampleKind,
    pub src: DomainSpec,
    pub dst: DomainSpec,
}

impl ProperMapFixture {
    pub fn apply(&self, pt: &DomainPoint) -> Result<DomainPoint> {
        pt.check(&self.src)?;
        let mut out = pt.clone();
        match self.kind {
            CounterexampleKind::FiberSquare => {
                out.w[0][0] = pt.w[0][0] * pt.w[0][0];
            }
            CounterexampleKind::ScaledSquare => {
                out.z.iter_mut().for_each(|c| *c *= core::f64::consts::SQRT_2);
                out.w[0][0] = pt.w[0][0] * pt.w[0][0];
            }
        }
        Ok(out)
    }
}

pub fn counterexample_map(spec: &DomainSpec, kind: CounterexampleKind) -> Result<ProperMapFixture> {
    if spec.block_dims()[0] != 1 {
        return Err(Error::InvalidSpec("first fiber block must be one-dimensional"));
    }
    match kind {
        CounterexampleKind::FiberSquare => {
            if spec.exponents()[0] == 1.0 {
                return Err(Error::InvalidSpec("first exponent must differ from 1"));
            }
            let mut exps: Vec<f64> = spec.exponents().to_vec();
            exps[0] /= 2.0;
            let dst = DomainSpec::new(spec.n0(), spec.block_dims(), &exps, spec.mu())?;
            Ok(ProperMapFixture {
                kind,
                src: spec.clone(),
                dst,
            })
        }
        CounterexampleKind::ScaledSquare => {
            if spec.num_blocks() != 1 {
                return Err(Error::InvalidSpec("exactly one fiber block is required"));
            }
            Ok(ProperMapFixture {
                kind,
                src: spec.clone(),
                dst: spec.clone(),
            })
        }
    }
}

/// The point with the first fiber coordinate negated. Both fixtures send it
/// to the same image as `pt`.
pub fn fiber_partner(pt: &DomainPoint) -> DomainPoint {
    let mut q = pt.clone();
    q.w[0][0] = -q.w[0][0];
    q
}
