//! Numerics for generalized Fock-Bargmann-Hartogs domains
//!
//! ```text
//! D = { (z, w_1, .., w_l) in C^{n0} x C^{n_1} x .. x C^{n_l} : sum_j |w_j|^{2 p_j} < exp(-mu |z|^2) }
//! ```
//!
//! The crate covers the defining function and boundary strata, fiber moments,
//! the Bergman kernel series, the Levi form, the automorphism group in normal
//! form, recovery of that normal form from point evaluations, and Monte-Carlo
//! integration used as an independent oracle.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod automorphism;
pub mod bergman;
pub mod counterexample;
pub mod domain;
pub mod ellipsoid;
pub mod error;
pub mod levi;
pub mod mc;
pub mod moments;
pub mod multiindex;
pub mod rigidity;
pub mod sampling;

pub type C64 = num_complex::Complex64;

pub use automorphism::{compose, inverse, transformation_rule_check, Automorphism, Generator, GeneratorWord};
pub use bergman::{
    cartan_matrix, cartan_matrix_fd, fock_bargmann_kernel, kernel_eval, reproducing_check, yamamori_eval,
    CartanMatrix, KernelSeries, KernelSeriesConfig, KernelValue,
};
pub use counterexample::{counterexample_map, CounterexampleKind, ProperMapFixture};
pub use domain::{
    boundary_lift, classify_boundary, hermitian_dot, is_interior, rho, BoundaryStratum, DomainPoint, DomainSpec,
    StratumTag, DEFAULT_BOUNDARY_TOL,
};
pub use ellipsoid::{decompose_linear_ellipsoid_map, EllipsoidSpec, LinearMapVerdict};
pub use error::{Error, Result};
pub use levi::{classify_pseudoconvexity, levi_form, tangent_basis, PseudoconvexityClass, TangentVector};
pub use mc::{integrate_domain, integrate_fiber, sample_fiber, McEstimate, SamplerConfig};
pub use moments::{bergman_coefficient, dangelo_ball_integral, moment_constant, MomentConstant};
pub use multiindex::{enumerate_multiindices, BlockedMultiIndex};
pub use rigidity::{decompose_automorphism, decompose_map, DecomposeConfig};
