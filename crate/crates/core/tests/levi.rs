use fbh_core::domain::{classify_boundary, StratumTag, DEFAULT_BOUNDARY_TOL};
use fbh_core::levi::{cauchy_schwarz_discriminant, levi_form_fd, levi_matrix, tangent_residual, EIGEN_TOL};
use fbh_core::mc::random_unit_vector;
use fbh_core::sampling::{random_b0_point, random_boundary_point_with_null_block};
use fbh_core::{
    classify_pseudoconvexity, levi_form, tangent_basis, DomainSpec, PseudoconvexityClass, TangentVector, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn specs() -> Vec<DomainSpec> {
    vec![
        DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap(),
        DomainSpec::new(1, &[1, 1], &[0.5, 3.0], 2.0).unwrap(),
        DomainSpec::new(2, &[2, 1], &[1.0, 2.0], 0.5).unwrap(),
        DomainSpec::new(2, &[1, 2], &[3.0, 0.5], 1.0).unwrap(),
    ]
}

fn random_tangent(spec: &DomainSpec, basis: &[TangentVector], rng: &mut ChaCha8Rng) -> TangentVector {
    let coef = random_unit_vector(rng, basis.len());
    let mut flat = vec![C64::new(0.0, 0.0); spec.dim()];
    for (c, b) in coef.iter().zip(basis) {
        for (x, y) in flat.iter_mut().zip(b.flatten()) {
            *x += c * y;
        }
    }
    TangentVector::from_flat(spec, &flat).unwrap()
}

#[test]
fn strongly_pseudoconvex_stratum() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for spec in specs() {
        for _ in 0..25 {
            let pt = random_b0_point(&spec, &mut rng, 1.0, 0.05).unwrap();
            let rep = classify_pseudoconvexity(&spec, &pt, DEFAULT_BOUNDARY_TOL).unwrap();
            assert_eq!(rep.classification, PseudoconvexityClass::StronglyPseudoconvexPoint);
            assert!(rep.certified);
            assert!(rep.min_eigenvalue.unwrap() > EIGEN_TOL);

            let basis = tangent_basis(&spec, &pt).unwrap();
            assert_eq!(basis.len(), spec.dim() - 1);
            let m = levi_matrix(&spec, &pt).unwrap();
            assert!((&m - m.adjoint()).norm() < 1e-12);
            for _ in 0..10 {
                let t = random_tangent(&spec, &basis, &mut rng);
                assert!(tangent_residual(&spec, &pt, &t).unwrap() < 1e-12);
                let r = levi_form(&spec, &pt, &t).unwrap();
                assert!(r.value >= r.lower_bound_witness - 1e-9);
                assert!(cauchy_schwarz_discriminant(&spec, &pt, &t).unwrap() >= -1e-9);
                let fd = levi_form_fd(&spec, &pt, &t, 1e-4).unwrap();
                assert!((fd - r.value).abs() <= 1e-5 * r.value.abs().max(1.0), "{fd} vs {}", r.value);
            }
        }
    }
}

#[test]
fn weakly_pseudoconvex_null_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let spec = DomainSpec::new(1, &[1, 1], &[0.5, 3.0], 2.0).unwrap();
    for _ in 0..20 {
        let pt = random_boundary_point_with_null_block(&spec, &mut rng, 1.0, 1).unwrap();
        assert_eq!(classify_boundary(&spec, &pt, DEFAULT_BOUNDARY_TOL).unwrap().tag, StratumTag::B1);
        let rep = classify_pseudoconvexity(&spec, &pt, DEFAULT_BOUNDARY_TOL).unwrap();
        assert_eq!(rep.classification, PseudoconvexityClass::WeaklyPseudoconvexPoint);
        assert!(rep.null_value.unwrap().abs() <= 1e-12);
        let t = rep.null_direction.unwrap();
        assert!(tangent_residual(&spec, &pt, &t).unwrap() <= 1e-12);
        // the Levi form of rho itself along T0 also vanishes
        assert!(levi_form_fd(&spec, &pt, &t, 1e-3).unwrap().abs() <= 1e-5);
    }
}

#[test]
fn non_smooth_stratum() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let spec = DomainSpec::new(1, &[1, 1], &[0.5, 3.0], 2.0).unwrap();
    let pt = random_boundary_point_with_null_block(&spec, &mut rng, 1.0, 0).unwrap();
    let rep = classify_pseudoconvexity(&spec, &pt, DEFAULT_BOUNDARY_TOL).unwrap();
    assert_eq!(rep.stratum, StratumTag::B2);
    assert_eq!(rep.classification, PseudoconvexityClass::NotSmooth);
}

#[test]
fn levi_form_refuses_other_strata() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let spec = DomainSpec::new(1, &[1, 1], &[1.0, 2.0], 1.0).unwrap();
    let pt = random_boundary_point_with_null_block(&spec, &mut rng, 1.0, 1).unwrap();
    let t = TangentVector {
        zeta: vec![C64::new(0.0, 0.0)],
        eta: vec![vec![C64::new(0.0, 0.0)], vec![C64::new(1.0, 0.0)]],
    };
    assert!(levi_form(&spec, &pt, &t).is_err());
}
