use fbh_core::counterexample::fiber_partner;
use fbh_core::domain::{boundary_lift, rho};
use fbh_core::ellipsoid::{block_map_matrix, BlockDecomposition, ClassifierConfig, EllipsoidRejection};
use fbh_core::mc::random_unit_vector;
use fbh_core::rigidity::parameter_distance;
use fbh_core::sampling::{random_automorphism, random_block_map, random_interior_point, random_word};
use fbh_core::{
    counterexample_map, decompose_automorphism, decompose_linear_ellipsoid_map, CounterexampleKind, DecomposeConfig,
    DomainSpec, EllipsoidSpec, Error, LinearMapVerdict, C64,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn specs() -> Vec<DomainSpec> {
    vec![
        DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap(),
        DomainSpec::new(2, &[1, 1], &[3.0, 3.0], 0.5).unwrap(),
        DomainSpec::new(1, &[2, 1, 1], &[1.0, 0.5, 0.5], 2.0).unwrap(),
        DomainSpec::new(2, &[1, 2, 2], &[2.0, 2.0, 2.0], 1.0).unwrap(),
    ]
}

#[test]
fn hidden_normal_forms_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let cfg = DecomposeConfig::default();
    for spec in specs() {
        for _ in 0..10 {
            let hidden = random_automorphism(&spec, &mut rng, 1.5);
            let got = decompose_automorphism(&spec, |p| hidden.apply(&spec, p), &cfg).unwrap();
            assert!(parameter_distance(&got, &hidden) <= 1e-9);
        }
        // words hide the normal form behind several generators
        let word = random_word(&spec, &mut rng, 5, 0.7);
        let nf = word.normal_form(&spec).unwrap();
        let got = decompose_automorphism(&spec, |p| word.apply(&spec, p), &cfg).unwrap();
        assert!(parameter_distance(&got, &nf) <= 1e-9);
    }
}

fn ellipsoid_specs() -> Vec<EllipsoidSpec> {
    vec![
        EllipsoidSpec::new(vec![1, 1], vec![2.0, 2.0]).unwrap(),
        EllipsoidSpec::new(vec![2, 1, 1], vec![1.0, 3.0, 3.0]).unwrap(),
        EllipsoidSpec::new(vec![1, 2, 1, 2], vec![0.5, 0.5, 0.5, 0.5]).unwrap(),
    ]
}

#[test]
fn linear_ellipsoid_maps_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = ClassifierConfig::default();
    for e in ellipsoid_specs() {
        for _ in 0..30 {
            let (sigma, gammas) = random_block_map(&e.block_dims, &e.exponents, &mut rng);
            let truth = BlockDecomposition { sigma, gammas };
            let m = block_map_matrix(&e, &e, &truth);
            match decompose_linear_ellipsoid_map(&e, &e, &m, &cfg).unwrap() {
                LinearMapVerdict::Rigid(d) => {
                    assert_eq!(d.sigma, truth.sigma);
                    for (g, t) in d.gammas.iter().zip(&truth.gammas) {
                        assert!((g - t).norm() < 1e-12);
                    }
                }
                LinearMapVerdict::Rejected(r) => panic!("{r:?}"),
            }
        }
    }
}

#[test]
fn perturbed_maps_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let cfg = ClassifierConfig::default();
    for e in ellipsoid_specs() {
        let n = e.dim();
        for k in 0..30 {
            let (sigma, gammas) = random_block_map(&e.block_dims, &e.exponents, &mut rng);
            let mut m = block_map_matrix(&e, &e, &BlockDecomposition { sigma, gammas });
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let eps = 1e-6 * (1.0 + rng.random::<f64>());
            if k % 2 == 0 {
                // scaling keeps the block pattern but breaks unitarity
                m.row_mut(i).iter_mut().for_each(|c| *c *= 1.0 + eps);
            } else {
                let d = random_unit_vector(&mut rng, 1)[0] * eps;
                m[(i, j)] += d;
            }
            let verdict = decompose_linear_ellipsoid_map(&e, &e, &m, &cfg).unwrap();
            assert!(!verdict.is_rigid(), "{e:?} k={k}");
        }
    }
}

#[test]
fn mismatched_ellipsoids_have_no_permutation() {
    let src = EllipsoidSpec::new(vec![1, 1], vec![2.0, 3.0]).unwrap();
    let dst = EllipsoidSpec::new(vec![1, 1], vec![2.0, 2.0]).unwrap();
    let m = DMatrix::<C64>::identity(2, 2);
    assert_eq!(
        decompose_linear_ellipsoid_map(&src, &dst, &m, &ClassifierConfig::default()).unwrap(),
        LinearMapVerdict::Rejected(EllipsoidRejection::NoMatchingPermutation)
    );
}

#[test]
fn counterexamples_keep_boundary_and_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let fixtures = [
        counterexample_map(&DomainSpec::new(1, &[1, 1], &[3.0, 2.0], 1.0).unwrap(), CounterexampleKind::FiberSquare)
            .unwrap(),
        counterexample_map(&DomainSpec::new(2, &[1], &[1.0], 0.5).unwrap(), CounterexampleKind::ScaledSquare).unwrap(),
    ];
    for f in &fixtures {
        for _ in 0..200 {
            let z: Vec<C64> = (0..f.src.n0()).map(|_| C64::new(rng.random(), rng.random())).collect();
            let dir: Vec<Vec<C64>> = f.src.block_dims().iter().map(|&d| random_unit_vector(&mut rng, d)).collect();
            let b = boundary_lift(&f.src, &z, &dir).unwrap();
            assert!(rho(&f.src, &b).unwrap().abs() <= 1e-10);
            assert!(rho(&f.dst, &f.apply(&b).unwrap()).unwrap().abs() <= 1e-10);

            let p = random_interior_point(&f.src, &mut rng, 1.0, 0.9);
            assert!(rho(&f.dst, &f.apply(&p).unwrap()).unwrap() < 0.0);
            assert_eq!(f.apply(&p).unwrap(), f.apply(&fiber_partner(&p)).unwrap());
        }
        let res = fbh_core::decompose_map(&f.src, &f.dst, |p| f.apply(p), &DecomposeConfig::default());
        assert!(matches!(res, Err(Error::NotABiholomorphism { .. })), "{res:?}");
    }
}
