use std::f64::consts::PI;

use fbh_core::bergman::{cartan_matrix, cartan_matrix_fd, yamamori_eval, KernelSeries, KernelSeriesConfig};
use fbh_core::sampling::{haar_unitary, random_interior_point};
use fbh_core::{DomainPoint, DomainSpec, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn agrees_with_closed_ball_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (n0, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        let mu = 0.8;
        let spec = DomainSpec::new(n0, &[m], &[1.0], mu).unwrap();
        let series = KernelSeries::new(&spec, KernelSeriesConfig::fixed(60)).unwrap();
        for _ in 0..20 {
            let p = random_interior_point(&spec, &mut rng, 1.0, 0.8);
            let q = random_interior_point(&spec, &mut rng, 1.0, 0.8);
            let k = series.eval(&p, &q).unwrap().value;
            let y = yamamori_eval(n0, m, mu, &p, &q, 60).unwrap();
            assert!(rel(k, y) <= 1e-8, "n0={n0} m={m}: {k} vs {y}");
        }
    }
}

#[test]
fn ball_kernel_in_closed_form_for_one_variable() {
    // |w|^2 < e^{-|z|^2} in C^2, z = s = 0: (1/pi^2) sum (k+1)^2 x^k = (1+x)/(pi^2 (1-x)^3)
    let spec = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
    let series = KernelSeries::new(&spec, KernelSeriesConfig::default()).unwrap();
    let w = C64::new(0.3, 0.2);
    let p = DomainPoint::new(vec![C64::new(0.0, 0.0)], vec![vec![w]]);
    let x = w.norm_sqr();
    let exact = (1.0 + x) / (PI * PI * (1.0 - x).powi(3));
    let v = series.eval(&p, &p).unwrap();
    assert!((v.value.re - exact).abs() < 1e-9 * exact);
    assert!(v.degree_used < 60);
}

#[test]
fn diagonal_partial_sums_increase() {
    let spec = DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap();
    let p = DomainPoint::new(vec![C64::new(0.4, -0.1)], vec![vec![C64::new(0.5, 0.3)]]);
    let mut prev = 0.0;
    for d in 0..30 {
        let v = KernelSeries::new(&spec, KernelSeriesConfig::fixed(d)).unwrap().eval(&p, &p).unwrap();
        assert_eq!(v.value.im, 0.0);
        assert!(v.value.re >= prev);
        prev = v.value.re;
    }
    assert!(prev > 0.0);
}

#[test]
fn cartan_matrix_matches_finite_differences() {
    let specs = [
        DomainSpec::new(1, &[2], &[2.0], 1.0).unwrap(),
        DomainSpec::new(2, &[1, 1], &[0.5, 3.0], 0.5).unwrap(),
        DomainSpec::new(1, &[1, 2], &[1.0, 2.0], 2.0).unwrap(),
    ];
    for spec in &specs {
        let cm = cartan_matrix(spec);
        let series = KernelSeries::new(spec, KernelSeriesConfig::fixed(8)).unwrap();
        let fd = cartan_matrix_fd(&series, 1e-4).unwrap();
        for i in 0..spec.dim() {
            for j in 0..spec.dim() {
                let t = cm.entries[(i, j)];
                assert!((fd[(i, j)] - t).norm() <= 1e-5 * t.norm().max(1.0), "{spec:?} ({i},{j}): {} vs {t}", fd[(i, j)]);
            }
        }
        assert!(cm.kernel_at_origin > 0.0);
        assert!(cm.min_eigenvalue() > 0.0);
    }
}

#[test]
fn cartan_base_block_for_ball_fibers() {
    let spec = DomainSpec::new(2, &[3], &[1.0], 0.5).unwrap();
    let cm = cartan_matrix(&spec);
    assert!((cm.entries[(0, 0)].re - 1.5).abs() < 1e-14);
    assert!((cm.entries[(1, 1)].re - 1.5).abs() < 1e-14);
}

fn spec_strategy() -> impl Strategy<Value = DomainSpec> {
    let exps = prop::sample::select(vec![0.5, 1.0, 2.0, 3.0]);
    (1usize..=2, prop::collection::vec((1usize..=2, exps), 1..=2), prop::sample::select(vec![0.5, 1.0, 2.0]))
        .prop_map(|(n0, blocks, mu)| {
            let dims: Vec<usize> = blocks.iter().map(|b| b.0).collect();
            let exps: Vec<f64> = blocks.iter().map(|b| b.1).collect();
            DomainSpec::new(n0, &dims, &exps, mu).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hermitian_symmetry(spec in spec_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let series = KernelSeries::new(&spec, KernelSeriesConfig::fixed(12)).unwrap();
        let p = random_interior_point(&spec, &mut rng, 1.0, 0.7);
        let q = random_interior_point(&spec, &mut rng, 1.0, 0.7);
        let a = series.eval(&p, &q).unwrap().value;
        let b = series.eval(&q, &p).unwrap().value;
        prop_assert!((a - b.conj()).norm() <= 1e-14 * a.norm());
    }

    #[test]
    fn invariant_under_block_rotations(spec in spec_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let series = KernelSeries::new(&spec, KernelSeriesConfig::fixed(16)).unwrap();
        let p = random_interior_point(&spec, &mut rng, 1.0, 0.7);
        let q = random_interior_point(&spec, &mut rng, 1.0, 0.7);
        let u = haar_unitary(&mut rng, spec.n0());
        let vs: Vec<DMatrix<C64>> = spec.block_dims().iter().map(|&d| haar_unitary(&mut rng, d)).collect();
        let rotate = |x: &DomainPoint| -> DomainPoint {
            let z = (DMatrix::from_row_slice(1, spec.n0(), &x.z) * &u).iter().copied().collect();
            let w = x.w.iter().zip(&vs).map(|(b, v)| (DMatrix::from_row_slice(1, b.len(), b) * v).iter().copied().collect()).collect();
            DomainPoint::new(z, w)
        };
        let a = series.eval(&p, &q).unwrap().value;
        let b = series.eval(&rotate(&p), &rotate(&q)).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-10 * a.norm(), "{} vs {}", a, b);
    }

    #[test]
    fn cartan_matrix_is_positive(spec in spec_strategy()) {
        let cm = cartan_matrix(&spec);
        prop_assert!(cm.kernel_at_origin > 0.0);
        prop_assert!(cm.hermitian_defect() <= 1e-10);
        prop_assert!(cm.min_eigenvalue() > 0.0);
    }
}
