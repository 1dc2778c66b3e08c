use std::f64::consts::PI;

use fbh_core::mc::{integrate_fiber_moments, monomial_inner_product, FiberProposal, FiberSampler};
use fbh_core::moments::{domain_volume, fiber_volume};
use fbh_core::{
    enumerate_multiindices, integrate_domain, moment_constant, sample_fiber, BlockedMultiIndex, DomainSpec,
    SamplerConfig, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn fiber_moments_match_closed_form() {
    let specs = [
        DomainSpec::new(1, &[1], &[0.5], 1.0).unwrap(),
        DomainSpec::new(1, &[2, 1], &[1.0, 3.0], 1.0).unwrap(),
        DomainSpec::new(1, &[1, 1, 1], &[2.0, 0.5, 3.0], 1.0).unwrap(),
        DomainSpec::new(1, &[2, 2], &[2.0, 0.5], 1.0).unwrap(),
    ];
    for spec in &specs {
        let alphas: Vec<BlockedMultiIndex> = enumerate_multiindices(spec, 3).collect();
        for proposal in [FiberProposal::Radial, FiberProposal::Polydisc] {
            let cfg = SamplerConfig {
                proposal,
                ..SamplerConfig::new(3, 1_000_000)
            };
            let t = 0.7;
            let est = integrate_fiber_moments(spec, t, &alphas, &cfg).unwrap();
            for (a, e) in alphas.iter().zip(&est) {
                let exact = moment_constant(spec, a).unwrap().at(t);
                let err = (e.mean.re - exact).abs();
                if proposal == FiberProposal::Radial {
                    assert!(err <= 0.02 * exact, "{spec:?} {a:?}: {} vs {exact}", e.mean.re);
                }
                assert!(err <= 5.0 * e.std_err + 1e-9 * exact, "{spec:?} {a:?} {proposal:?}: se {}", e.std_err);
            }
        }
    }
}

#[test]
fn one_dimensional_moments_by_hand() {
    // int_{|w|^{2p} < t} |w|^{2a} = pi t^{(a+1)/p} / (a+1)
    for p in [0.5, 1.0, 2.0, 3.0] {
        let spec = DomainSpec::new(1, &[1], &[p], 1.0).unwrap();
        for a in 0..4u32 {
            let m = moment_constant(&spec, &BlockedMultiIndex::new(vec![vec![a]])).unwrap();
            let t: f64 = 1.7;
            let exact = PI * t.powf((a as f64 + 1.0) / p) / (a as f64 + 1.0);
            assert!((m.at(t) - exact).abs() < 1e-13 * exact);
        }
    }
}

#[test]
fn disc_and_ball_volumes_by_rejection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let disc = DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap();
    let mut s = FiberSampler::new(&disc, 1.0).unwrap();
    for _ in 0..1000 {
        s.sample(&mut rng).unwrap();
    }
    assert_eq!(s.acceptance_ratio(), 1.0);
    assert!((s.volume_estimate() - PI).abs() < 1e-15);

    let ball = DomainSpec::new(1, &[2], &[1.0], 1.0).unwrap();
    let mut s = FiberSampler::new(&ball, 1.0).unwrap();
    for _ in 0..1_000_000 {
        let x = s.sample(&mut rng).unwrap();
        debug_assert!(x.w[0].iter().map(|c| c.norm_sqr()).sum::<f64>() < 1.0);
    }
    let exact = PI * PI / 2.0;
    assert!((s.volume_estimate() - exact).abs() < 0.01 * exact);
    assert!((s.volume_estimate() - fiber_volume(&ball, 1.0)).abs() < 0.01 * exact);

    let one = sample_fiber(&ball, 0.25, &mut rng).unwrap();
    assert!(one.w[0].iter().map(|c| c.norm_sqr()).sum::<f64>() < 0.25);
}

#[test]
fn domain_volume_and_truncation() {
    let spec = DomainSpec::new(1, &[1, 1], &[2.0, 0.5], 1.5).unwrap();
    let exact = domain_volume(&spec);
    let est = integrate_domain(&spec, &SamplerConfig::new(5, 400_000), |_| C64::new(1.0, 0.0)).unwrap();
    assert!((est.mean.re - exact).abs() <= 1e-12 * exact);

    // cutting the base at radius r keeps the fraction 1 - exp(-kappa r^2) of the volume
    let r = 0.4;
    let cfg = SamplerConfig {
        z_cutoff: Some(r),
        ..SamplerConfig::new(6, 400_000)
    };
    let cut = integrate_domain(&spec, &cfg, |_| C64::new(1.0, 0.0)).unwrap();
    let kappa = spec.mu() * spec.lambda0();
    let expect = exact * (1.0 - (-kappa * r * r).exp());
    assert!((cut.mean.re - expect).abs() <= 1e-12 * expect);

    let polydisc = SamplerConfig {
        proposal: FiberProposal::Polydisc,
        ..SamplerConfig::new(5, 400_000)
    };
    let est = integrate_domain(&spec, &polydisc, |_| C64::new(1.0, 0.0)).unwrap();
    assert!((est.mean.re - exact).abs() <= 4.0 * est.std_err);
}

#[test]
fn standard_error_matches_seed_spread() {
    let spec = DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap();
    let alpha = BlockedMultiIndex::new(vec![vec![1]]);
    let n = 20_000;
    let mut means = Vec::new();
    let mut errs = Vec::new();
    for seed in 0..20 {
        let e = monomial_inner_product(&spec, &alpha, &alpha, &SamplerConfig::new(seed, n)).unwrap();
        means.push(e.mean.re);
        errs.push(e.std_err);
    }
    let m = means.iter().sum::<f64>() / 20.0;
    let spread = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 19.0).sqrt();
    let reported = errs.iter().sum::<f64>() / 20.0;
    assert!(spread > 0.5 * reported && spread < 1.6 * reported, "{spread} vs {reported}");

    let big = monomial_inner_product(&spec, &alpha, &alpha, &SamplerConfig::new(0, 16 * n)).unwrap();
    let ratio = reported / big.std_err;
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
}

#[test]
fn monomials_are_orthogonal() {
    let spec = DomainSpec::new(1, &[2], &[2.0], 1.0).unwrap();
    let alphas: Vec<BlockedMultiIndex> = enumerate_multiindices(&spec, 2).collect();
    let cfg = SamplerConfig::new(9, 100_000);
    let mut outside = 0;
    let mut total = 0;
    for (i, a) in alphas.iter().enumerate() {
        for b in &alphas[i + 1..] {
            let e = monomial_inner_product(&spec, a, b, &cfg).unwrap();
            total += 1;
            if e.mean.norm() > 3.0 * e.std_err {
                outside += 1;
            }
        }
    }
    // at 3 sigma per complex value a few strays are expected
    assert!(outside * 10 <= total, "{outside} of {total}");
}

#[test]
fn results_are_deterministic_per_seed() {
    let spec = DomainSpec::new(2, &[1], &[0.5], 1.0).unwrap();
    let cfg = SamplerConfig::new(77, 10_000);
    let a = integrate_domain(&spec, &cfg, |p| p.z[0]).unwrap();
    let b = integrate_domain(&spec, &cfg, |p| p.z[0]).unwrap();
    assert_eq!(a, b);
    let c = integrate_domain(&spec, &SamplerConfig::new(78, 10_000), |p| p.z[0]).unwrap();
    assert_ne!(a.mean, c.mean);
}
