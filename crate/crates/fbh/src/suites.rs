//! Verification suites shared by the command line and the acceptance tests.
//!
//! Each suite returns named outcomes with the tolerance they were judged
//! against, plus a JSON payload for the report.

use fbh_core::automorphism::{finite_difference_jacobian, transformation_rule_check};
use fbh_core::bergman::{cartan_matrix, cartan_matrix_fd, yamamori_eval, ReproducingReport};
use fbh_core::counterexample::{counterexample_map, CounterexampleKind, ProperMapFixture};
use fbh_core::domain::{classify_boundary, DEFAULT_BOUNDARY_TOL};
use fbh_core::ellipsoid::{block_map_matrix, BlockDecomposition, ClassifierConfig, LinearMapVerdict};
use fbh_core::levi::{levi_form_fd, EIGEN_TOL};
use fbh_core::mc::random_unit_vector;
use fbh_core::rigidity::parameter_distance;
use fbh_core::sampling::{
    haar_unitary, random_automorphism, random_b0_point, random_ball_point, random_block_map,
    random_boundary_point_with_null_block, random_interior_point, random_word,
};
use fbh_core::{
    boundary_lift, classify_pseudoconvexity, compose, decompose_automorphism, decompose_linear_ellipsoid_map,
    decompose_map, enumerate_multiindices, inverse, levi_form, moment_constant, rho, tangent_basis, Automorphism,
    BlockedMultiIndex, DecomposeConfig, DomainPoint, DomainSpec, KernelSeries, KernelSeriesConfig, SamplerConfig,
    StratumTag, TangentVector, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::parallel;
use crate::report::{summarize, Outcome, Status};

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub outcomes: Vec<Outcome>,
    pub output: Value,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(Outcome::passed)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest coordinate gap, relative to the size of `y` once it exceeds 1.
fn scaled_distance(x: &DomainPoint, y: &DomainPoint) -> f64 {
    x.flatten()
        .iter()
        .zip(y.flatten())
        .map(|(a, b)| (a - b).norm() / b.norm().max(1.0))
        .fold(0.0, f64::max)
}

fn alpha_label(a: &BlockedMultiIndex) -> String {
    a.blocks
        .iter()
        .map(|b| b.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Specs whose fiber has total dimension at most `max_fiber_dim`, with at most
/// `max_blocks` blocks and exponents from `exps`. Blocks are listed in
/// canonical order and specs that coincide after merging unit blocks are
/// dropped.
pub fn fiber_grid(max_fiber_dim: usize, max_blocks: usize, exps: &[f64]) -> Vec<DomainSpec> {
    let mut kinds = Vec::new();
    for n in 1..=max_fiber_dim {
        for &p in exps {
            kinds.push((n, p));
        }
    }
    let mut out: Vec<DomainSpec> = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..kinds.len()).map(|k| vec![k]).collect();
    while let Some(idx) = stack.pop() {
        let dims: Vec<usize> = idx.iter().map(|&k| kinds[k].0).collect();
        let ps: Vec<f64> = idx.iter().map(|&k| kinds[k].1).collect();
        let total: usize = dims.iter().sum();
        if total > max_fiber_dim {
            continue;
        }
        let spec = DomainSpec::new(1, &dims, &ps, 1.0).expect("grid spec");
        if !out.iter().any(|s| s.block_dims() == spec.block_dims() && s.exponents() == spec.exponents()) {
            out.push(spec);
        }
        if idx.len() < max_blocks {
            let last = *idx.last().unwrap();
            for k in last..kinds.len() {
                let mut next = idx.clone();
                next.push(k);
                stack.push(next);
            }
        }
    }
    out.sort_by(|a, b| {
        (a.fiber_dim(), a.num_blocks())
            .cmp(&(b.fiber_dim(), b.num_blocks()))
            .then_with(|| a.block_dims().cmp(b.block_dims()))
            .then_with(|| a.exponents().partial_cmp(b.exponents()).unwrap())
    });
    out
}

/// `n0 in {1,2}`, one or two one-dimensional blocks with exponents in
/// `{0.5, 1, 2, 3}`, `mu in {0.5, 1, 2}`.
pub fn invariant_grid() -> Vec<DomainSpec> {
    let exps = [0.5, 1.0, 2.0, 3.0];
    let mut out = Vec::new();
    for n0 in [1, 2] {
        for mu in [0.5, 1.0, 2.0] {
            for &p in &exps {
                out.push(DomainSpec::new(n0, &[1], &[p], mu).unwrap());
            }
            for &p in &exps {
                for &q in &exps {
                    out.push(DomainSpec::new(n0, &[1, 1], &[p, q], mu).unwrap());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub alpha: String,
    pub closed_form: f64,
    pub mc_estimate: f64,
    pub std_err: f64,
    pub rel_err: f64,
}

/// Fiber moments `int_{F_t} |w^alpha|^2` for `|alpha| <= max_degree`, closed
/// form against Monte-Carlo.
pub fn moments_check(
    spec: &DomainSpec,
    max_degree: u32,
    t: f64,
    cfg: &SamplerConfig,
    workers: usize,
    tol: f64,
) -> fbh_core::Result<(SuiteResult, Vec<MomentRow>)> {
    let alphas: Vec<BlockedMultiIndex> = enumerate_multiindices(spec, max_degree).collect();
    let est = parallel::integrate_fiber_moments(spec, t, &alphas, cfg, workers)?;
    let mut rows = Vec::with_capacity(alphas.len());
    let mut outcomes = Vec::with_capacity(alphas.len());
    for (a, e) in alphas.iter().zip(&est) {
        let exact = moment_constant(spec, a)?.at(t);
        let rel = (e.mean.re - exact).abs() / exact;
        let label = alpha_label(a);
        outcomes.push(Outcome::at_most(format!("moment[{label}]"), rel, tol));
        rows.push(MomentRow {
            alpha: label,
            closed_form: exact,
            mc_estimate: e.mean.re,
            std_err: e.std_err,
            rel_err: rel,
        });
    }
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let output = json!({ "level": t, "moments": rows.len(), "max_rel_err": worst });
    Ok((SuiteResult { outcomes, output }, rows))
}

pub fn moments_csv(rows: &[MomentRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
}

/// Kernel series against the closed ball kernel for `n0`-dimensional base and
/// `m`-dimensional ball fiber.
pub fn yamamori_check(
    n0: usize,
    m: usize,
    mu: f64,
    pairs: usize,
    seed: u64,
    degree: u32,
    tol: f64,
) -> fbh_core::Result<SuiteResult> {
    let spec = DomainSpec::new(n0, &[m], &[1.0], mu)?;
    let series = KernelSeries::new(&spec, KernelSeriesConfig::fixed(degree))?;
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let p = random_interior_point(&spec, &mut rng, 1.0, 0.8);
        let q = random_interior_point(&spec, &mut rng, 1.0, 0.8);
        let k = series.eval(&p, &q)?.value;
        let y = yamamori_eval(n0, m, mu, &p, &q, degree)?;
        worst = worst.max((k - y).norm() / y.norm());
    }
    Ok(SuiteResult {
        outcomes: vec![Outcome::at_most(format!("closed_ball_kernel[n0={n0},m={m}]"), worst, tol)],
        output: json!({ "pairs": pairs, "max_rel_err": worst }),
    })
}

/// `K(0,0) > 0`, positive definite `T_D(0,0)`, and the closed form against
/// finite differences of `ln K`.
pub fn cartan_check(spec: &DomainSpec, step: f64, tol: f64) -> fbh_core::Result<SuiteResult> {
    let cm = cartan_matrix(spec);
    let series = KernelSeries::new(spec, KernelSeriesConfig::fixed(8))?;
    let fd = cartan_matrix_fd(&series, step)?;
    let mut gap: f64 = 0.0;
    for (a, b) in fd.iter().zip(cm.entries.iter()) {
        gap = gap.max((a - b).norm() / b.norm().max(1.0));
    }
    let min = cm.min_eigenvalue();
    Ok(SuiteResult {
        outcomes: vec![
            Outcome::above("kernel_at_origin", cm.kernel_at_origin, 0.0),
            Outcome::above("min_eigenvalue", min, 0.0),
            Outcome::at_most("finite_difference_gap", gap, tol),
        ],
        output: json!({
            "kernel_at_origin": cm.kernel_at_origin,
            "min_eigenvalue": min,
            "eigenvalues": cm.eigenvalues(),
            "finite_difference_gap": gap,
        }),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LeviConfig {
    pub b0_points: usize,
    pub vectors: usize,
    pub b1_points: usize,
    pub lower_bound_tol: f64,
    pub null_tol: f64,
    pub fd_step: f64,
    pub fd_tol: f64,
}

impl Default for LeviConfig {
    fn default() -> Self {
        Self {
            b0_points: 10,
            vectors: 50,
            b1_points: 5,
            lower_bound_tol: 1e-9,
            null_tol: 1e-12,
            fd_step: 1e-4,
            fd_tol: 1e-5,
        }
    }
}

fn random_tangent(spec: &DomainSpec, basis: &[TangentVector], rng: &mut ChaCha8Rng) -> fbh_core::Result<TangentVector> {
    let coef = random_unit_vector(rng, basis.len());
    let mut flat = vec![C64::new(0.0, 0.0); spec.dim()];
    for (c, b) in coef.iter().zip(basis) {
        for (x, y) in flat.iter_mut().zip(b.flatten()) {
            *x += c * y;
        }
    }
    TangentVector::from_flat(spec, &flat)
}

/// Positivity and lower bound of the Levi form on `b0`, the null direction on
/// `b1`, and the analytic form against finite differences of `rho`.
pub fn levi_check(spec: &DomainSpec, cfg: &LeviConfig, seed: u64) -> fbh_core::Result<SuiteResult> {
    let mut rng = rng(seed);
    let mut min_eig = f64::INFINITY;
    let mut bound_gap = f64::NEG_INFINITY;
    let mut fd_gap: f64 = 0.0;
    for _ in 0..cfg.b0_points {
        let pt = random_b0_point(spec, &mut rng, 1.0, 0.05)?;
        let rep = classify_pseudoconvexity(spec, &pt, DEFAULT_BOUNDARY_TOL)?;
        min_eig = min_eig.min(rep.min_eigenvalue.unwrap_or(f64::NEG_INFINITY));
        let basis = tangent_basis(spec, &pt)?;
        if basis.is_empty() {
            continue;
        }
        for k in 0..cfg.vectors {
            let t = random_tangent(spec, &basis, &mut rng)?;
            let r = levi_form(spec, &pt, &t)?;
            bound_gap = bound_gap.max(r.lower_bound_witness - r.value);
            if k < 5 {
                let fd = levi_form_fd(spec, &pt, &t, cfg.fd_step)?;
                fd_gap = fd_gap.max((fd - r.value).abs() / r.value.abs().max(1.0));
            }
        }
    }
    let mut outcomes = vec![
        Outcome::above("b0_min_levi_eigenvalue", min_eig, 0.0),
        Outcome::at_most("b0_lower_bound_violation", bound_gap.max(0.0), cfg.lower_bound_tol),
        Outcome::at_most("analytic_vs_finite_difference", fd_gap, cfg.fd_tol),
    ];
    let weak: Vec<usize> = (spec.epsilon()..spec.num_blocks()).filter(|&j| spec.exponents()[j] > 1.0).collect();
    let mut null_max = None;
    if spec.num_blocks() >= 2 && !weak.is_empty() && cfg.b1_points > 0 {
        let mut worst: f64 = 0.0;
        let mut all_weak = true;
        for i in 0..cfg.b1_points {
            let j = weak[i % weak.len()];
            let pt = random_boundary_point_with_null_block(spec, &mut rng, 1.0, j)?;
            let rep = classify_pseudoconvexity(spec, &pt, DEFAULT_BOUNDARY_TOL)?;
            if rep.stratum != StratumTag::B1 {
                // another null block with exponent below 1 would make it b2
                all_weak = false;
                continue;
            }
            worst = worst.max(rep.null_value.map_or(f64::INFINITY, f64::abs));
        }
        outcomes.push(Outcome::flag("b1_points_classified_weak", all_weak));
        outcomes.push(Outcome::at_most("b1_null_direction", worst, cfg.null_tol));
        null_max = Some(worst);
    }
    Ok(SuiteResult {
        outcomes,
        output: json!({
            "b0_points": cfg.b0_points,
            "min_levi_eigenvalue": min_eig,
            "max_lower_bound_violation": bound_gap.max(0.0),
            "max_fd_gap": fd_gap,
            "max_b1_null_value": null_max,
        }),
    })
}

/// Per-point classification for `classify-boundary`.
pub fn classify_points(spec: &DomainSpec, points: &[DomainPoint], tol: f64) -> fbh_core::Result<SuiteResult> {
    let mut out = Vec::with_capacity(points.len());
    let mut outcomes = Vec::with_capacity(points.len());
    for (i, pt) in points.iter().enumerate() {
        let stratum = classify_boundary(spec, pt, tol)?;
        if !stratum.tag.is_boundary() {
            out.push(json!({ "stratum": stratum.tag.as_str(), "classification": null, "min_levi_eigenvalue": null }));
            continue;
        }
        let rep = classify_pseudoconvexity(spec, pt, tol)?;
        out.push(json!({
            "stratum": rep.stratum.as_str(),
            "classification": rep.classification.as_str(),
            "min_levi_eigenvalue": rep.min_eigenvalue,
        }));
        let metric = match rep.stratum {
            StratumTag::B0 => rep.min_eigenvalue.unwrap_or(f64::NEG_INFINITY),
            _ => rep.null_value.unwrap_or(0.0),
        };
        outcomes.push(Outcome {
            name: format!("point[{i}].certified"),
            status: if rep.certified { Status::Pass } else { Status::Fail },
            metric,
            tolerance: if rep.stratum == StratumTag::B0 { EIGEN_TOL } else { 1e-12 },
        });
    }
    Ok(SuiteResult {
        outcomes,
        output: Value::Array(out),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GroupLawConfig {
    pub words: usize,
    pub points: usize,
    pub boundary: usize,
    pub word_len: usize,
    pub a_radius: f64,
    pub tol: f64,
}

impl Default for GroupLawConfig {
    fn default() -> Self {
        Self {
            words: 100,
            points: 1000,
            boundary: 100,
            word_len: 3,
            a_radius: 0.5,
            tol: 1e-11,
        }
    }
}

/// Composition, inverse and associativity pointwise, the zero section, the
/// sign of `rho`, and boundary strata.
pub fn group_laws(spec: &DomainSpec, cfg: &GroupLawConfig, seed: u64) -> fbh_core::Result<SuiteResult> {
    let mut rng = rng(seed);
    let words: Vec<_> = (0..cfg.words.max(1)).map(|_| random_word(spec, &mut rng, cfg.word_len, cfg.a_radius)).collect();
    let forms: Vec<Automorphism> = words.iter().map(|w| w.normal_form(spec)).collect::<Result<_, _>>()?;
    let inverses: Vec<Automorphism> = forms.iter().map(|f| inverse(spec, f)).collect::<Result<_, _>>()?;
    let k = forms.len();
    let (mut comp, mut inv, mut assoc) = (0.0f64, 0.0f64, 0.0f64);
    let mut zero_ok = true;
    let mut sign_ok = true;
    for i in 0..cfg.points {
        let w = i % k;
        let (f, g, h) = (&forms[w], &forms[(w + 1) % k], &forms[(w + 2) % k]);
        let p = random_interior_point(spec, &mut rng, 1.0, 0.9);
        let fp = f.apply(spec, &p)?;
        comp = comp.max(scaled_distance(&words[w].apply(spec, &p)?, &fp));
        inv = inv.max(scaled_distance(&inverses[w].apply(spec, &fp)?, &p));
        let left = compose(spec, &compose(spec, f, g)?, h)?;
        let right = compose(spec, f, &compose(spec, g, h)?)?;
        assoc = assoc.max(scaled_distance(&left.apply(spec, &p)?, &right.apply(spec, &p)?));
        sign_ok &= rho(spec, &fp)? < 0.0;

        let z = random_ball_point(&mut rng, spec.n0(), 2.0);
        let img = f.apply(spec, &DomainPoint::on_zero_section(z, spec))?;
        zero_ok &= img.w.iter().flatten().all(|c| *c == C64::new(0.0, 0.0));
    }
    let mut strata_mismatch = 0usize;
    for i in 0..cfg.boundary {
        let f = &forms[i % k];
        let b = if i % 2 == 1 && spec.num_blocks() >= 2 {
            let j = rng.random_range(0..spec.num_blocks());
            random_boundary_point_with_null_block(spec, &mut rng, 1.0, j)?
        } else {
            random_b0_point(spec, &mut rng, 1.0, 0.05)?
        };
        let before = classify_boundary(spec, &b, DEFAULT_BOUNDARY_TOL)?;
        let after = classify_boundary(spec, &f.apply(spec, &b)?, 1e-9)?;
        if before.tag != after.tag || before.null_blocks.len() != after.null_blocks.len() {
            strata_mismatch += 1;
        }
    }
    Ok(SuiteResult {
        outcomes: vec![
            Outcome::at_most("composition", comp, cfg.tol),
            Outcome::at_most("inverse", inv, cfg.tol),
            Outcome::at_most("associativity", assoc, cfg.tol),
            Outcome::flag("zero_section_exact", zero_ok),
            Outcome::flag("interior_preserved", sign_ok),
            Outcome::at_most("boundary_strata_mismatches", strata_mismatch as f64, 0.0),
        ],
        output: json!({
            "words": k,
            "points": cfg.points,
            "boundary_samples": cfg.boundary,
            "max_composition_gap": comp,
            "max_inverse_gap": inv,
            "max_associativity_gap": assoc,
        }),
    })
}

/// Jacobian determinant of random automorphisms against finite differences.
pub fn jacobian_check(spec: &DomainSpec, count: usize, seed: u64, tol: f64) -> fbh_core::Result<SuiteResult> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let f = random_automorphism(spec, &mut rng, 1.0);
        let p = random_interior_point(spec, &mut rng, 1.0, 0.8);
        let fd = finite_difference_jacobian(spec, |x| f.apply(spec, x), &p, 1e-5)?.determinant();
        let exact = f.jacobian_det(spec, &p)?;
        worst = worst.max((exact - fd).norm() / exact.norm().max(1.0));
    }
    Ok(SuiteResult {
        outcomes: vec![Outcome::at_most("jacobian_vs_finite_difference", worst, tol)],
        output: json!({ "pairs": count, "max_gap": worst }),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TransformationConfig {
    pub pairs: usize,
    pub degree: u32,
    pub linear_tol: f64,
    pub translation_tol: f64,
    pub a_radius: f64,
}

impl Default for TransformationConfig {
    fn default() -> Self {
        Self {
            pairs: 20,
            degree: 60,
            linear_tol: 1e-8,
            translation_tol: 1e-6,
            a_radius: 1.0,
        }
    }
}

/// `K(phi p, phi q) J(p) conj(J(q)) = K(p, q)` for the rotation part and for
/// translations, at a fixed truncation degree on both sides.
pub fn transformation_check(
    spec: &DomainSpec,
    cfg: &TransformationConfig,
    seed: u64,
) -> fbh_core::Result<SuiteResult> {
    let series = KernelSeries::new(spec, KernelSeriesConfig::fixed(cfg.degree))?;
    let mut rng = rng(seed);
    let mut lin: f64 = 0.0;
    let mut tr: f64 = 0.0;
    for _ in 0..cfg.pairs {
        let p = random_interior_point(spec, &mut rng, 0.5, 0.5);
        let q = random_interior_point(spec, &mut rng, 0.5, 0.5);
        let (sigma, gammas) = random_block_map(spec.block_dims(), spec.exponents(), &mut rng);
        let phi_d = Automorphism {
            a: vec![C64::new(0.0, 0.0); spec.n0()],
            linear: haar_unitary(&mut rng, spec.n0()),
            sigma,
            gammas,
        };
        let phi_a = Automorphism::translation(spec, random_ball_point(&mut rng, spec.n0(), cfg.a_radius));
        lin = lin.max(transformation_rule_check(&series, &phi_d, &p, &q).unwrap_or(f64::INFINITY));
        tr = tr.max(transformation_rule_check(&series, &phi_a, &p, &q).unwrap_or(f64::INFINITY));
    }
    Ok(SuiteResult {
        outcomes: vec![
            Outcome::at_most("rotation_part", lin, cfg.linear_tol),
            Outcome::at_most("translation", tr, cfg.translation_tol),
        ],
        output: json!({ "pairs": cfg.pairs, "degree": cfg.degree, "max_rotation_err": lin, "max_translation_err": tr }),
    })
}

/// One transformation-rule evaluation for user-supplied data.
pub fn transformation_single(
    spec: &DomainSpec,
    phi: &Automorphism,
    p: &DomainPoint,
    q: &DomainPoint,
    degree: u32,
    tol: f64,
) -> fbh_core::Result<SuiteResult> {
    let series = KernelSeries::new(spec, KernelSeriesConfig::fixed(degree))?;
    let err = transformation_rule_check(&series, phi, p, q)?;
    Ok(SuiteResult {
        outcomes: vec![Outcome::at_most("transformation_rule", err, tol)],
        output: json!({ "rel_error": err, "degree": degree }),
    })
}

/// Hidden normal forms recovered from point evaluations, and the linear
/// ellipsoid classifier on constructed and perturbed maps.
pub fn rigidity_check(spec: &DomainSpec, count: usize, seed: u64, tol: f64) -> fbh_core::Result<SuiteResult> {
    let mut rng = rng(seed);
    let dcfg = DecomposeConfig {
        tol,
        seed,
        ..DecomposeConfig::default()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let hidden = random_automorphism(spec, &mut rng, 1.0);
        let got = decompose_automorphism(spec, |p| hidden.apply(spec, p), &dcfg);
        worst = worst.max(got.map_or(f64::INFINITY, |g| parameter_distance(&g, &hidden)));
    }

    let e = spec.fibers();
    let ccfg = ClassifierConfig {
        tol,
        ..ClassifierConfig::default()
    };
    let n = e.dim();
    let mut missed = 0usize;
    let mut accepted_bad = 0usize;
    for k in 0..count {
        let (sigma, gammas) = random_block_map(&e.block_dims, &e.exponents, &mut rng);
        let truth = BlockDecomposition { sigma, gammas };
        let m = block_map_matrix(&e, &e, &truth);
        match decompose_linear_ellipsoid_map(&e, &e, &m, &ccfg)? {
            LinearMapVerdict::Rigid(d) => {
                let close = d.sigma == truth.sigma
                    && d.gammas.iter().zip(&truth.gammas).all(|(g, t)| (g - t).norm() <= tol);
                if !close {
                    missed += 1;
                }
            }
            LinearMapVerdict::Rejected(_) => missed += 1,
        }

        let mut bad = m.clone();
        let eps = 10f64.powf(-6.0 + 3.0 * rng.random::<f64>());
        let i = rng.random_range(0..n);
        if k % 2 == 0 {
            bad.row_mut(i).iter_mut().for_each(|c| *c *= 1.0 + eps);
        } else {
            let j = rng.random_range(0..n);
            bad[(i, j)] += random_unit_vector(&mut rng, 1)[0] * eps;
        }
        if decompose_linear_ellipsoid_map(&e, &e, &bad, &ccfg)?.is_rigid() {
            accepted_bad += 1;
        }
    }
    Ok(SuiteResult {
        outcomes: vec![
            Outcome::at_most("normal_form_parameter_error", worst, tol),
            Outcome::at_most("linear_maps_missed", missed as f64, 0.0),
            Outcome::at_most("perturbed_maps_accepted", accepted_bad as f64, 0.0),
        ],
        output: json!({ "instances": count, "max_parameter_error": worst }),
    })
}

/// Normal form of a word plus the checks that it agrees with the word and is
/// recovered from point evaluations.
pub fn decompose_word(
    spec: &DomainSpec,
    word: &fbh_core::GeneratorWord,
    points: usize,
    seed: u64,
    tol: f64,
) -> fbh_core::Result<(SuiteResult, Automorphism)> {
    let nf = word.normal_form(spec)?;
    let mut rng = rng(seed);
    let mut gap: f64 = 0.0;
    for _ in 0..points {
        let p = random_interior_point(spec, &mut rng, 1.0, 0.9);
        gap = gap.max(scaled_distance(&word.apply(spec, &p)?, &nf.apply(spec, &p)?));
    }
    let dcfg = DecomposeConfig {
        seed,
        ..DecomposeConfig::default()
    };
    let recovered = decompose_automorphism(spec, |p| word.apply(spec, p), &dcfg)
        .map_or(f64::INFINITY, |g| parameter_distance(&g, &nf));
    Ok((
        SuiteResult {
            outcomes: vec![
                Outcome::at_most("word_vs_normal_form", gap, 1e-11),
                Outcome::at_most("recovered_from_evaluations", recovered, tol),
            ],
            output: Value::Null,
        },
        nf,
    ))
}

/// The two proper non-biholomorphic fixtures used by `counterexample-demo`.
pub fn default_fixtures() -> Vec<ProperMapFixture> {
    vec![
        counterexample_map(&DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap(), CounterexampleKind::FiberSquare).unwrap(),
        counterexample_map(&DomainSpec::new(1, &[1], &[1.0], 1.0).unwrap(), CounterexampleKind::ScaledSquare).unwrap(),
    ]
}

/// Boundary goes to boundary, interior to interior, and the rigidity
/// decomposition refuses the map.
pub fn counterexample_check(
    fixture: &ProperMapFixture,
    samples: usize,
    seed: u64,
    tol: f64,
) -> fbh_core::Result<SuiteResult> {
    let mut rng = rng(seed);
    let (src, dst) = (&fixture.src, &fixture.dst);
    let mut worst: f64 = 0.0;
    let mut interior_ok = true;
    for _ in 0..samples {
        let z = random_ball_point(&mut rng, src.n0(), 1.5);
        let dir: Vec<Vec<C64>> = src.block_dims().iter().map(|&d| random_unit_vector(&mut rng, d)).collect();
        let b = boundary_lift(src, &z, &dir)?;
        worst = worst.max(rho(src, &b)?.abs()).max(rho(dst, &fixture.apply(&b)?)?.abs());
        let p = random_interior_point(src, &mut rng, 1.5, 0.95);
        interior_ok &= rho(dst, &fixture.apply(&p)?)? < 0.0;
    }
    let rejected = matches!(
        decompose_map(src, dst, |p| fixture.apply(p), &DecomposeConfig::default()),
        Err(fbh_core::Error::NotABiholomorphism { .. })
    );
    let name = fixture.kind.as_str();
    Ok(SuiteResult {
        outcomes: vec![
            Outcome::at_most(format!("{name}.boundary_to_boundary"), worst, tol),
            Outcome::flag(format!("{name}.interior_to_interior"), interior_ok),
            Outcome::flag(format!("{name}.rejected_by_decomposition"), rejected),
        ],
        output: json!({ "kind": name, "samples": samples, "max_abs_rho": worst }),
    })
}

/// Interior point used by the reproducing check: every fiber coordinate
/// nonzero, at 60% of the boundary level.
pub fn reproducing_point(spec: &DomainSpec) -> fbh_core::Result<DomainPoint> {
    let z = vec![C64::new(0.15, -0.1); spec.n0()];
    let dir: Vec<Vec<C64>> = spec
        .block_dims()
        .iter()
        .map(|&d| (0..d).map(|k| C64::from_polar(1.0, 0.7 + k as f64)).collect())
        .collect();
    let mut pt = boundary_lift(spec, &z, &dir)?;
    pt.w.iter_mut().flatten().for_each(|c| *c *= 0.6);
    Ok(pt)
}

/// `int f(q) K(pt, q) dV(q) = f(pt)` for fiber monomials of degree at most 1,
/// and orthogonality of distinct monomials.
///
/// A relative error above `tol` is only a warning while the estimate stays
/// within `warn_sigma` standard errors of the target.
pub fn reproducing_suite(
    spec: &DomainSpec,
    cfg: &SamplerConfig,
    workers: usize,
    tol: f64,
    warn_sigma: f64,
) -> fbh_core::Result<SuiteResult> {
    // the series only needs to beat the Monte-Carlo error by a wide margin
    let kcfg = KernelSeriesConfig {
        rel_tol: 1e-8,
        ..KernelSeriesConfig::default()
    };
    let series = KernelSeries::new(spec, kcfg)?;
    let pt = reproducing_point(spec)?;
    let alphas: Vec<BlockedMultiIndex> = enumerate_multiindices(spec, 1).collect();
    let reports = reproducing_reports(&series, &alphas, &pt, cfg, workers)?;
    let mut outcomes = Vec::new();
    let mut rows = Vec::new();
    for r in &reports {
        let label = alpha_label(&r.alpha);
        let mut o = Outcome::at_most(format!("reproduce[{label}]"), r.rel_error, tol);
        if o.status == Status::Fail && r.z_score <= warn_sigma {
            o.status = Status::Warn;
        }
        outcomes.push(o);
        rows.push(json!({ "alpha": label, "rel_error": r.rel_error, "z_score": r.z_score }));
    }

    let pairs: Vec<(usize, usize)> =
        (0..alphas.len()).flat_map(|i| (i + 1..alphas.len()).map(move |j| (i, j))).collect();
    let flat: Vec<Vec<u32>> = alphas.iter().map(|a| a.flat()).collect();
    let orth_cfg = SamplerConfig {
        seed: cfg.seed ^ 0x9e37_79b9_7f4a_7c15,
        ..cfg.clone()
    };
    let est = parallel::integrate_domain_many(spec, pairs.len(), &orth_cfg, workers, |q, out| {
        for (slot, &(i, j)) in out.iter_mut().zip(&pairs) {
            *slot = mono(&q.w, &flat[i]) * mono(&q.w, &flat[j]).conj();
        }
    })?;
    for (&(i, j), e) in pairs.iter().zip(&est) {
        let sigmas = if e.std_err > 0.0 { e.mean.norm() / e.std_err } else { 0.0 };
        let mut o = Outcome::at_most(
            format!("orthogonal[{} ; {}]", alpha_label(&alphas[i]), alpha_label(&alphas[j])),
            sigmas,
            3.0,
        );
        if o.status == Status::Fail && sigmas <= warn_sigma {
            o.status = Status::Warn;
        }
        outcomes.push(o);
    }
    let overall = summarize("reproducing", &outcomes);
    Ok(SuiteResult {
        outcomes,
        output: json!({ "samples": cfg.samples, "monomials": rows, "overall": overall.status }),
    })
}

thread_local! {
    static SCRATCH: std::cell::RefCell<Vec<C64>> = const { std::cell::RefCell::new(Vec::new()) };
}

fn mono(w: &[Vec<C64>], a: &[u32]) -> C64 {
    w.iter().flatten().zip(a).filter(|(_, &e)| e > 0).map(|(c, &e)| c.powu(e)).product()
}

/// Same estimates as `fbh_core::bergman::reproducing_check_many`, spread over
/// `workers` threads.
fn reproducing_reports(
    series: &KernelSeries,
    alphas: &[BlockedMultiIndex],
    pt: &DomainPoint,
    cfg: &SamplerConfig,
    workers: usize,
) -> fbh_core::Result<Vec<ReproducingReport>> {
    if rho(series.spec(), pt)? >= 0.0 {
        return Err(fbh_core::Error::NotInterior);
    }
    let flat: Vec<Vec<u32>> = alphas.iter().map(|a| a.flat()).collect();
    let est = parallel::integrate_domain_many(series.spec(), alphas.len(), cfg, workers, |q, out| {
        let k = SCRATCH.with_borrow_mut(|buf| series.eval_with(pt, q, buf))
            .map_or(C64::new(f64::NAN, f64::NAN), |v| v.value);
        for (slot, a) in out.iter_mut().zip(&flat) {
            *slot = mono(&q.w, a) * k;
        }
    })?;
    Ok(alphas
        .iter()
        .zip(est)
        .zip(&flat)
        .map(|((a, e), f)| {
            let target = mono(&pt.w, f);
            let diff = (e.mean - target).norm();
            ReproducingReport {
                alpha: a.clone(),
                target,
                rel_error: diff / target.norm(),
                z_score: diff / e.std_err,
                estimate: e,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_grid_has_no_duplicates() {
        let grid = fiber_grid(4, 3, &[0.5, 1.0, 2.0, 3.0]);
        for (i, a) in grid.iter().enumerate() {
            assert!(a.fiber_dim() <= 4 && a.num_blocks() <= 3);
            for b in &grid[i + 1..] {
                assert!(a.block_dims() != b.block_dims() || a.exponents() != b.exponents());
            }
        }
        // unit blocks merge: [1,1] with p = (1,1) is the 2-ball
        let small = fiber_grid(2, 2, &[1.0]);
        assert_eq!(small.len(), 2);
    }

    #[test]
    fn invariant_grid_size() {
        assert_eq!(invariant_grid().len(), 2 * 3 * (4 + 16));
    }

    #[test]
    fn reproducing_point_is_interior() {
        for spec in [
            DomainSpec::new(1, &[2], &[0.5], 1.0).unwrap(),
            DomainSpec::new(1, &[1, 1], &[2.0, 3.0], 2.0).unwrap(),
        ] {
            let pt = reproducing_point(&spec).unwrap();
            assert!(rho(&spec, &pt).unwrap() < 0.0);
            assert!(pt.w.iter().flatten().all(|c| c.norm() > 0.0));
        }
    }
}
