use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fbh_core::counterexample::counterexample_map;
use fbh_core::sampling::random_word;
use fbh_core::{
    yamamori_eval, CounterexampleKind, DomainPoint, DomainSpec, KernelSeries, KernelSeriesConfig, SamplerConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::io::{read_json, AutomorphismFile, IoError, MapFile, PointFile, PointPair, SpecFile, WordFile};
use crate::parallel::worker_count;
use crate::report::{Outcome, RunReport};
use crate::suites::{self, SuiteResult};

#[derive(Debug, Parser)]
#[command(name = "fbh", version, about = "Numerical checks on generalized Fock-Bargmann-Hartogs domains")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Domain spec JSON: {"n0":..,"n":[..],"p":[..],"mu":..}
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sample count; its meaning depends on the subcommand
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Series truncation degree, or the multi-index bound for moments-check
    #[arg(long, global = true)]
    max_degree: Option<u32>,
    /// Overrides the main tolerance of the subcommand
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluates K(p, q) for the points in --points {"p":..,"q":..}
    KernelEval {
        #[arg(long)]
        points: PathBuf,
    },
    /// Strata and Levi certificates for --points [..], or a seeded sweep
    ClassifyBoundary {
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Closed-form fiber moments against Monte-Carlo
    MomentsCheck {
        /// Writes the per-moment table here
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Fiber level t
        #[arg(long, default_value_t = 0.6)]
        level: f64,
    },
    /// K(0,0) and the log-kernel Hessian at the origin
    CartanCheck,
    /// Reproducing property and orthogonality by Monte-Carlo
    VerifyReproducing,
    /// Transformation rule for --phi on --points, or a seeded sweep
    VerifyTransformation {
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Normal form of the word in --word, or a seeded round-trip sweep
    DecomposeAutomorphism {
        #[arg(long)]
        word: Option<PathBuf>,
    },
    /// Seeded sweep of the group laws and boundary preservation
    CheckGroupLaws,
    /// Proper maps that keep the boundary but are not automorphisms
    CounterexampleDemo,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KernelEval { .. } => "kernel-eval",
            Command::ClassifyBoundary { .. } => "classify-boundary",
            Command::MomentsCheck { .. } => "moments-check",
            Command::CartanCheck => "cartan-check",
            Command::VerifyReproducing => "verify-reproducing",
            Command::VerifyTransformation { .. } => "verify-transformation",
            Command::DecomposeAutomorphism { .. } => "decompose-automorphism",
            Command::CheckGroupLaws => "check-group-laws",
            Command::CounterexampleDemo => "counterexample-demo",
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Input(#[from] IoError),
    #[error("--spec is required for {0}")]
    MissingSpec(&'static str),
    #[error("{0}")]
    Numeric(#[from] fbh_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

struct Loaded {
    file: SpecFile,
    spec: DomainSpec,
}

fn load_spec(common: &Common) -> Result<Option<Loaded>, CliError> {
    let Some(path) = &common.spec else {
        return Ok(None);
    };
    let file: SpecFile = read_json(path)?;
    let spec = file.to_spec()?;
    Ok(Some(Loaded { file, spec }))
}

fn point_list(path: &Path, spec: &DomainSpec) -> Result<Vec<DomainPoint>, CliError> {
    let files: Vec<PointFile> = read_json(path)?;
    Ok(files.iter().map(|f| f.to_point(spec)).collect::<Result<_, _>>()?)
}

fn point_pair(path: &Path, spec: &DomainSpec) -> Result<(DomainPoint, DomainPoint), CliError> {
    let pair: PointPair = read_json(path)?;
    Ok((pair.p.to_point(spec)?, pair.q.to_point(spec)?))
}

fn merge(parts: Vec<(String, SuiteResult)>) -> (Vec<Outcome>, Value) {
    let mut outcomes = Vec::new();
    let mut output = serde_json::Map::new();
    for (prefix, r) in parts {
        outcomes.extend(r.outcomes.into_iter().map(|mut o| {
            if !prefix.is_empty() {
                o.name = format!("{prefix}.{}", o.name);
            }
            o
        }));
        output.insert(if prefix.is_empty() { "result".into() } else { prefix }, r.output);
    }
    (outcomes, Value::Object(output))
}

fn execute(cli: &Cli) -> Result<(Vec<Outcome>, Value, Option<String>), CliError> {
    let c = &cli.common;
    let name = cli.command.name();
    let loaded = load_spec(c)?;
    let need = || loaded.as_ref().map(|l| &l.spec).ok_or(CliError::MissingSpec(name));
    let workers = worker_count();
    let digest = loaded.as_ref().map(|l| l.file.digest());

    let (outcomes, output) = match &cli.command {
        Command::KernelEval { points } => {
            let spec = need()?;
            let (p, q) = point_pair(points, spec)?;
            let degree = c.max_degree.unwrap_or(60);
            let cfg = KernelSeriesConfig {
                max_degree: degree,
                ..KernelSeriesConfig::default()
            };
            let v = KernelSeries::new(spec, cfg)?.eval(&p, &q)?;
            let tail_tol = c.tol.unwrap_or(1e-8);
            let mut outcomes = vec![Outcome::at_most("tail_relative", v.tail_estimate / v.value.norm(), tail_tol)];
            if spec.num_blocks() == 1 && spec.exponents()[0] == 1.0 {
                let fixed = KernelSeries::new(spec, KernelSeriesConfig::fixed(degree))?.eval(&p, &q)?.value;
                let y = yamamori_eval(spec.n0(), spec.block_dims()[0], spec.mu(), &p, &q, degree)?;
                outcomes.push(Outcome::at_most("closed_ball_kernel", (fixed - y).norm() / y.norm(), 1e-8));
            }
            let output = json!({
                "value_re": v.value.re,
                "value_im": v.value.im,
                "degree_used": v.degree_used,
                "tail_estimate": v.tail_estimate,
            });
            (outcomes, output)
        }
        Command::ClassifyBoundary { points } => {
            let spec = need()?;
            match points {
                Some(path) => {
                    let pts = point_list(path, spec)?;
                    let r = suites::classify_points(spec, &pts, c.tol.unwrap_or(fbh_core::DEFAULT_BOUNDARY_TOL))?;
                    (r.outcomes, r.output)
                }
                None => {
                    let cfg = suites::LeviConfig {
                        b0_points: c.samples.unwrap_or(200) as usize,
                        b1_points: 20,
                        lower_bound_tol: c.tol.unwrap_or(1e-9),
                        ..suites::LeviConfig::default()
                    };
                    let r = suites::levi_check(spec, &cfg, c.seed)?;
                    (r.outcomes, r.output)
                }
            }
        }
        Command::MomentsCheck { csv, level } => {
            let spec = need()?;
            let cfg = SamplerConfig::new(c.seed, c.samples.unwrap_or(1_000_000));
            let (r, rows) = suites::moments_check(spec, c.max_degree.unwrap_or(3), *level, &cfg, workers, c.tol.unwrap_or(0.02))?;
            let mut output = r.output;
            match csv {
                Some(path) => {
                    fs::write(path, suites::moments_csv(&rows)).map_err(|source| CliError::Write {
                        path: path.display().to_string(),
                        source,
                    })?;
                    output["csv"] = json!(path.display().to_string());
                }
                None => output["rows"] = serde_json::to_value(&rows).expect("rows serialize"),
            }
            (r.outcomes, output)
        }
        Command::CartanCheck => {
            let r = suites::cartan_check(need()?, 1e-4, c.tol.unwrap_or(1e-5))?;
            (r.outcomes, r.output)
        }
        Command::VerifyReproducing => {
            let cfg = SamplerConfig::new(c.seed, c.samples.unwrap_or(10_000_000));
            let r = suites::reproducing_suite(need()?, &cfg, workers, c.tol.unwrap_or(0.05), 5.0)?;
            (r.outcomes, r.output)
        }
        Command::VerifyTransformation { phi, points } => {
            let spec = need()?;
            let degree = c.max_degree.unwrap_or(60);
            match (phi, points) {
                (Some(phi), Some(points)) => {
                    let map: MapFile = read_json(phi)?;
                    let phi = map.to_automorphism(spec)?;
                    let (p, q) = point_pair(points, spec)?;
                    let r = suites::transformation_single(spec, &phi, &p, &q, degree, c.tol.unwrap_or(1e-6))?;
                    (r.outcomes, r.output)
                }
                (None, None) => {
                    let cfg = suites::TransformationConfig {
                        pairs: c.samples.unwrap_or(20) as usize,
                        degree,
                        translation_tol: c.tol.unwrap_or(1e-6),
                        ..suites::TransformationConfig::default()
                    };
                    let r = suites::transformation_check(spec, &cfg, c.seed)?;
                    (r.outcomes, r.output)
                }
                _ => return Err(IoError::Invalid("--phi and --points go together".into()).into()),
            }
        }
        Command::DecomposeAutomorphism { word } => {
            let spec = need()?;
            let tol = c.tol.unwrap_or(1e-9);
            match word {
                Some(path) => {
                    let file: WordFile = read_json(path)?;
                    let word = file.to_word(spec)?;
                    let (r, nf) = suites::decompose_word(spec, &word, 100, c.seed, tol)?;
                    let output = json!({ "normal_form": AutomorphismFile::from_automorphism(&nf) });
                    (r.outcomes, output)
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
                    let word = random_word(spec, &mut rng, 4, 0.8);
                    let (w, nf) = suites::decompose_word(spec, &word, 100, c.seed, tol)?;
                    let sweep = suites::rigidity_check(spec, c.samples.unwrap_or(100) as usize, c.seed, tol)?;
                    let (outcomes, mut output) = merge(vec![("word".into(), w), ("sweep".into(), sweep)]);
                    output["word"] = serde_json::to_value(WordFile::from_word(&word)).expect("word serializes");
                    output["normal_form"] =
                        serde_json::to_value(AutomorphismFile::from_automorphism(&nf)).expect("map serializes");
                    (outcomes, output)
                }
            }
        }
        Command::CheckGroupLaws => {
            let spec = need()?;
            let cfg = suites::GroupLawConfig {
                points: c.samples.unwrap_or(1000) as usize,
                tol: c.tol.unwrap_or(1e-11),
                ..suites::GroupLawConfig::default()
            };
            let laws = suites::group_laws(spec, &cfg, c.seed)?;
            let jac = suites::jacobian_check(spec, 50, c.seed, 1e-6)?;
            merge(vec![("laws".into(), laws), ("jacobian".into(), jac)])
        }
        Command::CounterexampleDemo => {
            let samples = c.samples.unwrap_or(1000) as usize;
            let tol = c.tol.unwrap_or(1e-10);
            let fixtures = match &loaded {
                None => suites::default_fixtures(),
                Some(l) => {
                    let kinds = [CounterexampleKind::FiberSquare, CounterexampleKind::ScaledSquare];
                    let found: Vec<_> = kinds.iter().filter_map(|&k| counterexample_map(&l.spec, k).ok()).collect();
                    if found.is_empty() {
                        return Err(IoError::Invalid("no counterexample applies to this spec".into()).into());
                    }
                    found
                }
            };
            let parts = fixtures
                .iter()
                .map(|f| Ok((String::new(), suites::counterexample_check(f, samples, c.seed, tol)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let (outcomes, _) = merge(parts.clone());
            let output = Value::Array(parts.into_iter().map(|(_, r)| r.output).collect());
            (outcomes, output)
        }
    };
    Ok((outcomes, output, digest))
}

const USAGE_EXIT: i32 = 2;

/// Runs the command line on `argv` (program name first) against the process
/// stdout and stderr. Returns 0 when every check passes, 1 when one fails and
/// 2 on malformed input.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let start = Instant::now();
    let (results, output, spec_digest) = match execute(&cli) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return USAGE_EXIT;
        }
    };
    let report = RunReport {
        command: cli.command.name().to_string(),
        spec_digest,
        results,
        seed: cli.common.seed,
        wall_time: start.elapsed().as_secs_f64(),
        output,
    };
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.passed() {
        0
    } else {
        1
    }
}
