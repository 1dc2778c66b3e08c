//! Partition-parallel Monte-Carlo drivers.
//!
//! Partitions are spread over scoped threads and merged in partition order,
//! so the estimate is identical for every worker count.

use std::num::NonZeroUsize;
use std::thread;

use fbh_core::mc::{integrate_domain_partition, integrate_fiber_partition, PartialSums, MIN_ACCEPTANCE};
use fbh_core::{BlockedMultiIndex, DomainPoint, DomainSpec, McEstimate, SamplerConfig, C64};

/// Worker count: `FBH_THREADS` if set to a positive integer, otherwise the
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var("FBH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, NonZeroUsize::get))
}

fn run_partitions<F>(partitions: u32, workers: usize, job: F) -> fbh_core::Result<Vec<PartialSums>>
where
    F: Fn(u32) -> fbh_core::Result<PartialSums> + Sync,
{
    let workers = workers.clamp(1, partitions.max(1) as usize);
    if workers == 1 {
        return (0..partitions).map(&job).collect();
    }
    let mut slots: Vec<Option<fbh_core::Result<PartialSums>>> = (0..partitions).map(|_| None).collect();
    thread::scope(|s| {
        let job = &job;
        let handles: Vec<_> = (0..workers)
            .map(|k| {
                s.spawn(move || {
                    (k as u32..partitions)
                        .step_by(workers)
                        .map(|part| (part, job(part)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (part, res) in h.join().expect("worker panicked") {
                slots[part as usize] = Some(res);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every partition ran")).collect()
}

fn merge(outputs: usize, parts: Vec<PartialSums>) -> Vec<McEstimate> {
    let mut total = PartialSums::new(outputs);
    for p in &parts {
        total.merge(p);
    }
    total.finish()
}

/// Parallel counterpart of `fbh_core::mc::integrate_domain_many`.
pub fn integrate_domain_many<F>(
    spec: &DomainSpec,
    outputs: usize,
    cfg: &SamplerConfig,
    workers: usize,
    f: F,
) -> fbh_core::Result<Vec<McEstimate>>
where
    F: Fn(&DomainPoint, &mut [C64]) + Sync,
{
    let parts = run_partitions(cfg.partitions, workers, |part| {
        integrate_domain_partition(spec, outputs, cfg, part, &f)
    })?;
    Ok(merge(outputs, parts))
}

/// Parallel counterpart of `fbh_core::mc::integrate_fiber_moments`.
pub fn integrate_fiber_moments(
    spec: &DomainSpec,
    t: f64,
    alphas: &[BlockedMultiIndex],
    cfg: &SamplerConfig,
    workers: usize,
) -> fbh_core::Result<Vec<McEstimate>> {
    let parts = run_partitions(cfg.partitions, workers, |part| integrate_fiber_partition(spec, t, alphas, cfg, part))?;
    let est = merge(alphas.len(), parts);
    if let Some(e) = est.first() {
        if e.acceptance_ratio() < MIN_ACCEPTANCE {
            return Err(fbh_core::Error::LowAcceptance {
                ratio: e.acceptance_ratio(),
            });
        }
    }
    Ok(est)
}
