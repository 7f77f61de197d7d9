//! Magnetisation curves of the one-sided window chain, and atom-by-atom
//! comparison with exact enumeration on small windows.

use std::time::{Duration, Instant};

use longrange_core::gibbs::{atom_index, exact_marginals, GibbsChain, EXACT_BUDGET};
use longrange_core::seed::derive_seed;
use longrange_core::stats::{BatchedHistogram, MeasureEstimate, MIN_BATCHES};
use longrange_core::{BoundaryCondition, PotentialSpec, Sign, SpinWindow};
use rayon::prelude::*;

use super::{short, Outcome, ISING_STREAM};
use crate::config::{finite_nonneg, require, require_budget, BoundaryName, ExperimentConfig};
use crate::error::CliResult;
use crate::output::{num, Table};
use crate::report::{family_p, max_atom_z, tv, CheckLog};

/// Longest window the heat-bath grid accepts.
pub const ISING_MAX_N: usize = 4096;

pub const HEADER: [&str; 12] = [
    "mode",
    "beta",
    "N",
    "boundary",
    "replicate",
    "seed",
    "sweeps",
    "magnetization",
    "magnetization_se",
    "exact_magnetization",
    "max_atom_z",
    "tv_distance",
];

fn boundary(b: BoundaryName) -> BoundaryCondition {
    match b {
        BoundaryName::Plus => BoundaryCondition::from_sign(Sign::Plus),
        BoundaryName::Minus => BoundaryCondition::from_sign(Sign::Minus),
        BoundaryName::Free => BoundaryCondition::Free,
    }
}

#[derive(Debug, Clone)]
struct Job {
    oracle: bool,
    beta: f64,
    n: usize,
    boundary: BoundaryName,
    replicate: usize,
    seed: u64,
    sweeps: usize,
    exact: bool,
}

#[derive(Debug, Clone)]
struct Exact {
    magnetization: f64,
    max_z: f64,
    tv: f64,
}

#[derive(Debug, Clone)]
struct JobResult {
    job: Job,
    magnetization: MeasureEstimate,
    exact: Option<Exact>,
    spent: Duration,
}

fn mean_spin(s: &[i8]) -> f64 {
    s.iter().map(|&x| f64::from(x)).sum::<f64>() / s.len() as f64
}

fn simulate(job: Job, alpha: f64, burn_in: usize, batches: usize) -> CliResult<JobResult> {
    let start = Instant::now();
    let spec = PotentialSpec::ising(alpha, job.beta)?;
    let bc = boundary(job.boundary);
    let init = if job.boundary == BoundaryName::Minus { -1 } else { 1 };
    let mut chain = GibbsChain::new(SpinWindow::new(vec![init; job.n], bc.clone())?, &spec, job.seed);
    let samples = job.sweeps - burn_in;
    let mut mags = Vec::with_capacity(samples);
    let mut hist = if job.exact { Some(BatchedHistogram::new(1 << job.n, samples, batches)?) } else { None };
    chain.run(job.sweeps, burn_in, |s| {
        mags.push(mean_spin(s));
        if let Some(h) = hist.as_mut() {
            h.push(atom_index(s));
        }
    });
    let magnetization = MeasureEstimate::from_samples(&mags, batches)?.with_provenance(job.seed, burn_in);
    let exact = match hist {
        None => None,
        Some(h) => {
            let dist = exact_marginals(job.n, &bc, &spec)?;
            let freqs = h.frequencies();
            let f: Vec<f64> = freqs.iter().map(|x| x.0).collect();
            Some(Exact {
                magnetization: dist.expect(mean_spin),
                max_z: max_atom_z(&freqs, dist.probs(), samples),
                tv: tv(&f, dist.probs()),
            })
        }
    };
    Ok(JobResult { job, magnetization, exact, spent: start.elapsed() })
}

fn validate(cfg: &ExperimentConfig) -> CliResult<()> {
    let c = &cfg.ising;
    require(c.alpha.is_finite() && c.alpha > 1.0, "ising.alpha", "must be finite and > 1")?;
    require(!c.betas.is_empty() && finite_nonneg(&c.betas), "ising.betas", "must be non-empty, finite and >= 0")?;
    require(!c.sizes.is_empty() && c.sizes.iter().all(|&n| n > 0), "ising.sizes", "must be non-empty and positive")?;
    require(!c.boundaries.is_empty(), "ising.boundaries", "must be non-empty")?;
    require(c.sweeps > c.burn_in && c.exact_sweeps > c.burn_in, "ising.sweeps", "must exceed ising.burn_in")?;
    require(c.batches >= MIN_BATCHES, "ising.batches", &format!("must be >= {MIN_BATCHES}"))?;
    require(
        c.sweeps.min(c.exact_sweeps) - c.burn_in >= c.batches,
        "ising.batches",
        "needs at least one kept sweep per batch",
    )?;
    require(cfg.replications > 0, "replications", "must be >= 1")?;
    require(
        c.oracle.iter().all(|o| o.n > 0 && o.beta.is_finite() && o.beta >= 0.0),
        "ising.oracle",
        "windows need n >= 1 and a finite beta >= 0",
    )?;
    for &n in &c.sizes {
        require_budget(n, ISING_MAX_N, "ising.sizes")?;
    }
    require_budget(c.exact_max_n, EXACT_BUDGET, "ising.exact_max_n")?;
    for o in &c.oracle {
        require_budget(o.n, EXACT_BUDGET, "ising.oracle.n")?;
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, check: bool) -> CliResult<Outcome> {
    validate(cfg)?;
    let c = &cfg.ising;
    let mut jobs = Vec::new();
    for (bi, &beta) in c.betas.iter().enumerate() {
        for (ni, &n) in c.sizes.iter().enumerate() {
            for (ci, &b) in c.boundaries.iter().enumerate() {
                for rep in 0..cfg.replications {
                    let exact = n <= c.exact_max_n;
                    jobs.push(Job {
                        oracle: false,
                        beta,
                        n,
                        boundary: b,
                        replicate: rep,
                        seed: derive_seed(cfg.seed, &[ISING_STREAM, 0, bi as u64, ni as u64, ci as u64, rep as u64]),
                        sweeps: if exact { c.exact_sweeps } else { c.sweeps },
                        exact,
                    });
                }
            }
        }
    }
    for (oi, o) in c.oracle.iter().enumerate() {
        jobs.push(Job {
            oracle: true,
            beta: o.beta,
            n: o.n,
            boundary: o.boundary,
            replicate: 0,
            seed: derive_seed(cfg.seed, &[ISING_STREAM, 1, oi as u64]),
            sweeps: c.exact_sweeps,
            exact: true,
        });
    }
    let results: Vec<JobResult> = jobs
        .into_par_iter()
        .map(|j| simulate(j, c.alpha, c.burn_in, c.batches))
        .collect::<CliResult<_>>()?;

    let mut table = Table::new(&HEADER);
    for r in &results {
        let j = &r.job;
        let (em, z, d) = match &r.exact {
            Some(e) => (num(e.magnetization), num(e.max_z), num(e.tv)),
            None => (String::new(), String::new(), String::new()),
        };
        table.row([
            if j.oracle { "oracle".to_string() } else { "grid".to_string() },
            num(j.beta),
            j.n.to_string(),
            j.boundary.label().to_string(),
            j.replicate.to_string(),
            j.seed.to_string(),
            j.sweeps.to_string(),
            num(r.magnetization.mean),
            num(r.magnetization.stderr),
            em,
            z,
            d,
        ]);
    }

    let mut checks = CheckLog::default();
    if check {
        let zero: Vec<&JobResult> = results.iter().filter(|r| !r.job.oracle && r.job.beta == 0.0).collect();
        if !zero.is_empty() {
            let worst = zero.iter().map(|r| r.magnetization.mean.abs() / r.magnetization.stderr).fold(0.0, f64::max);
            let ok = zero.iter().all(|r| r.magnetization.within(0.0, 3.0));
            let spent = zero.iter().map(|r| r.spent).sum();
            checks.record(
                "ising.beta0",
                "zero coupling magnetisation",
                ok,
                format!("{} windows, max |m|/se = {}", zero.len(), short(worst)),
                spent,
            );
        }
        for r in results.iter().filter(|r| r.job.oracle) {
            let e = r.exact.as_ref().expect("oracle windows are enumerated");
            let j = &r.job;
            checks.record(
                "c4",
                format!("heat bath vs enumeration, N={} {} beta={}", j.n, j.boundary.label(), j.beta),
                e.max_z <= 3.0 && e.tv < 0.01,
                format!(
                    "{} atoms, {} sweeps, max |z| = {}, tv = {}",
                    1usize << j.n,
                    j.sweeps,
                    short(e.max_z),
                    short(e.tv)
                ),
                r.spent,
            );
            checks.info(
                "c4",
                format!("family-wise view of the N={} {} beta={} atom comparison", j.n, j.boundary.label(), j.beta),
                format!(
                    "P(max of {} independent |z| >= {}) = {}",
                    1usize << j.n,
                    short(e.max_z),
                    short(family_p(e.max_z, 1 << j.n))
                ),
                Duration::ZERO,
            );
        }
    }
    Ok(Outcome { csv: table.finish(), checks })
}
