//! Random-cluster exactness, dominance tables, Edwards-Sokal consistency,
//! folding, the four-link chain and the percolation proxy.

use std::time::Duration;

use longrange_core::gibbs::{atom_index, exact_marginals, EXACT_BUDGET};
use longrange_core::rc::chain::{dominance_chain_check, ChainConfig, LinkStatus, CHAIN_MAX_N};
use longrange_core::rc::exact::{
    bernoulli_distribution, dominance_check_exact, edge_marginals, exact_rc_distribution, small_graphs, vertex_count,
    EdgeSpace,
};
use longrange_core::rc::field::{reduced_probability, EdgeProbabilityField};
use longrange_core::rc::fold::fold_connectivity_violations;
use longrange_core::rc::sampler::{dominance_check_mc, percolation_proxy, BernoulliSampler, EsSampler, GraphSampler, IncreasingFn, McConfig};
use longrange_core::seed::{derive_seed, derived_rng};
use longrange_core::stats::{BatchedHistogram, MIN_BATCHES};
use longrange_core::{BoundaryCondition, PotentialSpec};
use rand::Rng;
use rayon::prelude::*;

use super::{short, Outcome, RC_STREAM};
use crate::config::{finite_nonneg, require, require_budget, ExperimentConfig, RcConfig};
use crate::error::CliResult;
use crate::output::{num, Table};
use crate::report::{family_p, max_atom_z, tv, CheckLog, Clock};

pub const HEADER: [&str; 6] = ["kind", "label", "beta", "N", "value", "stderr"];

/// Longest window of the Monte Carlo sections.
pub const RC_MAX_N: usize = 1024;
/// Largest window of the Edwards-Sokal enumeration check.
pub const ES_MAX_N: usize = 12;
const FOLD_CHUNKS: usize = 16;

struct Rows(Table);

impl Rows {
    fn push(&mut self, kind: &str, label: &str, beta: Option<f64>, n: Option<usize>, value: f64, se: Option<f64>) {
        self.0.row([
            kind.to_string(),
            label.to_string(),
            beta.map(num).unwrap_or_default(),
            n.map(|n| n.to_string()).unwrap_or_default(),
            num(value),
            se.map(num).unwrap_or_default(),
        ]);
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn validate(c: &RcConfig) -> CliResult<()> {
    require(c.alpha.is_finite() && c.alpha > 1.0, "rc.alpha", "must be finite and > 1")?;
    require(finite_nonneg(&[c.beta, c.es_beta, c.fold_beta]), "rc.beta", "inverse temperatures must be finite and >= 0")?;
    require(
        !c.grid_p.is_empty() && strictly_increasing(&c.grid_p) && c.grid_p.iter().all(|&p| p > 0.0 && p < 1.0),
        "rc.grid_p",
        "must be strictly increasing inside (0, 1)",
    )?;
    require(
        !c.grid_q.is_empty() && strictly_increasing(&c.grid_q) && c.grid_q.iter().all(|&q| q >= 1.0 && q.is_finite()),
        "rc.grid_q",
        "must be strictly increasing and >= 1",
    )?;
    require(c.mc_n >= 2, "rc.mc_n", "must be >= 2")?;
    require(c.chains >= 1, "rc.chains", "must be >= 1")?;
    require(c.samples_per_chain >= c.batches_per_chain, "rc.samples_per_chain", "must be >= rc.batches_per_chain")?;
    require(c.batches_per_chain >= MIN_BATCHES, "rc.batches_per_chain", &format!("must be >= {MIN_BATCHES}"))?;
    require(c.es_sweeps >= 20, "rc.es_sweeps", "must be >= 20")?;
    require(c.es_sizes.iter().all(|&n| n >= 1), "rc.es_sizes", "must be >= 1")?;
    require(
        !c.percolation_betas.is_empty() && finite_nonneg(&c.percolation_betas),
        "rc.percolation_betas",
        "must be non-empty, finite and >= 0",
    )?;
    require(
        !c.percolation_distances.is_empty() && c.percolation_distances.iter().all(|&l| l >= 1 && l < c.mc_n),
        "rc.percolation_distances",
        "must lie in 1..rc.mc_n",
    )?;
    require(c.chain_n >= 2, "rc.chain_n", "must be >= 2")?;
    require_budget(c.mc_n, RC_MAX_N, "rc.mc_n")?;
    require_budget(c.chain_n, CHAIN_MAX_N, "rc.chain_n")?;
    require_budget(2 * c.fold_half_width + 1, 2 * RC_MAX_N + 1, "rc.fold_half_width")?;
    for &n in &c.es_sizes {
        require_budget(n, ES_MAX_N.min(EXACT_BUDGET), "rc.es_sizes")?;
    }
    Ok(())
}

fn mc_config(cfg: &ExperimentConfig, stream: u64) -> McConfig {
    let c = &cfg.rc;
    McConfig {
        chains: c.chains,
        samples_per_chain: c.samples_per_chain,
        burn_in: c.burn_in,
        batches_per_chain: c.batches_per_chain,
        seed: derive_seed(cfg.seed, &[RC_STREAM, stream]),
    }
}

pub fn run(cfg: &ExperimentConfig, check: bool) -> CliResult<Outcome> {
    let c = &cfg.rc;
    validate(c)?;
    let mut rows = Rows(Table::new(&HEADER));
    let mut checks = CheckLog::default();
    let mut clock = Clock::start();

    exactness(cfg, &mut rows, &mut checks, &mut clock)?;
    upset_grid(c, &mut rows, &mut checks, &mut clock)?;
    mc_dominance(cfg, &mut rows, &mut checks, &mut clock)?;
    es_consistency(cfg, &mut rows, &mut checks, &mut clock)?;
    folding(cfg, &mut rows, &mut checks, &mut clock)?;
    chain(cfg, &mut rows, &mut checks, &mut clock)?;
    percolation(cfg, &mut rows, &mut checks, &mut clock)?;

    if !check {
        checks = CheckLog::default();
    }
    Ok(Outcome { csv: rows.0.finish(), checks })
}

fn edge_label(g: &[(usize, usize)]) -> String {
    g.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" ")
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Edge marginal of the triangle under the `q`-weighted measure, summed by
/// hand over the four edge-count classes.
fn triangle_marginal(p: f64, q: f64) -> f64 {
    let s = 1.0 - p;
    let z = s.powi(3) * q.powi(3) + 3.0 * p * s * s * q * q + 3.0 * p * p * s * q + p.powi(3) * q;
    (p * s * s * q * q + 2.0 * p * p * s * q + p.powi(3) * q) / z
}

fn exactness(cfg: &ExperimentConfig, rows: &mut Rows, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    let graphs = small_graphs(4)?;
    let mut rng = derived_rng(cfg.seed, &[RC_STREAM, 0]);
    let mut worst: f64 = 0.0;
    for g in &graphs {
        let mut p_sets: Vec<Vec<f64>> = cfg.rc.grid_p.iter().map(|&p| vec![p; g.len()]).collect();
        for _ in 0..3 {
            p_sets.push((0..g.len()).map(|_| rng.random_range(0.01..0.99)).collect());
        }
        let mut dev: f64 = 0.0;
        for p in p_sets {
            let space = EdgeSpace::new(vertex_count(g), g.clone(), p)?;
            dev = dev.max(max_dev(&exact_rc_distribution(&space, 1.0)?, &bernoulli_distribution(&space)?));
        }
        rows.push("q1_exactness", &edge_label(g), None, Some(vertex_count(g)), dev, None);
        worst = worst.max(dev);
    }
    checks.record(
        "c5",
        "q = 1 equals product Bernoulli atom by atom",
        worst <= 1e-12,
        format!("{} graphs with <= 4 edges, max deviation = {}", graphs.len(), short(worst)),
        clock.lap(),
    );

    let single = exact_rc_distribution(&EdgeSpace::uniform(2, vec![(0, 1)], 0.5)?, 2.0)?;
    let single_dev = (edge_marginals(&single, 1)[0] - 1.0 / 3.0).abs();
    rows.push("q2_hand", "single edge p=0.5", None, Some(2), single_dev, None);
    let mut tri_dev: f64 = 0.0;
    for &p in &cfg.rc.grid_p {
        let dist = exact_rc_distribution(&EdgeSpace::uniform(3, vec![(0, 1), (0, 2), (1, 2)], p)?, 2.0)?;
        let dev = edge_marginals(&dist, 3).iter().map(|m| (m - triangle_marginal(p, 2.0)).abs()).fold(0.0, f64::max);
        rows.push("q2_hand", &format!("triangle p={p}"), None, Some(3), dev, None);
        tri_dev = tri_dev.max(dev);
    }
    checks.record(
        "c5",
        "q = 2 single edge and triangle against hand enumeration",
        single_dev <= 1e-12 && tri_dev <= 1e-12,
        format!("edge marginal at p=1/2 off 1/3 by {}, triangle max deviation = {}", short(single_dev), short(tri_dev)),
        clock.lap(),
    );
    Ok(())
}

fn upset_grid(c: &RcConfig, rows: &mut Rows, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    const TOL: f64 = 1e-12;
    let graphs = small_graphs(4)?;
    let mut total = 0usize;
    let mut comparisons = 0usize;
    for (pi, &p) in c.grid_p.iter().enumerate() {
        for (qi, &q) in c.grid_q.iter().enumerate() {
            let mut bad = 0usize;
            for g in &graphs {
                let nv = vertex_count(g);
                let space = EdgeSpace::uniform(nv, g.clone(), p)?;
                let psi = exact_rc_distribution(&space, q)?;
                let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
                if let Some(&p2) = c.grid_p.get(pi + 1) {
                    pairs.push((psi.clone(), exact_rc_distribution(&EdgeSpace::uniform(nv, g.clone(), p2)?, q)?));
                }
                if let Some(&q2) = c.grid_q.get(qi + 1) {
                    pairs.push((exact_rc_distribution(&space, q2)?, psi.clone()));
                }
                pairs.push((psi.clone(), bernoulli_distribution(&space)?));
                pairs.push((bernoulli_distribution(&space.map_p(|x| reduced_probability(x, q)))?, psi.clone()));
                for (lower, upper) in &pairs {
                    comparisons += 1;
                    if !dominance_check_exact(lower, upper, TOL)?.dominates() {
                        bad += 1;
                    }
                }
            }
            rows.push("upset_grid", &format!("p={p} q={q}"), None, None, bad as f64, None);
            total += bad;
        }
    }
    checks.record(
        "c6",
        "exhaustive up-set dominance on graphs with <= 4 edges",
        total == 0,
        format!(
            "{comparisons} comparisons over {} graphs and {} (p, q) cells, {total} violations",
            graphs.len(),
            c.grid_p.len() * c.grid_q.len()
        ),
        clock.lap(),
    );
    Ok(())
}

fn mc_dominance(cfg: &ExperimentConfig, rows: &mut Rows, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    let c = &cfg.rc;
    let n = c.mc_n;
    let rho = EdgeProbabilityField::rho(c.alpha, c.beta)?;
    let rho2 = EdgeProbabilityField::rho(c.alpha, 2.0 * c.beta)?;
    let reduced = EdgeProbabilityField::reduced(c.alpha, c.beta, 2.0)?;
    let tests = IncreasingFn::standard(n);
    let es = |f: EdgeProbabilityField| move |s: u64| EsSampler::new(n, 0, None, &f, s);
    let bern = |f: EdgeProbabilityField| move |s: u64| BernoulliSampler::new(n, 0, &f, s);
    let reports = [
        ("bernoulli_over_rc2", dominance_check_mc(es(rho), bern(rho), &tests, &mc_config(cfg, 1))?),
        ("rc2_over_reduced_bernoulli", dominance_check_mc(bern(reduced), es(rho), &tests, &mc_config(cfg, 2))?),
        ("rc2_increasing_in_p", dominance_check_mc(es(rho), es(rho2), &tests, &mc_config(cfg, 3))?),
        ("bernoulli_increasing_in_p", dominance_check_mc(bern(rho), bern(rho2), &tests, &mc_config(cfg, 4))?),
    ];
    let spent = clock.lap() / reports.len() as u32;
    for (name, rep) in &reports {
        for r in &rep.rows {
            rows.push("mc_dominance", &format!("{name}: {}", r.test), Some(c.beta), Some(n), r.diff.mean, Some(r.diff.stderr));
        }
        let worst = rep.rows.iter().map(|r| r.diff.mean / r.diff.stderr.max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min);
        checks.record(
            "c6",
            format!("Monte Carlo dominance {name}, N={n}"),
            rep.passes(),
            format!("{} of {} test functions flagged, min diff/se = {}", rep.violations(), rep.rows.len(), short(worst)),
            spent,
        );
    }
    Ok(())
}

fn es_consistency(cfg: &ExperimentConfig, rows: &mut Rows, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    const BATCHES: usize = 50;
    let c = &cfg.rc;
    let field = EdgeProbabilityField::rho(c.alpha, c.es_beta)?;
    let ising = PotentialSpec::ising(c.alpha, c.es_beta / 2.0)?;
    let results: Vec<(usize, f64, f64, Duration)> = c
        .es_sizes
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let start = std::time::Instant::now();
            let mut s = EsSampler::new(n, 0, None, &field, derive_seed(cfg.seed, &[RC_STREAM, 5, i as u64]))?;
            for _ in 0..c.burn_in {
                s.sweep();
            }
            let mut hist = BatchedHistogram::new(1 << n, c.es_sweeps, BATCHES)?;
            for _ in 0..c.es_sweeps {
                s.sweep();
                hist.push(atom_index(s.spins()));
            }
            let exact = exact_marginals(n, &BoundaryCondition::Free, &ising)?;
            let freqs = hist.frequencies();
            let f: Vec<f64> = freqs.iter().map(|x| x.0).collect();
            Ok((n, max_atom_z(&freqs, exact.probs(), c.es_sweeps), tv(&f, exact.probs()), start.elapsed()))
        })
        .collect::<CliResult<_>>()?;
    clock.lap();
    for (n, z, d, spent) in results {
        rows.push("es_max_atom_z", &format!("free N={n}"), Some(c.es_beta), Some(n), z, None);
        rows.push("es_tv_distance", &format!("free N={n}"), Some(c.es_beta), Some(n), d, None);
        checks.record(
            "c7",
            format!("Edwards-Sokal spins vs enumeration at beta/2, free N={n}"),
            z <= 3.0,
            format!("{} atoms, {} sweeps, max |z| = {}, tv = {}", 1usize << n, c.es_sweeps, short(z), short(d)),
            spent,
        );
        checks.info(
            "c7",
            format!("family-wise view of the N={n} atom comparison"),
            format!("P(max of {} independent |z| >= {}) = {}", 1usize << n, short(z), short(family_p(z, 1 << n))),
            Duration::ZERO,
        );
    }
    Ok(())
}

fn folding(cfg: &ExperimentConfig, rows: &mut Rows, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    let c = &cfg.rc;
    let m = c.fold_half_width;
    let field = EdgeProbabilityField::rho(c.alpha, c.fold_beta)?;
    let per = c.fold_samples / FOLD_CHUNKS;
    let violations: usize = (0..FOLD_CHUNKS)
        .into_par_iter()
        .map(|k| {
            let count = per + usize::from(k < c.fold_samples % FOLD_CHUNKS);
            let seed = derive_seed(cfg.seed, &[RC_STREAM, 6, k as u64]);
            let mut s = BernoulliSampler::new(2 * m + 1, -(m as i64), &field, seed)?;
            let mut v = 0;
            for _ in 0..count {
                s.advance();
                v += fold_connectivity_violations(s.graph())?;
            }
            Ok(v)
        })
        .collect::<CliResult<Vec<usize>>>()?
        .into_iter()
        .sum();
    rows.push("fold_violations", &format!("M={m}"), Some(c.fold_beta), Some(2 * m + 1), violations as f64, None);
    checks.record(
        "c8",
        format!("folding preserves connectivity on [-{m}, {m}]"),
        violations == 0,
        format!("{violations} violations in {} sampled two-sided graphs", c.fold_samples),
        clock.lap(),
    );
    Ok(())
}

fn chain(cfg: &ExperimentConfig, rows: &mut Rows, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    let c = &cfg.rc;
    let rep = dominance_chain_check(&ChainConfig {
        alpha: c.alpha,
        beta: c.beta,
        n: c.chain_n,
        fold_half_width: 8,
        fold_samples: 2_000,
        mc: mc_config(cfg, 7),
    })?;
    let spent = clock.lap() / rep.links.len() as u32;
    for l in &rep.links {
        let value = match l.status {
            LinkStatus::Pass => 1.0,
            LinkStatus::Fail => 0.0,
            LinkStatus::Reported => rep.gamma_vs_4beta.holds as f64 / rep.gamma_vs_4beta.pairs as f64,
        };
        rows.push("chain_link", &l.link.to_string(), Some(c.beta), Some(c.chain_n), value, None);
        let name = format!("dominance chain link ({})", l.link);
        match l.status {
            LinkStatus::Reported => checks.info("rc.chain", name, l.detail.clone(), spent),
            s => checks.record("rc.chain", name, s == LinkStatus::Pass, l.detail.clone(), spent),
        }
    }
    let g2 = &rep.gamma_vs_2beta;
    rows.push("chain_gamma_2beta", "c", Some(c.beta), Some(c.chain_n), g2.holds as f64 / g2.pairs as f64, None);
    Ok(())
}

fn percolation(cfg: &ExperimentConfig, rows: &mut Rows, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    let c = &cfg.rc;
    let n = c.mc_n;
    let mut curves = Vec::new();
    for (bi, &beta) in c.percolation_betas.iter().enumerate() {
        let field = EdgeProbabilityField::rho(c.alpha, beta)?;
        let est = percolation_proxy(
            |s| EsSampler::new(n, 0, None, &field, s),
            &c.percolation_distances,
            &mc_config(cfg, 8 + bi as u64),
        )?;
        for (&l, e) in c.percolation_distances.iter().zip(&est) {
            rows.push("percolation", &format!("L={l}"), Some(beta), Some(n), e.mean, Some(e.stderr));
        }
        curves.push(est);
    }
    let mut worst = f64::INFINITY;
    for w in curves.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            let d = b.minus(a);
            if d.stderr > 0.0 {
                worst = worst.min(d.mean / d.stderr);
            } else if d.mean < 0.0 {
                worst = f64::NEG_INFINITY;
            }
        }
    }
    checks.record(
        "rc.percolation",
        format!("connection probability non-decreasing in beta, N={n}"),
        worst >= -3.0,
        format!(
            "{} betas x {} distances, min step diff/se = {}",
            c.percolation_betas.len(),
            c.percolation_distances.len(),
            if worst.is_finite() { short(worst) } else { "n/a".to_string() }
        ),
        clock.lap(),
    );
    Ok(())
}
