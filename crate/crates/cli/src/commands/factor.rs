//! The `(beta, N)` surface of the factor gap, plus exact checks on the
//! g-function itself.

use std::time::{Duration, Instant};

use longrange_core::berbee::GFunction;
use longrange_core::factor::{g_variation_cap, gap_exact, gap_statistic, CounterexampleG, CounterexampleSpec, GapStatistic, GAP_MAX_N};
use longrange_core::gibbs::exact_marginals;
use longrange_core::potential::{empirical_variation, phi0_eval, q_sup, variation_bound};
use longrange_core::seed::{derive_seed, derived_rng, Rng as SeedRng};
use longrange_core::stats::MIN_BATCHES;
use longrange_core::{Alphabet, BoundaryCondition, PotentialSpec, Sign};
use rand::Rng;
use rayon::prelude::*;

use super::{short, Outcome, FACTOR_STREAM};
use crate::config::{finite_nonneg, require, require_budget, ExperimentConfig};
use crate::error::CliResult;
use crate::output::{num, Table};
use crate::report::{CheckLog, Clock};

pub const HEADER: [&str; 9] =
    ["beta", "N", "seed", "plus_mean", "plus_se", "minus_mean", "minus_se", "delta", "delta_se"];

const SYMBOLS: [i8; 4] = [-2, -1, 1, 2];
/// Longest random tail drawn by the g-function checks.
const MAX_TAIL: usize = 64;

#[derive(Debug, Clone)]
struct Point {
    spec: CounterexampleSpec,
    gap: GapStatistic,
    spent: Duration,
}

fn validate(cfg: &ExperimentConfig) -> CliResult<()> {
    let c = &cfg.factor;
    require(c.alpha.is_finite() && c.alpha > 1.0, "factor.alpha", "must be finite and > 1")?;
    require(!c.betas.is_empty() && finite_nonneg(&c.betas), "factor.betas", "must be non-empty, finite and >= 0")?;
    require(!c.sizes.is_empty() && c.sizes.iter().all(|&n| n > 0), "factor.sizes", "must be non-empty and positive")?;
    require(c.chains >= 1, "factor.chains", "must be >= 1")?;
    require(c.sweeps_per_chain > c.burn_in, "factor.sweeps_per_chain", "must exceed factor.burn_in")?;
    require(c.batches_per_chain >= MIN_BATCHES, "factor.batches_per_chain", &format!("must be >= {MIN_BATCHES}"))?;
    require(
        c.sweeps_per_chain - c.burn_in >= c.batches_per_chain,
        "factor.batches_per_chain",
        "needs at least one kept sweep per batch",
    )?;
    require(finite_nonneg(&c.check_betas), "factor.check_betas", "must be finite and >= 0")?;
    require(c.variation_max_n >= 1, "factor.variation_max_n", "must be >= 1")?;
    require(cfg.replications > 0, "replications", "must be >= 1")?;
    for &n in &c.sizes {
        require_budget(n, GAP_MAX_N, "factor.sizes")?;
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, check: bool) -> CliResult<Outcome> {
    validate(cfg)?;
    let c = &cfg.factor;
    let mut specs = Vec::new();
    for (bi, &beta) in c.betas.iter().enumerate() {
        for (ni, &n) in c.sizes.iter().enumerate() {
            for rep in 0..cfg.replications {
                let seed = derive_seed(cfg.seed, &[FACTOR_STREAM, 0, bi as u64, ni as u64, rep as u64]);
                let mut spec = CounterexampleSpec::new(c.alpha, beta, n, c.sweeps_per_chain, c.burn_in, seed)?;
                spec.chains = c.chains;
                spec.batches_per_chain = c.batches_per_chain;
                spec.validate()?;
                specs.push(spec);
            }
        }
    }
    let points: Vec<Point> = specs
        .into_par_iter()
        .map(|spec| {
            let start = Instant::now();
            let gap = gap_statistic(&spec)?;
            Ok(Point { spec, gap, spent: start.elapsed() })
        })
        .collect::<CliResult<_>>()?;

    let mut table = Table::new(&HEADER);
    for p in &points {
        let g = &p.gap;
        table.row([
            num(g.beta),
            g.n.to_string(),
            p.spec.seed.to_string(),
            num(g.plus.mean),
            num(g.plus.stderr),
            num(g.minus.mean),
            num(g.minus.stderr),
            num(g.delta.mean),
            num(g.delta.stderr),
        ]);
    }

    let mut checks = CheckLog::default();
    if check {
        let mut clock = Clock::start();
        normalisation(cfg, &mut checks, &mut clock)?;
        supremum(cfg, &mut checks, &mut clock)?;
        variation(cfg, &mut checks, &mut clock)?;
        gap_checks(cfg, &points, &mut checks, &mut clock)?;
    }
    Ok(Outcome { csv: table.finish(), checks })
}

fn random_tail(rng: &mut SeedRng, len: usize) -> Vec<i8> {
    (0..len).map(|_| SYMBOLS[rng.random_range(0..SYMBOLS.len())]).collect()
}

fn random_sign(rng: &mut SeedRng, p_plus: f64) -> Sign {
    if rng.random::<f64>() < p_plus {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

fn normalisation(cfg: &ExperimentConfig, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    let c = &cfg.factor;
    let mut worst: f64 = 0.0;
    let mut min_g = f64::INFINITY;
    for (bi, &beta) in c.check_betas.iter().enumerate() {
        let g = CounterexampleG::new(PotentialSpec::normalized(c.alpha, beta)?);
        let mut rng = derived_rng(cfg.seed, &[FACTOR_STREAM, 1, bi as u64]);
        for _ in 0..c.norm_tails {
            let len = rng.random_range(0..=MAX_TAIL);
            let tail = random_tail(&mut rng, len);
            let completion = random_sign(&mut rng, 0.5);
            let vals: Vec<f64> = SYMBOLS.iter().map(|&a| g.eval(a, &tail, completion)).collect();
            worst = worst.max((vals.iter().sum::<f64>() - 1.0).abs());
            min_g = vals.iter().cloned().fold(min_g, f64::min);
        }
    }
    checks.record(
        "c1",
        "g sums to one over the four symbols",
        worst <= 1e-12 && min_g > 0.0,
        format!(
            "{} betas x {} tails, max |sum - 1| = {}, min g = {}",
            c.check_betas.len(),
            c.norm_tails,
            short(worst),
            short(min_g)
        ),
        clock.lap(),
    );
    Ok(())
}

/// Tails are pushed towards one sign with a random strength so that the
/// maximising configurations are approached.
fn supremum(cfg: &ExperimentConfig, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    let c = &cfg.factor;
    let mut sup: f64 = 0.0;
    let mut analytic: f64 = 0.0;
    let mut ok = true;
    for (bi, &beta) in c.check_betas.iter().enumerate() {
        let spec = PotentialSpec::normalized(c.alpha, beta)?;
        let bound = q_sup(&spec);
        let g = CounterexampleG::new(spec);
        let mut rng = derived_rng(cfg.seed, &[FACTOR_STREAM, 2, bi as u64]);
        let mut local: f64 = 0.0;
        for _ in 0..c.sup_tails {
            let bias: f64 = rng.random();
            let s = random_sign(&mut rng, 0.5);
            let len = rng.random_range(0..=MAX_TAIL);
            let tail: Vec<i8> = (0..len)
                .map(|_| {
                    if rng.random::<f64>() < bias {
                        s.value() * if rng.random::<bool>() { 1 } else { 2 }
                    } else {
                        SYMBOLS[rng.random_range(0..SYMBOLS.len())]
                    }
                })
                .collect();
            let completion = if rng.random::<f64>() < 0.5 + 0.5 * bias { s } else { s.flip() };
            local = local.max(g.eval(1, &tail, completion)).max(g.eval(-1, &tail, completion));
        }
        ok &= local < 0.5 && local <= bound * (1.0 + 1e-12);
        sup = sup.max(local);
        analytic = analytic.max(bound);
    }
    checks.record(
        "c2",
        "sup q(+-1, u) stays below 1/2",
        ok,
        format!(
            "{} betas x {} tails, sampled sup = {}, analytic sup = {}",
            c.check_betas.len(),
            c.sup_tails,
            format_args!("{sup:.12}"),
            format_args!("{analytic:.12}")
        ),
        clock.lap(),
    );
    Ok(())
}

fn variation(cfg: &ExperimentConfig, checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    const EXTRA: usize = 64;
    let c = &cfg.factor;
    let spins = Alphabet::spins();
    let tilde = Alphabet::tilde_spins();
    let jobs: Vec<(usize, usize, usize)> = (0..c.check_betas.len())
        .flat_map(|b| (1..=c.variation_max_n).flat_map(move |n| (0..c.variation_seeds).map(move |s| (b, n, s))))
        .collect();
    let ratios: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(b, n, s)| {
            let spec = PotentialSpec::normalized(c.alpha, c.check_betas[b])?;
            let seed = derive_seed(cfg.seed, &[FACTOR_STREAM, 3, b as u64, n as u64, s as u64]);
            let log_q = |x: &[i8], sign: Sign| phi0_eval(x, &spec, &BoundaryCondition::from_sign(sign)).expect("spin window");
            let emp_q = empirical_variation(log_q, &spins, n, EXTRA, c.variation_trials, seed);
            let g = CounterexampleG::new(spec.clone());
            let log_g = |x: &[i8], sign: Sign| g.eval(x[0], &x[1..], sign).ln();
            let emp_g = empirical_variation(log_g, &tilde, n, EXTRA, c.variation_trials, seed ^ 1);
            let ratio = |emp: f64, bound: f64| if bound > 0.0 { emp / bound } else if emp <= 1e-12 { 0.0 } else { f64::INFINITY };
            Ok((ratio(emp_q, variation_bound(n, &spec)?), ratio(emp_g, g_variation_cap(n, &spec)?)))
        })
        .collect::<CliResult<_>>()?;
    let worst_q = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_g = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    checks.record(
        "c3",
        format!("empirical var_n log q under 2 beta zeta tail, n = 1..={}", c.variation_max_n),
        worst_q <= 1.0 + 1e-9,
        format!(
            "{} betas x {} seeds x {} trials, max empirical/bound = {}",
            c.check_betas.len(),
            c.variation_seeds,
            c.variation_trials,
            short(worst_q)
        ),
        clock.lap(),
    );
    checks.record(
        "c3",
        format!("empirical var_n log g under its cap, n = 1..={}", c.variation_max_n),
        worst_g <= 1.0 + 1e-9,
        format!("max empirical/cap = {}", short(worst_g)),
        Duration::ZERO,
    );
    Ok(())
}

/// Mean and variance of `q(+1, u)` under `nu_N^sign`, enumerated directly
/// from the window marginals and the g-function.
fn exact_q_moments(n: usize, sign: Sign, spec: &PotentialSpec) -> CliResult<(f64, f64)> {
    let dist = exact_marginals(n, &BoundaryCondition::from_sign(sign), spec)?;
    let g = CounterexampleG::new(spec.clone());
    let m1 = dist.expect(|u| g.eval(1, u, sign));
    let m2 = dist.expect(|u| g.eval(1, u, sign).powi(2));
    Ok((m1, (m2 - m1 * m1).max(0.0)))
}

fn gap_checks(cfg: &ExperimentConfig, points: &[Point], checks: &mut CheckLog, clock: &mut Clock) -> CliResult<()> {
    // the grid itself is charged once, to the dominance line
    let grid_time: Duration = points.iter().map(|p| p.spent).sum();

    let zero: Vec<&Point> = points.iter().filter(|p| p.gap.beta == 0.0).collect();
    if zero.is_empty() {
        checks.info("c10a", "gap at beta = 0", "grid has no beta = 0 row", Duration::ZERO);
    } else {
        for p in &zero {
            checks.record(
                "c10a",
                format!("gap at beta = 0, N={}", p.gap.n),
                p.gap.delta.within(0.0, 3.0),
                format!("delta = {} +- {}", short(p.gap.delta.mean), short(p.gap.delta.stderr)),
                Duration::ZERO,
            );
        }
    }

    for target in [1.0, 4.0] {
        let rows: Vec<&Point> = points.iter().filter(|p| p.gap.n == 8 && p.gap.beta == target).collect();
        if rows.is_empty() {
            checks.info("c10b", format!("N=8 gap vs enumeration at beta={target}"), "grid has no such row", Duration::ZERO);
        }
        for p in rows {
            let exact = gap_exact(8, &p.spec.potential)?;
            let (plus_mean, plus_var) = exact_q_moments(8, Sign::Plus, &p.spec.potential)?;
            let (minus_mean, minus_var) = exact_q_moments(8, Sign::Minus, &p.spec.potential)?;
            let oracle_agrees = (plus_mean - minus_mean - exact).abs() <= 1e-12;
            let g = &p.gap;
            // never below the error of independent draws with the exact variance
            let floor = (plus_var / g.plus.n_samples as f64 + minus_var / g.minus.n_samples as f64).sqrt();
            let se = g.delta.stderr.max(floor);
            checks.record(
                "c10b",
                format!("N=8 gap vs enumeration at beta={target}"),
                oracle_agrees && (g.delta.mean - exact).abs() <= 3.0 * se,
                format!(
                    "MC = {} +- {} (batch se {}), exact = {}",
                    short(g.delta.mean),
                    short(se),
                    short(g.delta.stderr),
                    format_args!("{exact:.10e}")
                ),
                clock.lap(),
            );
        }
    }

    let worst = points
        .iter()
        .map(|p| if p.gap.delta.stderr > 0.0 { p.gap.delta.mean / p.gap.delta.stderr } else { f64::INFINITY })
        .fold(f64::INFINITY, f64::min);
    checks.record(
        "c10c",
        "gap >= -3 stderr at every grid point",
        points.iter().all(|p| p.gap.dominance_ok(3.0)),
        format!(
            "{} points, min delta/se = {}",
            points.len(),
            if worst.is_finite() { short(worst) } else { "n/a (all exact)".to_string() }
        ),
        grid_time,
    );

    let c = &cfg.factor;
    let bmax = c.betas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let nmax = *c.sizes.iter().max().expect("validated non-empty");
    for p in points.iter().filter(|p| p.gap.beta == bmax && p.gap.n == nmax) {
        let d = &p.gap.delta;
        checks.record(
            "c10d",
            format!("separation at beta={bmax}, N={nmax}"),
            p.gap.separated(5.0),
            format!("delta = {} +- {}, delta/se = {}", short(d.mean), short(d.stderr), short(d.mean / d.stderr)),
            Duration::ZERO,
        );
    }
    Ok(())
}
