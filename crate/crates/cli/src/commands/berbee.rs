//! Absorption curves of the coupling chain and partial-sum diagnostics of
//! the divergence condition.

use longrange_core::berbee::{
    berbee_diagnostic, berbee_condition_partial_sums, build_berbee_matrix, constant_absorption_closed_form,
    simulate_absorption, GrowthClass,
};
use longrange_core::seed::{derive_seed, derived_rng};
use longrange_core::VariationSequence;
use rand::Rng;
use rayon::prelude::*;

use super::{short, Outcome, BERBEE_STREAM};
use crate::config::{require, require_budget, ExperimentConfig, SequenceKind, SequenceSpec};
use crate::error::CliResult;
use crate::output::{num, Table};
use crate::report::{Clock, CheckLog};

/// Largest state space of the absorption matrix.
pub const BERBEE_MAX_K: usize = 2_000;
/// Longest partial-sum diagnostic.
pub const BERBEE_MAX_M: usize = 10_000_000;

pub const HEADER: [&str; 7] = ["kind", "sequence", "c", "k_max", "k", "n", "value"];

fn sequence(s: &SequenceSpec, m: usize) -> CliResult<VariationSequence> {
    Ok(match s.kind {
        SequenceKind::Constant => VariationSequence::constant(s.c, m)?,
        SequenceKind::Harmonic => VariationSequence::harmonic(s.c, m)?,
    })
}

/// `0..=10`, then ten points per decade up to `max`, always ending at `max`.
pub fn log_grid(max: usize) -> Vec<usize> {
    let mut pts: Vec<usize> = (0..=max.min(10)).collect();
    let mut t = 1;
    loop {
        let x = 10f64.powf(1.0 + f64::from(t) / 10.0).round() as usize;
        if x >= max {
            break;
        }
        pts.push(x);
        t += 1;
    }
    if *pts.last().unwrap() != max {
        pts.push(max);
    }
    pts
}

fn validate(cfg: &ExperimentConfig) -> CliResult<()> {
    let c = &cfg.berbee;
    require(
        c.sequences.iter().all(|s| s.c.is_finite() && s.c >= 0.0),
        "berbee.sequences",
        "need finite c >= 0",
    )?;
    require(c.k_max >= 1, "berbee.k_max", "must be >= 1")?;
    require(c.starts.iter().all(|&k| k <= c.k_max), "berbee.starts", "must not exceed berbee.k_max")?;
    require(c.partial_sum_m >= 20, "berbee.partial_sum_m", "must be >= 20")?;
    require(c.mc_paths >= 32, "berbee.mc_paths", "must be >= 32")?;
    require_budget(c.k_max, BERBEE_MAX_K, "berbee.k_max")?;
    require_budget(c.partial_sum_m, BERBEE_MAX_M, "berbee.partial_sum_m")?;
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, check: bool) -> CliResult<Outcome> {
    validate(cfg)?;
    let c = &cfg.berbee;
    let mut clock = Clock::start();
    let grid = log_grid(c.n_max);
    let len = c.partial_sum_m.max(c.k_max + 1);
    let jobs: Vec<(usize, usize)> =
        (0..c.sequences.len()).flat_map(|s| c.starts.iter().map(move |&k| (s, k))).collect();
    let curves: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(s, k)| {
            let chain = build_berbee_matrix(&sequence(&c.sequences[s], c.k_max + 1)?, c.k_max)?;
            Ok(chain.absorption_curve(k, c.n_max)?)
        })
        .collect::<CliResult<_>>()?;
    let sums: Vec<Vec<f64>> = c
        .sequences
        .par_iter()
        .map(|s| Ok(berbee_condition_partial_sums(&sequence(s, len)?, c.partial_sum_m)?))
        .collect::<CliResult<_>>()?;

    let mut table = Table::new(&HEADER);
    for (&(s, k), curve) in jobs.iter().zip(&curves) {
        let seq = &c.sequences[s];
        for &n in &grid {
            table.row([
                "absorption".to_string(),
                seq.label().to_string(),
                num(seq.c),
                c.k_max.to_string(),
                k.to_string(),
                n.to_string(),
                num(curve[n]),
            ]);
        }
    }
    for (seq, s) in c.sequences.iter().zip(&sums) {
        for &m in log_grid(c.partial_sum_m).iter().filter(|&&m| m >= 1) {
            table.row([
                "partial_sum".to_string(),
                seq.label().to_string(),
                num(seq.c),
                String::new(),
                String::new(),
                m.to_string(),
                num(s[m - 1]),
            ]);
        }
    }
    let data_time = clock.lap();

    let mut checks = CheckLog::default();
    if check {
        closed_form_check(&mut checks, c.k_max, &mut clock)?;
        mc_check(&mut checks, cfg, &mut clock)?;

        let chain = build_berbee_matrix(&VariationSequence::harmonic(1.0, c.k_max + 1)?, c.k_max)?;
        let curve = chain.absorption_curve(5, c.n_max)?;
        let last = curve[c.n_max];
        let monotone = curve.windows(2).all(|w| w[1] >= w[0] - 1e-15);
        checks.record(
            "c9c",
            format!("r_n = 1/n absorption from k=5, K_max={}, N={}", c.k_max, c.n_max),
            last > 0.9 && monotone,
            format!("P(absorbed) = {} (needs > 0.9), non-decreasing = {monotone}", short(last)),
            clock.lap() + data_time,
        );

        let m = c.partial_sum_m;
        let d2 = berbee_diagnostic(&VariationSequence::harmonic(2.0, m)?, m)?;
        checks.record(
            "c9d",
            format!("r_n = 2/n partial sums flatten, M={m}"),
            d2.growth == GrowthClass::Convergent,
            format!("relative increment over last doubling = {}, class {:?}", short(d2.relative_tail_increment), d2.growth),
            clock.lap(),
        );
        let d1 = berbee_diagnostic(&VariationSequence::harmonic(1.0, m)?, m)?;
        checks.record(
            "c9d",
            format!("r_n = 1/n partial sums grow like log M, M={m}"),
            d1.log_fit.r2 > 0.99 && d1.growth == GrowthClass::Logarithmic,
            format!(
                "R^2 vs ln M = {}, R^2 vs M = {}, slope = {}, class {:?}",
                short(d1.log_fit.r2),
                short(d1.linear_fit.r2),
                short(d1.log_fit.slope),
                d1.growth
            ),
            clock.lap(),
        );
    }
    Ok(Outcome { csv: table.finish(), checks })
}

fn closed_form_check(checks: &mut CheckLog, k_max: usize, clock: &mut Clock) -> CliResult<()> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for c in [0.0, 0.5, 1.0, 2.0] {
        let chain = build_berbee_matrix(&VariationSequence::constant(c, k_max + 1)?, k_max)?;
        for k in [1usize, 3, 5, 10].into_iter().filter(|&k| k <= k_max) {
            let curve = chain.absorption_curve(k, 100.max(2 * k))?;
            for n in [k - 1, k, 2 * k, 100] {
                worst = worst.max((curve[n] - constant_absorption_closed_form(c, k, n)).abs());
                cases += 1;
            }
        }
    }
    checks.record(
        "c9a",
        "constant r matrix iteration vs exp(-r k)",
        worst <= 1e-10,
        format!("{cases} cases, max deviation = {}", short(worst)),
        clock.lap(),
    );
    Ok(())
}

fn mc_check(checks: &mut CheckLog, cfg: &ExperimentConfig, clock: &mut Clock) -> CliResult<()> {
    let c = &cfg.berbee;
    let mut rng = derived_rng(cfg.seed, &[BERBEE_STREAM, 0]);
    for case in 0..c.mc_cases {
        let kind = if rng.random::<bool>() { SequenceKind::Constant } else { SequenceKind::Harmonic };
        let spec = SequenceSpec { kind, c: rng.random_range(0.3..2.0) };
        let k_max = if rng.random::<bool>() { 20 } else { 50 };
        let k = rng.random_range(1..=10usize);
        let n = rng.random_range(5..=200usize);
        let r = sequence(&spec, k_max + 1)?;
        let exact = build_berbee_matrix(&r, k_max)?.absorption_probability(n, k)?;
        let seed = derive_seed(cfg.seed, &[BERBEE_STREAM, 1, case as u64]);
        let est = simulate_absorption(&r, k_max, k, n, c.mc_paths, seed)?;
        let floor = (exact * (1.0 - exact) / c.mc_paths as f64).sqrt();
        let se = est.stderr.max(floor);
        let z = if se > 0.0 { (est.mean - exact).abs() / se } else { 0.0 };
        checks.record(
            "c9b",
            format!("matrix vs simulation case {}: {} c={:.3} K_max={k_max} k={k} N={n}", case + 1, spec.label(), spec.c),
            z <= 3.0,
            format!("matrix = {}, simulated = {} +- {}, |z| = {}", short(exact), short(est.mean), short(se), short(z)),
            clock.lap(),
        );
    }
    Ok(())
}
