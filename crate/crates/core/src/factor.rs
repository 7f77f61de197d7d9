//! A g-function on four symbols whose single-site factor on three symbols is
//! not a continuous g-function.
//!
//! Symbols of `A` are coded `-2, -1, 1, 2` for `-1~, -1, +1, +1~` and symbols
//! of `B` are coded `-1, 0, 1` for `-1~, 0, +1~`. With `q = exp(phi0)` the
//! normalised long-range Ising weight (`sup q < 1/2`),
//!
//! ```text
//! g(+-1  x) = q(+-1, alpha(x))
//! g(+-1~ x) = 1/2 - q(+-1, alpha(x))
//! ```
//!
//! `alpha` forgets the tilde and `pi` forgets the sign of untilded symbols.
//! Conditioned on `pi(x) = 0^N (+-1~)^inf`, the spins `alpha(x)` on `[0, N)`
//! follow the finite-volume Ising measure with `+-` boundary, so
//! `g~(+1~, 0_N^+) - g~(+1~, 0_N^-)` equals minus the plus/minus gap of
//! `E q(+1, u)`.

use crate::berbee::GFunction;
use crate::error::{Error, Result};
use crate::gibbs::{estimate_parallel, exact_marginals, EXACT_BUDGET};
use crate::potential::{q_sup, variation_bound, PotentialSpec};
use crate::seed::{derive_seed, rng_from_seed};
use crate::space::{Alphabet, BoundaryCondition, Sign};
use crate::stats::MeasureEstimate;

/// Largest conditioning depth for the gap statistic.
pub const GAP_MAX_N: usize = 512;

/// `+-1, +-1~ -> +-1`.
pub fn alpha_map(x: i8) -> i8 {
    x.signum()
}

pub fn alpha_window(x: &[i8]) -> Vec<i8> {
    x.iter().map(|&s| alpha_map(s)).collect()
}

/// `+-1 -> 0`, `+-1~ -> +-1~`.
pub fn pi_map(x: i8) -> i8 {
    match x {
        2 => 1,
        -2 => -1,
        _ => 0,
    }
}

pub fn pi_window(x: &[i8]) -> Vec<i8> {
    x.iter().map(|&s| pi_map(s)).collect()
}

/// Symbols of `A` mapping to `y` under `pi`.
pub fn pi_preimage(y: i8) -> &'static [i8] {
    match y {
        1 => &[2],
        -1 => &[-2],
        _ => &[-1, 1],
    }
}

fn check_a(x: &[i8]) -> Result<()> {
    if let Some(s) = x.iter().find(|&&s| !matches!(s, -2 | -1 | 1 | 2)) {
        return Err(Error::arg(format!("symbol {s} not in the four-symbol alphabet")));
    }
    Ok(())
}

/// `w[j - 1] = j^-alpha` for `j = 1..=len`.
fn tail_weights(len: usize, alpha: f64) -> Vec<f64> {
    (1..=len).map(|j| (j as f64).powf(-alpha)).collect()
}

/// `q(s, u)` for `u = (s, tail...)` with the tail completed by `completion`,
/// using precomputed `w[j-1] = j^-alpha`.
fn q_with_tail(s: f64, tail: &[i8], completion: Sign, spec: &PotentialSpec, w: &[f64]) -> f64 {
    if spec.beta == 0.0 {
        return spec.k.exp();
    }
    let inner: f64 = tail.iter().zip(w).map(|(&t, &wj)| alpha_map(t) as f64 * wj).sum();
    let rest = spec.boundary_sum(&BoundaryCondition::from_sign(completion), tail.len() as u64 + 1);
    (spec.k + spec.beta * s * (inner + rest)).exp()
}

/// `g(x0 tail completion^inf)`.
pub fn g_eval(x0: i8, tail: &[i8], completion: Sign, spec: &PotentialSpec) -> Result<f64> {
    check_a(&[x0])?;
    check_a(tail)?;
    let w = tail_weights(tail.len(), spec.alpha);
    Ok(g_unchecked(x0, tail, completion, spec, &w))
}

fn g_unchecked(x0: i8, tail: &[i8], completion: Sign, spec: &PotentialSpec, w: &[f64]) -> f64 {
    let q = q_with_tail(alpha_map(x0) as f64, tail, completion, spec, w);
    if x0.abs() == 1 {
        q
    } else {
        0.5 - q
    }
}

/// Bound on `var_n log g` from `var_n log q`: `log(1/2 - q)` moves at most
/// `q / (1/2 - q) <= e^-eps / (1 - e^-eps)` times as fast as `log q`.
pub fn g_variation_cap(n: usize, spec: &PotentialSpec) -> Result<f64> {
    let s = q_sup(spec);
    if s >= 0.5 {
        return Err(Error::arg("sup q must stay below 1/2"));
    }
    Ok(variation_bound(n, spec)? * (s / (0.5 - s)).max(1.0))
}

/// Parameters of one counterexample run.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSpec {
    pub potential: PotentialSpec,
    pub n: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub batches_per_chain: usize,
    pub seed: u64,
}

impl CounterexampleSpec {
    /// Uses `K = choose_k(beta, alpha)`.
    pub fn new(alpha: f64, beta: f64, n: usize, sweeps: usize, burn_in: usize, seed: u64) -> Result<Self> {
        let spec = CounterexampleSpec {
            potential: PotentialSpec::normalized(alpha, beta)?,
            n,
            sweeps,
            burn_in,
            chains: 4,
            batches_per_chain: 20,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if q_sup(&self.potential) >= 0.5 {
            return Err(Error::arg(format!(
                "K = {} leaves sup q = {} >= 1/2",
                self.potential.k,
                q_sup(&self.potential)
            )));
        }
        if self.n == 0 || self.n > GAP_MAX_N {
            return Err(Error::arg(format!("N must be in 1..={GAP_MAX_N}, got {}", self.n)));
        }
        if self.sweeps <= self.burn_in {
            return Err(Error::arg("sweeps must exceed burn_in"));
        }
        if self.chains == 0 {
            return Err(Error::arg("need at least one chain"));
        }
        Ok(())
    }

    pub fn g(&self) -> CounterexampleG {
        CounterexampleG::new(self.potential.clone())
    }
}

/// The g-function as a [`GFunction`] over the four-symbol alphabet.
#[derive(Debug, Clone)]
pub struct CounterexampleG {
    alphabet: Alphabet,
    spec: PotentialSpec,
}

impl CounterexampleG {
    pub fn new(spec: PotentialSpec) -> Self {
        CounterexampleG { alphabet: Alphabet::tilde_spins(), spec }
    }
}

impl GFunction for CounterexampleG {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn eval(&self, x0: i8, tail: &[i8], completion: Sign) -> f64 {
        let w = tail_weights(tail.len(), self.spec.alpha);
        g_unchecked(x0, tail, completion, &self.spec, &w)
    }
}

/// Draws `x_{L-1}, x_{L-2}, ..., x_0` in turn, each from `g(., x_{k+1} ...)`
/// with every coordinate past `L - 1` equal to the completion. Returns
/// `(x_0, ..., x_{L-1})`.
pub fn simulate_g_chain<R: rand::Rng + ?Sized>(
    spec: &PotentialSpec,
    length: usize,
    completion: Sign,
    rng: &mut R,
) -> Result<Vec<i8>> {
    if length == 0 {
        return Err(Error::arg("chain length must be >= 1"));
    }
    let w = tail_weights(length, spec.alpha);
    let mut x = vec![0i8; length];
    for k in (0..length).rev() {
        let tail = &x[k + 1..];
        let qp = q_with_tail(1.0, tail, completion, spec, &w);
        let qm = q_with_tail(-1.0, tail, completion, spec, &w);
        let u: f64 = rng.random();
        // order: +1, -1, +1~, -1~
        x[k] = if u < qp {
            1
        } else if u < qp + qm {
            -1
        } else if u < 0.5 + qm {
            2
        } else {
            -2
        };
    }
    Ok(x)
}

/// Seeded variant of [`simulate_g_chain`].
pub fn simulate_g_chain_seeded(spec: &PotentialSpec, length: usize, completion: Sign, seed: u64) -> Result<Vec<i8>> {
    simulate_g_chain(spec, length, completion, &mut rng_from_seed(seed))
}

/// A factor window `y_0 ... y_{N-1}` followed by the constant `+-1~` tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorWindow {
    values: Vec<i8>,
    tail: Sign,
}

impl FactorWindow {
    pub fn new(values: Vec<i8>, tail: Sign) -> Result<Self> {
        if let Some(s) = values.iter().find(|&&s| !matches!(s, -1..=1)) {
            return Err(Error::arg(format!("symbol {s} not in the factor alphabet")));
        }
        Ok(FactorWindow { values, tail })
    }

    /// `0_N^+-`: zeros on `[0, N)` and `+-1~` from `N` on.
    pub fn zero_bar(n: usize, tail: Sign) -> Self {
        FactorWindow { values: vec![0; n], tail }
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn tail(&self) -> Sign {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero_bar(&self) -> bool {
        self.values.iter().all(|&y| y == 0)
    }
}

/// `sum_{x0 in pi^-1(y0)} g(x0, x)` for a window `x` over `A`.
fn g_sum_over_preimage(y0: i8, x: &[i8], completion: Sign, spec: &PotentialSpec, w: &[f64]) -> f64 {
    pi_preimage(y0).iter().map(|&x0| g_unchecked(x0, x, completion, spec, w)).sum()
}

/// `g~(y0, y)` by exact enumeration of `mu(x | pi(x) = y)` on the window:
/// sites with `y_i = 0` range over `+-1`, the others are pinned, and each
/// configuration has weight `prod_{k < N} g(x_k x_{k+1} ...)`.
pub fn induced_g_exact(y0: i8, y: &FactorWindow, spec: &PotentialSpec) -> Result<f64> {
    if !matches!(y0, -1..=1) {
        return Err(Error::arg(format!("symbol {y0} not in the factor alphabet")));
    }
    let free: Vec<usize> = (0..y.len()).filter(|&i| y.values[i] == 0).collect();
    if free.len() > EXACT_BUDGET {
        return Err(Error::Resource { what: "free factor sites", requested: free.len(), limit: EXACT_BUDGET });
    }
    let n = y.len();
    let w = tail_weights(n, spec.alpha);
    let completion = y.tail;
    let mut x: Vec<i8> = y.values.iter().map(|&v| 2 * v).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut logs = Vec::with_capacity(1 << free.len());
    for mask in 0..1usize << free.len() {
        for (b, &i) in free.iter().enumerate() {
            x[i] = if mask >> b & 1 == 1 { 1 } else { -1 };
        }
        let lw: f64 = (0..n).map(|k| g_unchecked(x[k], &x[k + 1..], completion, spec, &w).ln()).sum();
        logs.push((lw, g_sum_over_preimage(y0, &x, completion, spec, &w)));
    }
    let max = logs.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
    for (lw, v) in logs {
        let p = (lw - max).exp();
        den += p;
        num += p * v;
    }
    Ok(num / den)
}

/// `u -> q(+1, u)` for a window of `N` spins followed by the constant `sign`
/// tail, which is summed analytically.
fn q_plus_functional(n: usize, sign: Sign, spec: &PotentialSpec) -> impl Fn(&[i8]) -> f64 + Sync {
    let w = tail_weights(n, spec.alpha);
    let spec = spec.clone();
    move |v: &[i8]| q_with_tail(1.0, v, sign, &spec, &w)
}

fn q_minus_functional(n: usize, sign: Sign, spec: &PotentialSpec) -> impl Fn(&[i8]) -> f64 + Sync {
    let w = tail_weights(n, spec.alpha);
    let spec = spec.clone();
    move |v: &[i8]| q_with_tail(-1.0, v, sign, &spec, &w)
}

/// Exact `E q(s, u)` under `nu_N^sign` (`N <= 20`).
pub fn expected_q_exact(n: usize, sign: Sign, s: Sign, spec: &PotentialSpec) -> Result<f64> {
    let dist = exact_marginals(n, &BoundaryCondition::from_sign(sign), spec)?;
    let f = q_plus_functional(n, sign, spec);
    let g = q_minus_functional(n, sign, spec);
    Ok(dist.expect(|u| if s == Sign::Plus { f(u) } else { g(u) }))
}

/// `E q(s, u)` under `nu_N^sign` by parallel heat-bath chains.
pub fn expected_q_mc(spec: &CounterexampleSpec, sign: Sign, s: Sign, stream: u64) -> Result<MeasureEstimate> {
    spec.validate()?;
    let n = spec.n;
    let seed = derive_seed(spec.seed, &[stream]);
    let est = match s {
        Sign::Plus => estimate_parallel(
            n,
            sign,
            &spec.potential,
            q_plus_functional(n, sign, &spec.potential),
            spec.chains,
            spec.sweeps,
            spec.burn_in,
            spec.batches_per_chain,
            seed,
        )?,
        Sign::Minus => estimate_parallel(
            n,
            sign,
            &spec.potential,
            q_minus_functional(n, sign, &spec.potential),
            spec.chains,
            spec.sweeps,
            spec.burn_in,
            spec.batches_per_chain,
            seed,
        )?,
    };
    Ok(est.with_provenance(spec.seed, spec.burn_in))
}

/// `g~(y0, 0_N^+-)` estimated through `nu_N^+-`:
/// `g~(+-1~) = 1/2 - E q(+-1, u)` and `g~(0) = E q(+1, u) + E q(-1, u)`.
pub fn induced_g_estimate(y0: i8, y: &FactorWindow, spec: &CounterexampleSpec) -> Result<MeasureEstimate> {
    if !y.is_zero_bar() {
        if y.len() > 12 {
            return Err(Error::Unsupported("general factor windows are enumerated only up to N = 12"));
        }
        return Ok(MeasureEstimate::exact(induced_g_exact(y0, y, &spec.potential)?));
    }
    if y.len() != spec.n {
        return Err(Error::arg("window length differs from the configured N"));
    }
    let sign = y.tail;
    let neg = |e: MeasureEstimate| MeasureEstimate { mean: 0.5 - e.mean, ..e };
    match y0 {
        1 => Ok(neg(expected_q_mc(spec, sign, Sign::Plus, 1)?)),
        -1 => Ok(neg(expected_q_mc(spec, sign, Sign::Minus, 2)?)),
        0 => {
            let p = expected_q_mc(spec, sign, Sign::Plus, 1)?;
            let m = expected_q_mc(spec, sign, Sign::Minus, 2)?;
            // both from the same seeds; errors add conservatively
            Ok(MeasureEstimate { mean: p.mean + m.mean, stderr: p.stderr + m.stderr, ..p })
        }
        other => Err(Error::arg(format!("symbol {other} not in the factor alphabet"))),
    }
}

/// `Delta_N = E_{nu_N^+} q(+1, u) - E_{nu_N^-} q(+1, u)` with its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct GapStatistic {
    pub n: usize,
    pub beta: f64,
    pub plus: MeasureEstimate,
    pub minus: MeasureEstimate,
    pub delta: MeasureEstimate,
}

impl GapStatistic {
    /// `Delta >= -k stderr`.
    pub fn dominance_ok(&self, k: f64) -> bool {
        self.delta.mean >= -k * self.delta.stderr
    }

    /// `Delta > k stderr`.
    pub fn separated(&self, k: f64) -> bool {
        self.delta.mean > k * self.delta.stderr
    }
}

/// Plus and minus chains start from all `+` and all `-` respectively and use
/// independent seeds.
pub fn gap_statistic(spec: &CounterexampleSpec) -> Result<GapStatistic> {
    let plus = expected_q_mc(spec, Sign::Plus, Sign::Plus, 1)?;
    let minus = expected_q_mc(spec, Sign::Minus, Sign::Plus, 3)?;
    Ok(GapStatistic {
        n: spec.n,
        beta: spec.potential.beta,
        delta: plus.minus(&minus),
        plus,
        minus,
    })
}

/// Exact `Delta_N` by enumeration (`N <= 20`).
pub fn gap_exact(n: usize, spec: &PotentialSpec) -> Result<f64> {
    Ok(expected_q_exact(n, Sign::Plus, Sign::Plus, spec)? - expected_q_exact(n, Sign::Minus, Sign::Plus, spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::berbee::{gmeasure_residual, transfer_iterate, CylinderTable};
    use crate::gibbs::atom_index;
    use crate::potential::{empirical_variation, DEFAULT_EXP_CAP};
    use crate::seed::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    const A: [i8; 4] = [-2, -1, 1, 2];

    fn spec(beta: f64) -> PotentialSpec {
        PotentialSpec::normalized(2.0, beta).unwrap()
    }

    #[test]
    fn symbol_maps() {
        assert_eq!(alpha_map(2), 1);
        assert_eq!(alpha_window(&[-1, 2, -2]), vec![-1, 1, -1]);
        assert_eq!(A.iter().filter(|&&a| alpha_map(a) == 1).count(), 2);
        assert_eq!(pi_map(1), 0);
        assert_eq!(pi_map(-2), -1);
        assert_eq!(pi_window(&[1, -1, 2, -2]), vec![0, 0, 1, -1]);
        assert_eq!(A.iter().filter(|&&a| pi_map(a) == 0).count(), 2);
        assert_eq!(pi_preimage(1), &[2]);
        for y in -1..=1 {
            assert!(pi_preimage(y).iter().all(|&x| pi_map(x) == y));
        }
    }

    #[test]
    fn g_is_positive_and_normalised() {
        let mut rng = rng_from_seed(1);
        for beta in [0.0, 0.25, 1.0, 4.0, 16.0] {
            let sp = spec(beta);
            for _ in 0..2000 {
                let len = rng.random_range(0..40);
                let tail: Vec<i8> = (0..len).map(|_| A[rng.random_range(0..4)]).collect();
                let c = if rng.random() { Sign::Plus } else { Sign::Minus };
                let vals: Vec<f64> = A.iter().map(|&a| g_eval(a, &tail, c, &sp).unwrap()).collect();
                assert!(vals.iter().all(|&v| v > 0.0));
                assert_abs_diff_eq!(vals.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
        assert!(g_eval(0, &[], Sign::Plus, &spec(1.0)).is_err());
    }

    #[test]
    fn zero_beta_g_is_constant() {
        let sp = spec(0.0);
        let ek = sp.k.exp();
        assert_eq!(g_eval(1, &[2, -1], Sign::Minus, &sp).unwrap(), ek);
        assert_eq!(g_eval(-2, &[1], Sign::Plus, &sp).unwrap(), 0.5 - ek);
        let y = FactorWindow::new(vec![0, 1, -1, 0], Sign::Plus).unwrap();
        assert_abs_diff_eq!(induced_g_exact(1, &y, &sp).unwrap(), 0.5 - ek, epsilon = 1e-15);
    }

    #[test]
    fn g_matches_the_potential_module() {
        let sp = spec(1.3);
        let tail = [2i8, -1, -2, 1, 1];
        let u: Vec<i8> = std::iter::once(1).chain(alpha_window(&tail)).collect();
        let q = crate::potential::q_eval_capped(&u, &sp, &BoundaryCondition::AllMinus, DEFAULT_EXP_CAP).unwrap();
        assert_abs_diff_eq!(g_eval(1, &tail, Sign::Minus, &sp).unwrap(), q, epsilon = 1e-15);
        assert_abs_diff_eq!(g_eval(2, &tail, Sign::Minus, &sp).unwrap(), 0.5 - q, epsilon = 1e-15);
    }

    #[test]
    fn g_variation_stays_under_cap() {
        let sp = spec(1.0);
        let g = CounterexampleG::new(sp.clone());
        let alphabet = Alphabet::tilde_spins();
        for n in [1usize, 2, 4, 8, 16, 32, 64] {
            let emp = empirical_variation(|x, c| g.eval(x[0], &x[1..], c).ln(), &alphabet, n, 32, 400, n as u64);
            assert!(emp <= g_variation_cap(n, &sp).unwrap() + 1e-12, "n={n}: {emp}");
        }
    }

    #[test]
    fn chain_is_seed_deterministic() {
        let sp = spec(1.0);
        let a = simulate_g_chain_seeded(&sp, 50, Sign::Plus, 9).unwrap();
        assert_eq!(a, simulate_g_chain_seeded(&sp, 50, Sign::Plus, 9).unwrap());
        assert_ne!(a, simulate_g_chain_seeded(&sp, 50, Sign::Plus, 10).unwrap());
        assert!(simulate_g_chain_seeded(&sp, 0, Sign::Plus, 1).is_err());
    }

    #[test]
    fn zero_beta_chain_is_iid() {
        let sp = spec(0.0);
        let ek = sp.k.exp();
        let x = simulate_g_chain_seeded(&sp, 200_000, Sign::Plus, 2).unwrap();
        for (sym, p) in [(1i8, ek), (-1, ek), (2, 0.5 - ek), (-2, 0.5 - ek)] {
            let f = x.iter().filter(|&&s| s == sym).count() as f64 / x.len() as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / x.len() as f64).sqrt(), "{sym}: {f} vs {p}");
        }
    }

    #[test]
    fn short_chains_match_transfer_predictions() {
        let sp = spec(1.0);
        let g = CounterexampleG::new(sp.clone());
        let alphabet = Alphabet::tilde_spins();
        let mut rng = rng_from_seed(5);
        let total = 200_000;
        let mut counts = [0usize; 16];
        let probe = CylinderTable::constant(alphabet.clone(), 2, 0.0);
        for _ in 0..total {
            let x = simulate_g_chain(&sp, 2, Sign::Plus, &mut rng).unwrap();
            counts[probe.index(&x).unwrap()] += 1;
        }
        for (idx, &c) in counts.iter().enumerate() {
            let cyl = probe.cylinder(idx);
            let ind = CylinderTable::indicator(alphabet.clone(), &cyl).unwrap();
            let p = transfer_iterate(&ind, &g, Sign::Plus, 2).unwrap().values()[0];
            let f = c as f64 / total as f64;
            let se = (p * (1.0 - p) / total as f64).sqrt();
            assert!((f - p).abs() < 4.0 * se, "{cyl:?}: {f} vs {p}");
        }
        let tot: f64 = (0..16)
            .map(|i| {
                let ind = CylinderTable::indicator(alphabet.clone(), &probe.cylinder(i)).unwrap();
                transfer_iterate(&ind, &g, Sign::Plus, 2).unwrap().values()[0]
            })
            .sum();
        assert_abs_diff_eq!(tot, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn long_chain_samples_are_stationary_for_g() {
        let sp = spec(0.8);
        let g = CounterexampleG::new(sp.clone());
        let mut rng = rng_from_seed(6);
        let samples: Vec<Vec<i8>> = (0..20_000).map(|_| simulate_g_chain(&sp, 24, Sign::Plus, &mut rng).unwrap()).collect();
        let rep = gmeasure_residual(&g, &samples, 2, Sign::Plus, 32).unwrap();
        assert!(rep.consistent(4.0), "{rep:?}");
    }

    #[test]
    fn projection_commutes_with_cylinder_counts() {
        let sp = spec(1.0);
        let mut rng = rng_from_seed(7);
        let mut cx = [[0usize; 4]; 4];
        let mut cy = [[0usize; 3]; 3];
        for _ in 0..2000 {
            let x = simulate_g_chain(&sp, 8, Sign::Minus, &mut rng).unwrap();
            let y = pi_window(&x);
            let ax = |s: i8| A.iter().position(|&a| a == s).unwrap();
            cx[ax(x[0])][ax(x[1])] += 1;
            cy[(y[0] + 1) as usize][(y[1] + 1) as usize] += 1;
        }
        for y0 in -1..=1i8 {
            for y1 in -1..=1i8 {
                let pushed: usize = A
                    .iter()
                    .filter(|&&a| pi_map(a) == y0)
                    .flat_map(|&a| A.iter().filter(move |&&b| pi_map(b) == y1).map(move |&b| (a, b)))
                    .map(|(a, b)| {
                        cx[A.iter().position(|&s| s == a).unwrap()][A.iter().position(|&s| s == b).unwrap()]
                    })
                    .sum();
                assert_eq!(pushed, cy[(y0 + 1) as usize][(y1 + 1) as usize]);
            }
        }
    }

    #[test]
    fn zero_bar_conditional_is_the_boundary_ising_measure() {
        // chain started from +1~ at distance N, accepted when pi(x) = 0 on [0, N)
        let (n, beta) = (4usize, 1.0);
        let sp = spec(beta);
        let exact = exact_marginals(n, &BoundaryCondition::AllPlus, &sp).unwrap();
        let mut rng = rng_from_seed(8);
        let mut counts = vec![0usize; 1 << n];
        let mut accepted = 0usize;
        for _ in 0..400_000 {
            let x = simulate_g_chain(&sp, n, Sign::Plus, &mut rng).unwrap();
            if x.iter().all(|&s| s.abs() == 1) {
                counts[atom_index(&x)] += 1;
                accepted += 1;
            }
        }
        assert!(accepted > 5000);
        for (i, &c) in counts.iter().enumerate() {
            let p = exact.probs()[i];
            let f = c as f64 / accepted as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / accepted as f64).sqrt() + 1e-4, "atom {i}: {f} vs {p}");
        }
    }

    #[test]
    fn exact_induced_g_on_zero_bar_uses_the_ising_conditional() {
        let sp = spec(1.0);
        for sign in [Sign::Plus, Sign::Minus] {
            let y = FactorWindow::zero_bar(6, sign);
            let via_ising = 0.5 - expected_q_exact(6, sign, Sign::Plus, &sp).unwrap();
            assert_abs_diff_eq!(induced_g_exact(1, &y, &sp).unwrap(), via_ising, epsilon = 1e-12);
        }
    }

    #[test]
    fn induced_g_is_normalised() {
        let sp = spec(2.0);
        for vals in [vec![0, 0, 0], vec![1, 0, -1, 0], vec![-1, -1, 0, 1, 0]] {
            let y = FactorWindow::new(vals, Sign::Minus).unwrap();
            let s: f64 = (-1..=1).map(|y0| induced_g_exact(y0, &y, &sp).unwrap()).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        let cs = CounterexampleSpec::new(2.0, 1.0, 8, 20_000, 500, 4).unwrap();
        let y = FactorWindow::zero_bar(8, Sign::Plus);
        let parts: Vec<MeasureEstimate> = (-1..=1).map(|y0| induced_g_estimate(y0, &y, &cs).unwrap()).collect();
        let total: f64 = parts.iter().map(|e| e.mean).sum();
        let se: f64 = parts.iter().map(|e| e.stderr).sum();
        assert!((total - 1.0).abs() <= 3.0 * se + 1e-12, "{total} +- {se}");
    }

    #[test]
    fn zero_bar_estimate_matches_enumeration() {
        let cs = CounterexampleSpec::new(2.0, 1.0, 8, 40_000, 500, 11).unwrap();
        let y = FactorWindow::zero_bar(8, Sign::Plus);
        let est = induced_g_estimate(1, &y, &cs).unwrap();
        let exact = 0.5 - expected_q_exact(8, Sign::Plus, Sign::Plus, &cs.potential).unwrap();
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn gap_statistic_examples() {
        let zero = gap_statistic(&CounterexampleSpec::new(2.0, 0.0, 8, 2000, 100, 1).unwrap()).unwrap();
        assert_eq!(zero.delta.mean, 0.0);
        assert!(zero.dominance_ok(3.0));
        let cs = CounterexampleSpec::new(2.0, 1.0, 8, 40_000, 500, 2).unwrap();
        let gap = gap_statistic(&cs).unwrap();
        let exact = gap_exact(8, &cs.potential).unwrap();
        assert!(exact > 0.0);
        assert!(gap.delta.within(exact, 3.0), "{gap:?} vs {exact}");
        assert!(gap.dominance_ok(3.0));
        assert!(CounterexampleSpec::new(2.0, 1.0, 513, 10, 1, 0).is_err());
    }

    #[test]
    fn spec_rejects_a_bad_constant() {
        let mut cs = CounterexampleSpec::new(2.0, 1.0, 8, 100, 10, 0).unwrap();
        cs.potential = cs.potential.clone().with_k(0.0);
        assert!(cs.validate().is_err());
    }
}
