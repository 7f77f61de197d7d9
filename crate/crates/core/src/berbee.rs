//! The absorbing chain bounding mixing of `[0,N)`-Gibbsian measures, the
//! divergence diagnostic for `sum_n exp(-r_1 - ... - r_n)`, and the transfer
//! operator of a g-function acting on cylinder tables.
//!
//! The chain lives on `{0, 1, ..., K_max}`; `0` is absorbing and for `i > 0`
//!
//! ```text
//! P[i][j] = 0                          j < i - 1
//! P[i][i-1] = exp(-r_{i-1})
//! P[i][j] = exp(-r_{j+1}) - exp(-r_j)  j >= i
//! ```
//!
//! with `r_0 := r_1`. Mass that would leave `[0, K_max]`, and the row deficit
//! `exp(-r_i) - exp(-r_{i-1})`, goes to a cemetery that never absorbs, so every
//! reported absorption probability is a lower bound.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::VariationSequence;
use crate::seed::derived_rng;
use crate::space::{Alphabet, Sign};
use crate::stats::{LinearFit, MeasureEstimate};

/// What happens to transitions past `K_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverflowPolicy {
    /// Escaping mass is discarded as never absorbed.
    Cemetery,
}

#[derive(Debug, Clone)]
pub struct BerbeeChain {
    k_max: usize,
    p: Vec<Vec<f64>>,
    r: VariationSequence,
    policy: OverflowPolicy,
}

/// `exp(-r_j)` for `j = 0..=k_max+1` with `r_0 := r_1`.
fn stay_weights(r: &VariationSequence, k_max: usize) -> Vec<f64> {
    (0..=k_max + 1)
        .map(|j| (-r.get(j.max(1)).unwrap()).exp())
        .collect()
}

/// Builds the truncated matrix. `r` must be non-increasing and hold at least
/// `k_max + 1` terms.
pub fn build_berbee_matrix(r: &VariationSequence, k_max: usize) -> Result<BerbeeChain> {
    if k_max < 1 {
        return Err(Error::arg("K_max must be >= 1"));
    }
    if r.len() < k_max + 1 {
        return Err(Error::arg(format!(
            "need r_1..r_{} for K_max = {k_max}, got {} terms",
            k_max + 1,
            r.len()
        )));
    }
    if !r.is_non_increasing() {
        return Err(Error::arg(
            "variation sequence must be non-increasing; pass the monotone envelope r^_k = sup_{m>=k} r_m",
        ));
    }
    let e = stay_weights(r, k_max);
    let mut p = vec![vec![0.0; k_max + 1]; k_max + 1];
    p[0][0] = 1.0;
    for (i, row) in p.iter_mut().enumerate().skip(1) {
        row[i - 1] = e[i - 1];
        for j in i..=k_max {
            row[j] = e[j + 1] - e[j];
        }
    }
    Ok(BerbeeChain { k_max, p, r: r.clone(), policy: OverflowPolicy::Cemetery })
}

impl BerbeeChain {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn variations(&self) -> &VariationSequence {
        &self.r
    }

    pub fn policy(&self) -> OverflowPolicy {
        self.policy
    }

    /// Mass lost from row `i` per step.
    pub fn row_deficit(&self, i: usize) -> f64 {
        1.0 - self.p[i].iter().sum::<f64>()
    }

    fn step(&self, v: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.k_max + 1];
        w[0] = v[0];
        for i in 1..=self.k_max {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let row = &self.p[i];
            for j in i - 1..=self.k_max {
                w[j] += vi * row[j];
            }
        }
        w
    }

    /// `P(Z_t = 0 | Z_0 = k)` for `t = 0..=n`.
    pub fn absorption_curve(&self, k: usize, n: usize) -> Result<Vec<f64>> {
        if k > self.k_max {
            return Err(Error::arg(format!("start state {k} beyond K_max = {}", self.k_max)));
        }
        let mut v = vec![0.0; self.k_max + 1];
        v[k] = 1.0;
        let mut out = Vec::with_capacity(n + 1);
        out.push(v[0]);
        for _ in 0..n {
            v = self.step(&v);
            out.push(v[0]);
        }
        Ok(out)
    }

    /// `P(Z_N = 0 | Z_0 = k)` by iterated vector-matrix products.
    pub fn absorption_probability(&self, n: usize, k: usize) -> Result<f64> {
        Ok(*self.absorption_curve(k, n)?.last().unwrap())
    }

    /// Squared absorption probability: a lower bound on `rho_k` between any
    /// two `[0,N)`-Gibbsian measures whose variations are dominated by `r`.
    pub fn mixing_lower_bound(&self, n: usize, k: usize) -> Result<f64> {
        Ok(self.absorption_probability(n, k)?.powi(2))
    }
}

/// Absorption probability for constant `r = c`: `exp(-c k)` once `N >= k`.
pub fn constant_absorption_closed_form(c: f64, k: usize, n: usize) -> f64 {
    if n >= k {
        (-c * k as f64).exp()
    } else {
        0.0
    }
}

/// Simulates `paths` trajectories of the chain directly from `r` (no matrix)
/// and estimates `P(Z_N = 0 | Z_0 = k)`. Paths are split into 32 independent
/// groups with derived seeds and run in parallel.
pub fn simulate_absorption(
    r: &VariationSequence,
    k_max: usize,
    k: usize,
    n: usize,
    paths: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    const GROUPS: usize = 32;
    if r.len() < k_max + 1 || !r.is_non_increasing() {
        return Err(Error::arg("need a non-increasing r with at least K_max + 1 terms"));
    }
    if k > k_max {
        return Err(Error::arg("start state beyond K_max"));
    }
    if paths < GROUPS {
        return Err(Error::arg(format!("need at least {GROUPS} paths")));
    }
    let e = stay_weights(r, k_max);
    let group_means: Vec<f64> = (0..GROUPS)
        .into_par_iter()
        .map(|g| {
            let mut rng = derived_rng(seed, &[g as u64]);
            let count = paths / GROUPS + usize::from(g < paths % GROUPS);
            let mut absorbed = 0usize;
            for _ in 0..count {
                let mut z = k;
                for _ in 0..n {
                    if z == 0 {
                        break;
                    }
                    let u: f64 = rng.random();
                    if u < e[z - 1] {
                        z -= 1;
                        continue;
                    }
                    // upward: first j >= z with exp(-r_{j+1}) - exp(-r_z) > u - exp(-r_{z-1})
                    let target = u - e[z - 1] + e[z];
                    let slice = &e[z + 1..=k_max + 1];
                    let pos = slice.partition_point(|&x| x <= target);
                    if pos == slice.len() {
                        z = usize::MAX;
                        break;
                    }
                    z += pos;
                }
                if z == 0 {
                    absorbed += 1;
                }
            }
            absorbed as f64 / count as f64
        })
        .collect();
    let mean = group_means.iter().sum::<f64>() / GROUPS as f64;
    let var = group_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (GROUPS as f64 - 1.0);
    Ok(MeasureEstimate {
        mean,
        stderr: (var / GROUPS as f64).sqrt(),
        n_samples: paths,
        seed,
        burn_in: 0,
    })
}

/// `S_n = sum_{m<=n} exp(-r_1 - ... - r_m)` for `n = 1..=m`.
pub fn berbee_condition_partial_sums(r: &VariationSequence, m: usize) -> Result<Vec<f64>> {
    if m > r.len() {
        return Err(Error::arg(format!("need {m} variations, have {}", r.len())));
    }
    let mut cum = 0.0;
    let mut acc = 0.0;
    Ok(r.values()[..m]
        .iter()
        .map(|v| {
            cum += v;
            acc += (-cum).exp();
            acc
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    Linear,
    Logarithmic,
    /// The curve has flattened: consistent with a convergent series.
    Convergent,
}

/// Growth diagnostic for a partial-sum curve. Never a proof of divergence.
#[derive(Debug, Clone, PartialEq)]
pub struct BerbeeDiagnostic {
    pub partial_sums: Vec<f64>,
    /// Fit of `S_M` against `M` on log-spaced `M`.
    pub linear_fit: LinearFit,
    /// Fit of `S_M` against `ln M` on log-spaced `M`.
    pub log_fit: LinearFit,
    /// `(S_M - S_{M/2}) / S_M`.
    pub relative_tail_increment: f64,
    pub growth: GrowthClass,
}

/// Below this relative increment over the last doubling the curve counts as flat.
pub const FLAT_THRESHOLD: f64 = 1e-3;

pub fn berbee_diagnostic(r: &VariationSequence, m: usize) -> Result<BerbeeDiagnostic> {
    if m < 20 {
        return Err(Error::arg("diagnostic needs M >= 20"));
    }
    let s = berbee_condition_partial_sums(r, m)?;
    let mut idx: Vec<usize> = (0..=60)
        .map(|t| (10f64 * (m as f64 / 10.0).powf(t as f64 / 60.0)).round() as usize)
        .map(|i| i.clamp(10, m))
        .collect();
    idx.dedup();
    let xs: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| s[i - 1]).collect();
    let linear_fit = LinearFit::fit(&xs, &ys).ok_or_else(|| Error::arg("degenerate fit"))?;
    let log_fit = LinearFit::fit(&lx, &ys).ok_or_else(|| Error::arg("degenerate fit"))?;
    let last = s[m - 1];
    let relative_tail_increment = (last - s[m / 2 - 1]) / last;
    let growth = if relative_tail_increment < FLAT_THRESHOLD {
        GrowthClass::Convergent
    } else if linear_fit.r2 >= log_fit.r2 {
        GrowthClass::Linear
    } else {
        GrowthClass::Logarithmic
    };
    Ok(BerbeeDiagnostic { partial_sums: s, linear_fit, log_fit, relative_tail_increment, growth })
}

/// A g-function evaluated on finite windows with a declared constant tail
/// completion.
pub trait GFunction {
    fn alphabet(&self) -> &Alphabet;

    /// `g(x0 x_1 x_2 ...)` with `tail = (x_1, ..., x_m)` and every later
    /// coordinate equal to the completion symbol.
    fn eval(&self, x0: i8, tail: &[i8], completion: Sign) -> f64;
}

/// `g = 1/|A|`.
#[derive(Debug, Clone)]
pub struct UniformG {
    alphabet: Alphabet,
}

impl UniformG {
    pub fn new(alphabet: Alphabet) -> Self {
        UniformG { alphabet }
    }
}

impl GFunction for UniformG {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn eval(&self, _: i8, _: &[i8], _: Sign) -> f64 {
        1.0 / self.alphabet.len() as f64
    }
}

/// A function of the first `depth` coordinates, stored densely. The index of
/// `(x_0, ..., x_{d-1})` is `sum_i pos(x_i) |A|^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderTable {
    alphabet: Alphabet,
    depth: usize,
    values: Vec<f64>,
}

impl CylinderTable {
    pub fn constant(alphabet: Alphabet, depth: usize, value: f64) -> Self {
        let size = alphabet.len().pow(depth as u32);
        CylinderTable { alphabet, depth, values: vec![value; size] }
    }

    /// Indicator of the cylinder `[c_0 ... c_{d-1}]`.
    pub fn indicator(alphabet: Alphabet, cylinder: &[i8]) -> Result<Self> {
        let mut t = CylinderTable::constant(alphabet, cylinder.len(), 0.0);
        let idx = t.index(cylinder)?;
        t.values[idx] = 1.0;
        Ok(t)
    }

    pub fn from_fn(alphabet: Alphabet, depth: usize, f: impl Fn(&[i8]) -> f64) -> Self {
        let mut t = CylinderTable::constant(alphabet, depth, 0.0);
        for i in 0..t.values.len() {
            t.values[i] = f(&t.cylinder(i));
        }
        t
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, x: &[i8]) -> Result<usize> {
        if x.len() != self.depth {
            return Err(Error::arg("cylinder length differs from table depth"));
        }
        let base = self.alphabet.len();
        let mut idx = 0;
        for &s in x.iter().rev() {
            let pos = self.alphabet.index_of(s).ok_or_else(|| Error::arg(format!("symbol {s} not in alphabet")))?;
            idx = idx * base + pos;
        }
        Ok(idx)
    }

    pub fn cylinder(&self, mut index: usize) -> Vec<i8> {
        let base = self.alphabet.len();
        (0..self.depth)
            .map(|_| {
                let s = self.alphabet.symbols()[index % base];
                index /= base;
                s
            })
            .collect()
    }

    pub fn get(&self, x: &[i8]) -> Result<f64> {
        Ok(self.values[self.index(x)?])
    }
}

/// `(L_g f)(x) = sum_a g(a x) f(a x)` on depth-`d-1` cylinders, with `g`
/// evaluated on the depth-`d` cylinder `a x` followed by the completion.
pub fn transfer_apply<G: GFunction + ?Sized>(f: &CylinderTable, g: &G, completion: Sign) -> Result<CylinderTable> {
    if f.depth == 0 {
        return Err(Error::arg("cannot apply the transfer operator to a depth-0 table"));
    }
    if f.alphabet != *g.alphabet() {
        return Err(Error::arg("table and g-function alphabets differ"));
    }
    let base = f.alphabet.len();
    let mut out = CylinderTable::constant(f.alphabet.clone(), f.depth - 1, 0.0);
    for xi in 0..out.values.len() {
        let x = out.cylinder(xi);
        out.values[xi] = f
            .alphabet
            .symbols()
            .iter()
            .enumerate()
            .map(|(ai, &a)| g.eval(a, &x, completion) * f.values[ai + base * xi])
            .sum();
    }
    Ok(out)
}

/// `L_g^steps f`.
pub fn transfer_iterate<G: GFunction + ?Sized>(
    f: &CylinderTable,
    g: &G,
    completion: Sign,
    steps: usize,
) -> Result<CylinderTable> {
    let mut t = f.clone();
    for _ in 0..steps {
        t = transfer_apply(&t, g, completion)?;
    }
    Ok(t)
}

/// Largest discrepancy between sampled cylinder masses and the masses
/// predicted by one application of `L_g^*` to the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub depth: usize,
    /// `max_C |mu^(C) - int g(c_0 x) 1{x in [c_1..c_{d-1}]} dmu^(x)|`.
    pub max_abs: f64,
    /// Batch-means standard error of the residual at the maximizing cylinder.
    pub stderr_at_max: f64,
    /// Largest `|residual| / stderr` over cylinders with nonzero error.
    pub max_z: f64,
    pub n_samples: usize,
}

impl ResidualReport {
    pub fn consistent(&self, k: f64) -> bool {
        self.max_abs <= k * self.stderr_at_max
    }
}

/// Stationarity residual of `g` against sampled windows (ordered so that
/// contiguous runs are roughly independent, e.g. grouped by chain). Each
/// window must be longer than `depth`; coordinates past its end are filled
/// with the completion.
pub fn gmeasure_residual<G: GFunction + ?Sized>(
    g: &G,
    samples: &[Vec<i8>],
    depth: usize,
    completion: Sign,
    batches: usize,
) -> Result<ResidualReport> {
    if !(1..=6).contains(&depth) {
        return Err(Error::arg("residual depth must be in 1..=6"));
    }
    if samples.len() < batches || batches < 2 {
        return Err(Error::arg("not enough samples for the requested batches"));
    }
    let table = CylinderTable::constant(g.alphabet().clone(), depth, 0.0);
    let size = table.values.len();
    let base = g.alphabet().len();
    let mut sums = vec![vec![0.0; size]; batches];
    let mut counts = vec![0usize; batches];
    for (s_idx, x) in samples.iter().enumerate() {
        if x.len() < depth {
            return Err(Error::arg("sample window shorter than residual depth"));
        }
        let b = s_idx * batches / samples.len();
        counts[b] += 1;
        let own = table.index(&x[..depth])?;
        sums[b][own] += 1.0;
        // cylinders (a, x_0, ..., x_{d-2})
        let rest = if depth > 1 { table_index_prefix(&table, &x[..depth - 1])? } else { 0 };
        for (ai, &a) in g.alphabet().symbols().iter().enumerate() {
            sums[b][ai + base * rest] -= g.eval(a, x, completion);
        }
    }
    let n = samples.len();
    let bf = batches as f64;
    let mut report = ResidualReport { depth, max_abs: 0.0, stderr_at_max: 0.0, max_z: 0.0, n_samples: n };
    for c in 0..size {
        let total: f64 = sums.iter().map(|s| s[c]).sum();
        let res = total / n as f64;
        let bm: Vec<f64> = sums.iter().zip(&counts).map(|(s, &k)| s[c] / k as f64).collect();
        let m = bm.iter().sum::<f64>() / bf;
        let se = (bm.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (bf - 1.0) / bf).sqrt();
        if res.abs() > report.max_abs {
            report.max_abs = res.abs();
            report.stderr_at_max = se;
        }
        if se > 0.0 {
            report.max_z = report.max_z.max(res.abs() / se);
        }
    }
    Ok(report)
}

fn table_index_prefix(table: &CylinderTable, x: &[i8]) -> Result<usize> {
    let base = table.alphabet.len();
    let mut idx = 0;
    for &s in x.iter().rev() {
        let pos = table.alphabet.index_of(s).ok_or_else(|| Error::arg(format!("symbol {s} not in alphabet")))?;
        idx = idx * base + pos;
    }
    Ok(idx)
}
