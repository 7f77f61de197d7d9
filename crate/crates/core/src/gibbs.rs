//! Finite-volume Gibbs specifications of the one-sided long-range Ising
//! model on `[0,N)`.
//!
//! For a set of sites `L` inside the window, the energy `phi_L` collects
//! `K` once per site of `L`, every pair term `beta u_i u_j / |i-j|^alpha`
//! with at least one endpoint in `L`, and the interaction of `L` with the
//! boundary tail on `[N, inf)`. For `L = [0,N)` this is the sum of the
//! one-point potentials at `0, ..., N-1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::seed::{derive_seed, rng_from_seed, Rng};
use crate::space::{BoundaryCondition, Sign};
use crate::stats::{BatchSummary, BatchedHistogram, MeasureEstimate};

/// Largest `|L|` for [`local_partition`].
pub const LOCAL_BUDGET: usize = 25;
/// Largest window for [`exact_marginals`].
pub const EXACT_BUDGET: usize = 20;

/// Sweeps between full recomputations of the heat-bath field cache.
const FIELD_REFRESH: u64 = 256;

/// Spins on `[0,N)` plus the boundary on `[N, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinWindow {
    pub spins: Vec<i8>,
    pub bc: BoundaryCondition,
}

impl SpinWindow {
    pub fn new(spins: Vec<i8>, bc: BoundaryCondition) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::arg("spins must be +1 or -1"));
        }
        Ok(SpinWindow { spins, bc })
    }

    /// All spins equal to `sign`, boundary of the same sign.
    pub fn constant(n: usize, sign: Sign) -> Self {
        SpinWindow { spins: vec![sign.value(); n], bc: BoundaryCondition::from_sign(sign) }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }
}

/// Field on each site from the boundary tail: `beta * sum_m b_m / (N+m-i)^alpha`.
pub fn boundary_field(n: usize, bc: &BoundaryCondition, spec: &PotentialSpec) -> Vec<f64> {
    if spec.beta == 0.0 {
        return vec![0.0; n];
    }
    (0..n).map(|i| spec.beta * spec.boundary_sum(bc, (n - i) as u64)).collect()
}

fn coupling_table(n: usize, spec: &PotentialSpec) -> Vec<f64> {
    (0..n.max(1)).map(|d| if d == 0 { 0.0 } else { spec.coupling(d) }).collect()
}

fn check_sites(sites: &[usize], n: usize, budget: usize) -> Result<()> {
    if sites.len() > budget {
        return Err(Error::Resource { what: "enumerated sites", requested: sites.len(), limit: budget });
    }
    let mut seen = vec![false; n];
    for &s in sites {
        if s >= n {
            return Err(Error::arg(format!("site {s} outside window of length {n}")));
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::arg(format!("site {s} listed twice")));
        }
    }
    Ok(())
}

/// Walks every assignment of `sites` in Gray-code order, calling
/// `visit(mask, phi_L)` where bit `k` of `mask` is set iff `sites[k]` is `+1`.
fn enumerate_energies(
    sites: &[usize],
    frozen: &SpinWindow,
    spec: &PotentialSpec,
    mut visit: impl FnMut(usize, f64),
) {
    let n = frozen.len();
    let m = sites.len();
    let c = coupling_table(n, spec);
    let bfield = boundary_field(n, &frozen.bc, spec);
    let mut inside = vec![false; n];
    for &s in sites {
        inside[s] = true;
    }
    // External field on each enumerated site from frozen window spins and the tail.
    let ext: Vec<f64> = sites
        .iter()
        .map(|&i| {
            let frozen_part: f64 = (0..n)
                .filter(|&j| !inside[j])
                .map(|j| c[i.abs_diff(j)] * frozen.spins[j] as f64)
                .sum();
            frozen_part + bfield[i]
        })
        .collect();
    let cc = |a: usize, b: usize| c[sites[a].abs_diff(sites[b])];

    let mut y = vec![-1.0f64; m];
    let mut energy = m as f64 * spec.k;
    for a in 0..m {
        energy -= ext[a];
        for b in a + 1..m {
            energy += cc(a, b);
        }
    }
    // local[a] = d energy / d y_a
    let mut local: Vec<f64> = (0..m)
        .map(|a| ext[a] + (0..m).filter(|&b| b != a).map(|b| cc(a, b) * y[b]).sum::<f64>())
        .collect();
    let mut mask = 0usize;
    visit(mask, energy);
    for t in 1..(1usize << m) {
        let k = t.trailing_zeros() as usize;
        let delta = -2.0 * y[k];
        energy += delta * local[k];
        y[k] = -y[k];
        mask ^= 1 << k;
        for b in 0..m {
            if b != k {
                local[b] += delta * cc(k, b);
            }
        }
        visit(mask, energy);
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for v in values {
        if v > max {
            acc = acc * (max - v).exp() + 1.0;
            max = v;
        } else {
            acc += (v - max).exp();
        }
    }
    max + acc.ln()
}

/// `ln Z_L` for the sites `L` given the frozen rest of the window and its
/// boundary.
pub fn log_local_partition(sites: &[usize], frozen: &SpinWindow, spec: &PotentialSpec) -> Result<f64> {
    check_sites(sites, frozen.len(), LOCAL_BUDGET)?;
    let mut energies = Vec::with_capacity(1 << sites.len());
    enumerate_energies(sites, frozen, spec, |_, e| energies.push(e));
    Ok(log_sum_exp(energies.into_iter()))
}

/// Local partition function `Z_L = sum_y exp(phi_L(y x frozen))`.
pub fn local_partition(sites: &[usize], frozen: &SpinWindow, spec: &PotentialSpec) -> Result<f64> {
    Ok(log_local_partition(sites, frozen, spec)?.exp())
}

/// `phi_L` of the window with `sites` overwritten by `assignment`.
pub fn local_energy(
    sites: &[usize],
    assignment: &[i8],
    frozen: &SpinWindow,
    spec: &PotentialSpec,
) -> Result<f64> {
    check_sites(sites, frozen.len(), usize::MAX)?;
    if assignment.len() != sites.len() || assignment.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::arg("assignment must give one spin per site"));
    }
    let n = frozen.len();
    let mut u = frozen.spins.clone();
    let mut inside = vec![false; n];
    for (&s, &v) in sites.iter().zip(assignment) {
        u[s] = v;
        inside[s] = true;
    }
    let bfield = boundary_field(n, &frozen.bc, spec);
    let mut e = sites.len() as f64 * spec.k;
    for i in 0..n {
        for j in i + 1..n {
            if inside[i] || inside[j] {
                e += spec.coupling(j - i) * (u[i] * u[j]) as f64;
            }
        }
        if inside[i] {
            e += bfield[i] * u[i] as f64;
        }
    }
    Ok(e)
}

/// Conditional probability of `assignment` on `sites` given everything else.
pub fn gibbs_prob(
    sites: &[usize],
    assignment: &[i8],
    frozen: &SpinWindow,
    spec: &PotentialSpec,
) -> Result<f64> {
    let log_z = log_local_partition(sites, frozen, spec)?;
    Ok((local_energy(sites, assignment, frozen, spec)? - log_z).exp())
}

/// The full distribution of a window of length `n <= 20`.
///
/// Atoms are indexed by bitmask: bit `i` set means `u_i = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atom_spins(&self, index: usize) -> Vec<i8> {
        atom_spins(self.n, index)
    }

    pub fn expect(&self, mut f: impl FnMut(&[i8]) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(idx, p)| p * f(&atom_spins(self.n, idx)))
            .sum()
    }

    /// Total-variation distance to another probability vector.
    pub fn tv_distance(&self, other: &[f64]) -> f64 {
        0.5 * self.probs.iter().zip(other).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

pub fn atom_index(spins: &[i8]) -> usize {
    spins
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &s)| if s > 0 { acc | (1 << i) } else { acc })
}

pub fn atom_spins(n: usize, index: usize) -> Vec<i8> {
    (0..n).map(|i| if index >> i & 1 == 1 { 1 } else { -1 }).collect()
}

/// Exact law on `{-1,+1}^n` proportional to `exp(phi_[0,n))` under `bc`.
pub fn exact_marginals(n: usize, bc: &BoundaryCondition, spec: &PotentialSpec) -> Result<ExactDistribution> {
    if n > EXACT_BUDGET {
        return Err(Error::Resource { what: "exact window length", requested: n, limit: EXACT_BUDGET });
    }
    let frozen = SpinWindow { spins: vec![1; n], bc: bc.clone() };
    let sites: Vec<usize> = (0..n).collect();
    let mut energies = vec![0.0; 1 << n];
    enumerate_energies(&sites, &frozen, spec, |mask, e| energies[mask] = e);
    let log_z = log_sum_exp(energies.iter().copied());
    let probs = energies.into_iter().map(|e| (e - log_z).exp()).collect();
    Ok(ExactDistribution { n, probs })
}

/// Single-site heat-bath dynamics with a cached local field.
#[derive(Debug, Clone)]
pub struct HeatBath {
    spec: PotentialSpec,
    bc: BoundaryCondition,
    spins: Vec<i8>,
    coupling: Vec<f64>,
    boundary: Vec<f64>,
    field: Vec<f64>,
    sweeps: u64,
}

impl HeatBath {
    pub fn new(state: SpinWindow, spec: &PotentialSpec) -> Self {
        let n = state.len();
        let mut hb = HeatBath {
            coupling: coupling_table(n, spec),
            boundary: boundary_field(n, &state.bc, spec),
            field: vec![0.0; n],
            spec: spec.clone(),
            bc: state.bc,
            spins: state.spins,
            sweeps: 0,
        };
        hb.refresh_field();
        hb
    }

    fn refresh_field(&mut self) {
        let n = self.spins.len();
        for i in 0..n {
            let mut h = self.boundary[i];
            for j in 0..n {
                if j != i {
                    h += self.coupling[i.abs_diff(j)] * self.spins[j] as f64;
                }
            }
            self.field[i] = h;
        }
    }

    /// One systematic sweep over `0..N`; every site is redrawn from its exact
    /// conditional law.
    pub fn sweep<R: rand::Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.spins.len();
        for i in 0..n {
            let p_plus = 1.0 / (1.0 + (-2.0 * self.field[i]).exp());
            let new = if rng.random::<f64>() < p_plus { 1 } else { -1 };
            if new != self.spins[i] {
                let delta = (new - self.spins[i]) as f64;
                self.spins[i] = new;
                for j in 0..n {
                    if j != i {
                        self.field[j] += delta * self.coupling[i.abs_diff(j)];
                    }
                }
            }
        }
        self.sweeps += 1;
        if self.sweeps.is_multiple_of(FIELD_REFRESH) {
            self.refresh_field();
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn state(&self) -> SpinWindow {
        SpinWindow { spins: self.spins.clone(), bc: self.bc.clone() }
    }
}

/// One heat-bath sweep of `state`.
pub fn heatbath_sweep<R: rand::Rng + ?Sized>(state: SpinWindow, spec: &PotentialSpec, rng: &mut R) -> SpinWindow {
    let mut hb = HeatBath::new(state, spec);
    hb.sweep(rng);
    hb.state()
}

/// A seeded heat-bath chain.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    dynamics: HeatBath,
    rng: Rng,
    seed: u64,
}

impl GibbsChain {
    pub fn new(initial: SpinWindow, spec: &PotentialSpec, seed: u64) -> Self {
        GibbsChain { dynamics: HeatBath::new(initial, spec), rng: rng_from_seed(seed), seed }
    }

    /// Chain for `nu_N^sign`, started from the all-`sign` configuration.
    pub fn nu(n: usize, sign: Sign, spec: &PotentialSpec, seed: u64) -> Self {
        GibbsChain::new(SpinWindow::constant(n, sign), spec, seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sweep(&mut self) {
        self.dynamics.sweep(&mut self.rng);
    }

    pub fn spins(&self) -> &[i8] {
        self.dynamics.spins()
    }

    /// Runs `sweeps` sweeps and calls `visit` after each one past `burn_in`.
    pub fn run(&mut self, sweeps: usize, burn_in: usize, mut visit: impl FnMut(&[i8])) {
        for s in 0..sweeps {
            self.sweep();
            if s >= burn_in {
                visit(self.dynamics.spins());
            }
        }
    }

    /// Batch-means estimate of `E f` over `sweeps - burn_in` samples.
    pub fn estimate(
        &mut self,
        sweeps: usize,
        burn_in: usize,
        batches: usize,
        mut f: impl FnMut(&[i8]) -> f64,
    ) -> Result<MeasureEstimate> {
        Ok(self.batch_summary(sweeps, burn_in, batches, &mut f)?.estimate().with_provenance(self.seed, burn_in))
    }

    fn batch_summary(
        &mut self,
        sweeps: usize,
        burn_in: usize,
        batches: usize,
        f: &mut impl FnMut(&[i8]) -> f64,
    ) -> Result<BatchSummary> {
        if sweeps <= burn_in {
            return Err(Error::arg("sweeps must exceed burn_in"));
        }
        let mut values = Vec::with_capacity(sweeps - burn_in);
        self.run(sweeps, burn_in, |s| values.push(f(s)));
        BatchSummary::from_samples(&values, batches)
    }

    /// Per-atom visit frequencies with batch-means errors (`N <= 20`).
    pub fn atom_frequencies(&mut self, sweeps: usize, burn_in: usize, batches: usize) -> Result<Vec<(f64, f64)>> {
        let n = self.spins().len();
        if n > EXACT_BUDGET {
            return Err(Error::Resource { what: "histogram window length", requested: n, limit: EXACT_BUDGET });
        }
        if sweeps <= burn_in {
            return Err(Error::arg("sweeps must exceed burn_in"));
        }
        let mut hist = BatchedHistogram::new(1 << n, sweeps - burn_in, batches)?;
        self.run(sweeps, burn_in, |s| hist.push(atom_index(s)));
        Ok(hist.frequencies())
    }
}

/// Seeded stream of spin windows approximately distributed as `nu_N^sign`.
pub struct NuStream {
    chain: GibbsChain,
    bc: BoundaryCondition,
    remaining: usize,
}

impl Iterator for NuStream {
    type Item = SpinWindow;

    fn next(&mut self) -> Option<SpinWindow> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.chain.sweep();
        Some(SpinWindow { spins: self.chain.spins().to_vec(), bc: self.bc.clone() })
    }
}

/// Heat-bath samples of `nu_N^sign`: `burn_in` discarded sweeps, then one
/// window per sweep up to `sweeps` in total.
pub fn sample_nu_pm(
    n: usize,
    sign: Sign,
    spec: &PotentialSpec,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<NuStream> {
    if sweeps <= burn_in {
        return Err(Error::arg("sweeps must exceed burn_in"));
    }
    let mut chain = GibbsChain::nu(n, sign, spec, seed);
    for _ in 0..burn_in {
        chain.sweep();
    }
    Ok(NuStream { chain, bc: BoundaryCondition::from_sign(sign), remaining: sweeps - burn_in })
}

/// Batch-means estimate of `E f` over a sample stream.
pub fn estimate_expectation<T>(
    mut f: impl FnMut(&T) -> f64,
    stream: impl IntoIterator<Item = T>,
    batches: usize,
) -> Result<MeasureEstimate> {
    let values: Vec<f64> = stream.into_iter().map(|x| f(&x)).collect();
    MeasureEstimate::from_samples(&values, batches)
}

/// Runs `chains` independent `nu_N^sign` chains in parallel (seeds derived
/// from `master_seed` and the chain index) and merges their batches.
#[allow(clippy::too_many_arguments)]
pub fn estimate_parallel<F>(
    n: usize,
    sign: Sign,
    spec: &PotentialSpec,
    f: F,
    chains: usize,
    sweeps: usize,
    burn_in: usize,
    batches_per_chain: usize,
    master_seed: u64,
) -> Result<MeasureEstimate>
where
    F: Fn(&[i8]) -> f64 + Sync,
{
    if chains == 0 {
        return Err(Error::arg("need at least one chain"));
    }
    let parts: Result<Vec<BatchSummary>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut chain = GibbsChain::nu(n, sign, spec, derive_seed(master_seed, &[c as u64]));
            chain.batch_summary(sweeps, burn_in, batches_per_chain, &mut |s| f(s))
        })
        .collect();
    let merged = parts?.iter().fold(BatchSummary::default(), |acc, p| acc.merge(p));
    Ok(merged.estimate().with_provenance(master_seed, burn_in))
}
