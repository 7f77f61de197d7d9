//! Edwards-Sokal and Bernoulli graph samplers, Monte Carlo dominance checks
//! with increasing test functions, and the finite percolation proxy.

use rand::Rng as _;
use rayon::prelude::*;

use super::field::{EdgeProbabilityField, EdgeRule};
use super::graph::{pair_count, pair_from_index, RCGraphState};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, Rng};
use crate::space::Sign;
use crate::stats::{BatchSummary, MeasureEstimate};

/// A stream of edge configurations. `advance` moves to the next sample.
pub trait GraphSampler {
    fn advance(&mut self);
    fn graph(&mut self) -> &mut RCGraphState;
}

fn pair_probs(n: usize, origin: i64, field: &EdgeProbabilityField) -> Result<Vec<f64>> {
    (0..pair_count(n))
        .map(|idx| {
            let (a, b) = pair_from_index(idx);
            field.prob(origin + a as i64, origin + b as i64)
        })
        .collect()
}

/// Edwards-Sokal alternation for the `q = 2` random-cluster model on a
/// window of sites: edges between equal spins open with the field's
/// probability, then every cluster gets a uniform spin, except the one
/// wired to the boundary vertex, which takes the boundary sign.
///
/// The spin marginal is the Ising measure with pair weight
/// `exp((J_ij / 2) u_i u_j)` where `p_ij = 1 - exp(-J_ij)`. For the `Rho`
/// field at `beta` that is the window Ising chain at `beta / 2`.
#[derive(Debug, Clone)]
pub struct EsSampler {
    probs: Vec<f64>,
    boundary_probs: Vec<f64>,
    sign: Option<Sign>,
    spins: Vec<i8>,
    graph: RCGraphState,
    rng: Rng,
    roots: Vec<i8>,
}

impl EsSampler {
    /// `sign = None` is the free boundary. With a sign, the boundary vertex
    /// stands for all sites `>= origin + n` and site `i` is wired to it with
    /// probability `1 - exp(-beta sum_{j >= origin + n} |i - j|^-alpha)`.
    /// The boundary needs a `Rho` field.
    pub fn new(n: usize, origin: i64, sign: Option<Sign>, field: &EdgeProbabilityField, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("window must hold at least one site"));
        }
        let end = origin + n as i64;
        let boundary_probs = match sign {
            None => Vec::new(),
            Some(_) => {
                if field.rule != EdgeRule::Rho {
                    return Err(Error::arg("boundary wiring is defined for the Rho field only"));
                }
                (0..n).map(|a| field.right_boundary_prob(origin + a as i64, end)).collect()
            }
        };
        let init = sign.map_or(1, Sign::value);
        Ok(EsSampler {
            probs: pair_probs(n, origin, field)?,
            boundary_probs,
            sign,
            spins: vec![init; n],
            graph: RCGraphState::new(n, origin, sign.is_some()),
            rng: rng_from_seed(seed),
            roots: vec![0; n + 1],
        })
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// One full update: edges given spins, then spins given edges.
    pub fn sweep(&mut self) {
        let n = self.spins.len();
        self.graph.clear();
        let mut idx = 0;
        for b in 1..n {
            let sb = self.spins[b];
            for a in 0..b {
                let p = self.probs[idx];
                idx += 1;
                if self.spins[a] == sb && p > 0.0 && self.rng.random::<f64>() < p {
                    self.graph.insert_unchecked(a, b);
                }
            }
        }
        if let Some(sign) = self.sign {
            for a in 0..n {
                if self.spins[a] == sign.value() && self.rng.random::<f64>() < self.boundary_probs[a] {
                    self.graph.set_boundary_edge(a, true).expect("window vertex");
                }
            }
        }
        self.roots.fill(0);
        if let Some(sign) = self.sign {
            let r = self.graph.root(n);
            self.roots[r] = sign.value();
        }
        for a in 0..n {
            let r = self.graph.root(a);
            if self.roots[r] == 0 {
                self.roots[r] = if self.rng.random::<bool>() { 1 } else { -1 };
            }
            self.spins[a] = self.roots[r];
        }
    }
}

impl GraphSampler for EsSampler {
    fn advance(&mut self) {
        self.sweep();
    }

    fn graph(&mut self) -> &mut RCGraphState {
        &mut self.graph
    }
}

/// Independent edges: i.i.d. samples of a product Bernoulli measure.
#[derive(Debug, Clone)]
pub struct BernoulliSampler {
    probs: Vec<f64>,
    graph: RCGraphState,
    rng: Rng,
}

impl BernoulliSampler {
    pub fn new(n: usize, origin: i64, field: &EdgeProbabilityField, seed: u64) -> Result<Self> {
        Ok(BernoulliSampler {
            probs: pair_probs(n, origin, field)?,
            graph: RCGraphState::new(n, origin, false),
            rng: rng_from_seed(seed),
        })
    }

    pub fn sample(&mut self) -> &mut RCGraphState {
        self.advance();
        &mut self.graph
    }
}

impl GraphSampler for BernoulliSampler {
    fn advance(&mut self) {
        self.graph.clear();
        let n = self.graph.n();
        let mut idx = 0;
        for b in 1..n {
            for a in 0..b {
                let p = self.probs[idx];
                idx += 1;
                if p > 0.0 && self.rng.random::<f64>() < p {
                    self.graph.insert_unchecked(a, b);
                }
            }
        }
    }

    fn graph(&mut self) -> &mut RCGraphState {
        &mut self.graph
    }
}

/// Functions of the edge set that are non-decreasing under adding edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncreasingFn {
    EdgeCount,
    Degree(usize),
    Connected(usize, usize),
    ClusterSize(usize),
    /// Number of occupied edges of length exactly `d`.
    EdgesAtDistance(usize),
}

impl IncreasingFn {
    pub fn eval(&self, g: &mut RCGraphState) -> f64 {
        match *self {
            IncreasingFn::EdgeCount => g.edge_count() as f64,
            IncreasingFn::Degree(a) => g.degree(a) as f64,
            IncreasingFn::Connected(a, b) => f64::from(u8::from(g.connected(a, b))),
            IncreasingFn::ClusterSize(a) => g.cluster_size(a) as f64,
            IncreasingFn::EdgesAtDistance(d) => (0..g.n().saturating_sub(d)).filter(|&a| g.contains(a, a + d)).count() as f64,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            IncreasingFn::EdgeCount => "edge_count".into(),
            IncreasingFn::Degree(a) => format!("degree({a})"),
            IncreasingFn::Connected(a, b) => format!("connected({a},{b})"),
            IncreasingFn::ClusterSize(a) => format!("cluster_size({a})"),
            IncreasingFn::EdgesAtDistance(d) => format!("edges_at_distance({d})"),
        }
    }

    /// The default battery on an `n`-vertex window.
    pub fn standard(n: usize) -> Vec<IncreasingFn> {
        let last = n.saturating_sub(1);
        vec![
            IncreasingFn::EdgeCount,
            IncreasingFn::Degree(0),
            IncreasingFn::Connected(0, last),
            IncreasingFn::ClusterSize(0),
            IncreasingFn::EdgesAtDistance(1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub chains: usize,
    pub samples_per_chain: usize,
    pub burn_in: usize,
    pub batches_per_chain: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn total_samples(&self) -> usize {
        self.chains * self.samples_per_chain
    }
}

fn run_summaries<S, F>(make: &F, tests: &[IncreasingFn], cfg: &McConfig, stream: u64) -> Result<Vec<BatchSummary>>
where
    S: GraphSampler,
    F: Fn(u64) -> Result<S> + Sync,
{
    let per_chain: Result<Vec<Vec<BatchSummary>>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut s = make(derive_seed(cfg.seed, &[stream, c as u64]))?;
            for _ in 0..cfg.burn_in {
                s.advance();
            }
            let mut values = vec![Vec::with_capacity(cfg.samples_per_chain); tests.len()];
            for _ in 0..cfg.samples_per_chain {
                s.advance();
                let g = s.graph();
                for (k, f) in tests.iter().enumerate() {
                    values[k].push(f.eval(g));
                }
            }
            values.iter().map(|v| BatchSummary::from_samples(v, cfg.batches_per_chain)).collect()
        })
        .collect();
    let per_chain = per_chain?;
    Ok((0..tests.len())
        .map(|k| per_chain.iter().fold(BatchSummary::default(), |acc, c| acc.merge(&c[k])))
        .collect())
}

/// Batch-means estimate of every test function over parallel chains.
pub fn expectations<S, F>(make: F, tests: &[IncreasingFn], cfg: &McConfig, stream: u64) -> Result<Vec<MeasureEstimate>>
where
    S: GraphSampler,
    F: Fn(u64) -> Result<S> + Sync,
{
    if cfg.chains == 0 {
        return Err(Error::arg("need at least one chain"));
    }
    Ok(run_summaries(&make, tests, cfg, stream)?
        .iter()
        .map(|s| s.estimate().with_provenance(cfg.seed, cfg.burn_in))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub test: String,
    pub lower: MeasureEstimate,
    pub upper: MeasureEstimate,
    /// `E_upper f - E_lower f`.
    pub diff: MeasureEstimate,
    /// The difference is below `-3` standard errors.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
}

impl DominanceReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    pub fn passes(&self) -> bool {
        self.violations() == 0
    }
}

/// Flags a deficit `E_upper f < E_lower f` beyond this many standard errors.
pub const FLAG_SIGMAS: f64 = 3.0;

/// Checks `upper ⪰ lower` on increasing test functions by independent runs
/// of both samplers.
pub fn dominance_check_mc<L, U, FL, FU>(
    make_lower: FL,
    make_upper: FU,
    tests: &[IncreasingFn],
    cfg: &McConfig,
) -> Result<DominanceReport>
where
    L: GraphSampler,
    U: GraphSampler,
    FL: Fn(u64) -> Result<L> + Sync,
    FU: Fn(u64) -> Result<U> + Sync,
{
    let lo = expectations(make_lower, tests, cfg, 0)?;
    let hi = expectations(make_upper, tests, cfg, 1)?;
    let rows = tests
        .iter()
        .zip(lo.into_iter().zip(hi))
        .map(|(f, (lower, upper))| {
            let diff = upper.minus(&lower);
            let flagged = diff.mean < -FLAG_SIGMAS * diff.stderr - 1e-12;
            DominanceRow { test: f.name(), lower, upper, diff, flagged }
        })
        .collect();
    Ok(DominanceReport { rows })
}

/// Largest distance from vertex `a` to another vertex of its cluster.
pub fn cluster_reach(g: &mut RCGraphState, a: usize) -> usize {
    let r = g.root(a);
    (0..g.n()).filter(|&v| g.root(v) == r).map(|v| v.abs_diff(a)).max().unwrap_or(0)
}

/// `P(vertex 0 of the window connects to a vertex at distance >= L)` for
/// every `L` in `ls`, estimated on one shared sample stream.
pub fn percolation_proxy<S, F>(make: F, ls: &[usize], cfg: &McConfig) -> Result<Vec<MeasureEstimate>>
where
    S: GraphSampler,
    F: Fn(u64) -> Result<S> + Sync,
{
    if cfg.chains == 0 {
        return Err(Error::arg("need at least one chain"));
    }
    let per_chain: Result<Vec<Vec<BatchSummary>>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut s = make(derive_seed(cfg.seed, &[c as u64]))?;
            if let Some(&l) = ls.iter().find(|&&l| l >= s.graph().n()) {
                return Err(Error::arg(format!("distance {l} does not fit the window")));
            }
            for _ in 0..cfg.burn_in {
                s.advance();
            }
            let mut values = vec![Vec::with_capacity(cfg.samples_per_chain); ls.len()];
            for _ in 0..cfg.samples_per_chain {
                s.advance();
                let reach = cluster_reach(s.graph(), 0);
                for (k, &l) in ls.iter().enumerate() {
                    values[k].push(f64::from(u8::from(reach >= l)));
                }
            }
            values.iter().map(|v| BatchSummary::from_samples(v, cfg.batches_per_chain)).collect()
        })
        .collect();
    let per_chain = per_chain?;
    Ok((0..ls.len())
        .map(|k| {
            per_chain
                .iter()
                .fold(BatchSummary::default(), |acc, c| acc.merge(&c[k]))
                .estimate()
                .with_provenance(cfg.seed, cfg.burn_in)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{atom_index, exact_marginals};
    use crate::potential::PotentialSpec;
    use crate::space::BoundaryCondition;
    use crate::stats::BatchedHistogram;

    #[test]
    fn zero_beta_has_no_edges_and_uniform_spins() {
        let f = EdgeProbabilityField::rho(2.0, 0.0).unwrap();
        let mut es = EsSampler::new(8, 0, None, &f, 3).unwrap();
        let mut plus = 0usize;
        for _ in 0..4000 {
            es.sweep();
            assert_eq!(es.graph().edge_count(), 0);
            plus += es.spins().iter().filter(|&&s| s == 1).count();
        }
        let frac = plus as f64 / 32_000.0;
        assert!((frac - 0.5).abs() < 3.0 * (0.25f64 / 32_000.0).sqrt() + 1e-3, "{frac}");
    }

    #[test]
    fn edges_only_join_equal_spins() {
        let f = EdgeProbabilityField::rho(1.5, 1.2).unwrap();
        let mut es = EsSampler::new(12, 0, Some(Sign::Minus), &f, 9).unwrap();
        for _ in 0..200 {
            es.sweep();
            let spins = es.spins().to_vec();
            for (a, b) in es.graph().edges() {
                assert_eq!(spins[a], spins[b]);
            }
            for a in es.graph().boundary_edges() {
                assert_eq!(spins[a], -1);
            }
        }
    }

    #[test]
    fn free_spin_marginal_matches_half_beta_enumeration() {
        let (n, alpha, beta) = (5usize, 2.0, 1.4);
        let exact = exact_marginals(n, &BoundaryCondition::Free, &PotentialSpec::ising(alpha, beta / 2.0).unwrap()).unwrap();
        let f = EdgeProbabilityField::rho(alpha, beta).unwrap();
        let mut es = EsSampler::new(n, 0, None, &f, 21).unwrap();
        let sweeps = 200_000;
        let mut hist = BatchedHistogram::new(1 << n, sweeps, 40).unwrap();
        for _ in 0..sweeps {
            es.sweep();
            hist.push(atom_index(es.spins()));
        }
        let freq = hist.frequencies();
        let tv: f64 = 0.5 * freq.iter().zip(exact.probs()).map(|(f, p)| (f.0 - p).abs()).sum::<f64>();
        assert!(tv < 0.01, "tv {tv}");
        let worst = freq
            .iter()
            .zip(exact.probs())
            .map(|(f, p)| (f.0 - p).abs() / f.1.max(1e-12))
            .fold(0.0, f64::max);
        assert!(worst < 4.5, "worst z {worst}");
    }

    #[test]
    fn plus_boundary_matches_half_beta_enumeration() {
        let (n, alpha, beta) = (4usize, 2.0, 1.0);
        let exact = exact_marginals(n, &BoundaryCondition::AllPlus, &PotentialSpec::ising(alpha, beta / 2.0).unwrap()).unwrap();
        let f = EdgeProbabilityField::rho(alpha, beta).unwrap();
        let mut es = EsSampler::new(n, 0, Some(Sign::Plus), &f, 5).unwrap();
        let sweeps = 200_000;
        let mut hist = BatchedHistogram::new(1 << n, sweeps, 40).unwrap();
        for _ in 0..sweeps {
            es.sweep();
            hist.push(atom_index(es.spins()));
        }
        let tv: f64 = 0.5 * hist.frequencies().iter().zip(exact.probs()).map(|(f, p)| (f.0 - p).abs()).sum::<f64>();
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn identical_samplers_show_no_violation() {
        let f = EdgeProbabilityField::rho(2.0, 0.8).unwrap();
        let cfg = McConfig { chains: 4, samples_per_chain: 4000, burn_in: 100, batches_per_chain: 20, seed: 1 };
        let rep = dominance_check_mc(
            |s| EsSampler::new(16, 0, None, &f, s),
            |s| EsSampler::new(16, 0, None, &f, s),
            &IncreasingFn::standard(16),
            &cfg,
        )
        .unwrap();
        assert!(rep.rows.iter().all(|r| r.diff.mean.abs() <= 4.0 * r.diff.stderr + 1e-12), "{rep:?}");
    }

    #[test]
    fn more_beta_dominates() {
        let lo = EdgeProbabilityField::rho(2.0, 0.5).unwrap();
        let hi = EdgeProbabilityField::rho(2.0, 1.5).unwrap();
        let cfg = McConfig { chains: 4, samples_per_chain: 2000, burn_in: 100, batches_per_chain: 20, seed: 2 };
        let rep = dominance_check_mc(
            |s| EsSampler::new(24, 0, None, &lo, s),
            |s| EsSampler::new(24, 0, None, &hi, s),
            &IncreasingFn::standard(24),
            &cfg,
        )
        .unwrap();
        assert!(rep.passes(), "{rep:?}");
        assert!(rep.rows[0].diff.mean > 10.0 * rep.rows[0].diff.stderr);
        // and the reverse order is flagged
        let rev = dominance_check_mc(
            |s| EsSampler::new(24, 0, None, &hi, s),
            |s| EsSampler::new(24, 0, None, &lo, s),
            &IncreasingFn::standard(24),
            &cfg,
        )
        .unwrap();
        assert!(!rev.passes());
    }

    #[test]
    fn percolation_proxy_extremes() {
        let cfg = McConfig { chains: 2, samples_per_chain: 400, burn_in: 0, batches_per_chain: 20, seed: 4 };
        let zero = EdgeProbabilityField::rho(2.0, 0.0).unwrap();
        let ls = [1, 4, 8, 15];
        let est = percolation_proxy(|s| BernoulliSampler::new(16, 0, &zero, s), &ls, &cfg).unwrap();
        assert!(est.iter().all(|e| e.mean == 0.0));
        let dense = EdgeProbabilityField::rho(1.1, 40.0).unwrap();
        let est = percolation_proxy(|s| BernoulliSampler::new(16, 0, &dense, s), &ls, &cfg).unwrap();
        assert!(est.iter().all(|e| e.mean > 0.99));
        let mid = EdgeProbabilityField::rho(2.0, 1.0).unwrap();
        let est = percolation_proxy(|s| EsSampler::new(16, 0, None, &mid, s), &ls, &cfg).unwrap();
        assert!(est.windows(2).all(|w| w[1].mean <= w[0].mean));
        assert!(percolation_proxy(|s| BernoulliSampler::new(16, 0, &mid, s), &[16], &cfg).is_err());
    }
}
