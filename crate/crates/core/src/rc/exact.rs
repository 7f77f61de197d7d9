//! Exact random-cluster distributions on small edge sets and exhaustive
//! stochastic-dominance checks over up-sets.

use super::field::EdgeProbabilityField;
use super::graph::RCGraphState;
use super::union_find::DisjointSet;
use crate::error::{Error, Result};

/// Largest edge set enumerated exactly.
pub const EXACT_EDGE_BUDGET: usize = 10;
/// Largest edge set for exhaustive up-set enumeration.
pub const UPSET_EDGE_BUDGET: usize = 4;

/// A finite graph with one occupation probability per edge. Atom `mask` of
/// a distribution over this space has edge `k` occupied iff bit `k` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpace {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub p: Vec<f64>,
}

impl EdgeSpace {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, p: Vec<f64>) -> Result<Self> {
        if edges.len() != p.len() {
            return Err(Error::arg("one probability per edge required"));
        }
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::arg(format!("loop at vertex {a}: loops are excluded")));
            }
            if a >= n || b >= n {
                return Err(Error::arg(format!("edge ({a}, {b}) outside {n} vertices")));
            }
        }
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::arg(format!("edge probability {bad} outside [0, 1]")));
        }
        Ok(EdgeSpace { n, edges, p })
    }

    pub fn uniform(n: usize, edges: Vec<(usize, usize)>, p: f64) -> Result<Self> {
        let m = edges.len();
        EdgeSpace::new(n, edges, vec![p; m])
    }

    /// All pairs of the sites `labels[0], labels[1], ...` with probabilities
    /// from `field`.
    pub fn complete(labels: &[i64], field: &EdgeProbabilityField) -> Result<Self> {
        let n = labels.len();
        let mut edges = Vec::new();
        let mut p = Vec::new();
        for b in 0..n {
            for a in 0..b {
                edges.push((a, b));
                p.push(field.prob(labels[a], labels[b])?);
            }
        }
        EdgeSpace::new(n, edges, p)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Same graph with `f` applied to every edge probability.
    pub fn map_p(&self, f: impl Fn(f64) -> f64) -> EdgeSpace {
        EdgeSpace { n: self.n, edges: self.edges.clone(), p: self.p.iter().map(|&x| f(x)).collect() }
    }

    fn clusters(&self, mask: usize, uf: &mut DisjointSet) -> usize {
        uf.reset();
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            if mask >> k & 1 == 1 {
                uf.union(a, b);
            }
        }
        uf.components()
    }

    fn log_weight(&self, mask: usize, ln_q: f64, uf: &mut DisjointSet) -> f64 {
        let mut w = self.clusters(mask, uf) as f64 * ln_q;
        for (k, &p) in self.p.iter().enumerate() {
            w += if mask >> k & 1 == 1 { p.ln() } else { (-p).ln_1p() };
        }
        w
    }
}

fn check_q(q: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::arg(format!("cluster weight q must be >= 1, got {q}")));
    }
    Ok(q.ln())
}

/// `ln(q^c(t) prod_{t=1} p prod_{t=0} (1 - p))` over all pairs of the
/// state's window; boundary edges are ignored.
pub fn rc_log_weight(state: &mut RCGraphState, field: &EdgeProbabilityField, q: f64) -> Result<f64> {
    let ln_q = check_q(q)?;
    let n = state.n();
    let mut w = 0.0;
    for b in 0..n {
        for a in 0..b {
            let p = field.prob(state.label(a), state.label(b))?;
            w += if state.contains(a, b) { p.ln() } else { (-p).ln_1p() };
        }
    }
    Ok(w + state.count_clusters() as f64 * ln_q)
}

/// Unnormalised random-cluster weight; `0` when an impossible edge state
/// occurs.
pub fn rc_weight(state: &mut RCGraphState, field: &EdgeProbabilityField, q: f64) -> Result<f64> {
    Ok(rc_log_weight(state, field, q)?.exp())
}

/// Normalised random-cluster distribution over the `2^m` edge subsets.
pub fn exact_rc_distribution(space: &EdgeSpace, q: f64) -> Result<Vec<f64>> {
    let ln_q = check_q(q)?;
    let m = space.len();
    if m > EXACT_EDGE_BUDGET {
        return Err(Error::Resource { what: "exact random-cluster edges", requested: m, limit: EXACT_EDGE_BUDGET });
    }
    let mut uf = DisjointSet::new(space.n);
    let logw: Vec<f64> = (0..1usize << m).map(|mask| space.log_weight(mask, ln_q, &mut uf)).collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

/// Product Bernoulli measure on the same atoms.
pub fn bernoulli_distribution(space: &EdgeSpace) -> Result<Vec<f64>> {
    exact_rc_distribution(space, 1.0)
}

/// `P(edge k occupied)` for each edge.
pub fn edge_marginals(dist: &[f64], m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| dist.iter().enumerate().filter(|(mask, _)| mask >> k & 1 == 1).map(|(_, p)| p).sum())
        .collect()
}

fn edges_of(len: usize) -> Result<usize> {
    if !len.is_power_of_two() {
        return Err(Error::arg(format!("distribution length {len} is not 2^m")));
    }
    let m = len.trailing_zeros() as usize;
    if m > UPSET_EDGE_BUDGET {
        return Err(Error::Resource { what: "up-set enumeration edges", requested: m, limit: UPSET_EDGE_BUDGET });
    }
    Ok(m)
}

/// Every up-set of `{0,1}^m` as a bitmask over the `2^m` atoms.
pub fn up_sets(m: usize) -> Result<Vec<u32>> {
    if m > UPSET_EDGE_BUDGET {
        return Err(Error::Resource { what: "up-set enumeration edges", requested: m, limit: UPSET_EDGE_BUDGET });
    }
    let atoms = 1usize << m;
    let is_up = |u: u64| {
        (0..atoms).all(|a| u >> a & 1 == 0 || (0..m).all(|k| u >> (a | 1 << k) & 1 == 1))
    };
    Ok((0..1u64 << atoms).filter(|&u| is_up(u)).map(|u| u as u32).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum DominanceOutcome {
    /// `upper(U) >= lower(U) - tol` on every up-set; `min_margin` is the
    /// smallest `upper(U) - lower(U)`.
    Dominates { min_margin: f64 },
    /// `witness` is an up-set (atom list) with `upper(U) < lower(U) - tol`.
    Fails { witness: Vec<usize>, deficit: f64 },
}

impl DominanceOutcome {
    pub fn dominates(&self) -> bool {
        matches!(self, DominanceOutcome::Dominates { .. })
    }
}

/// Whether `upper` stochastically dominates `lower` on `{0,1}^m`, `m <= 4`.
pub fn dominance_check_exact(lower: &[f64], upper: &[f64], tol: f64) -> Result<DominanceOutcome> {
    if lower.len() != upper.len() {
        return Err(Error::arg("distributions live on different spaces"));
    }
    let m = edges_of(lower.len())?;
    let mut worst = (f64::INFINITY, 0u32);
    for u in up_sets(m)? {
        let mass = |d: &[f64]| (0..d.len()).filter(|a| u >> a & 1 == 1).map(|a| d[a]).sum::<f64>();
        let margin = mass(upper) - mass(lower);
        if margin < worst.0 {
            worst = (margin, u);
        }
    }
    Ok(if worst.0 < -tol {
        DominanceOutcome::Fails {
            witness: (0..lower.len()).filter(|a| worst.1 >> a & 1 == 1).collect(),
            deficit: -worst.0,
        }
    } else {
        DominanceOutcome::Dominates { min_margin: worst.0 }
    })
}

fn canonical(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }
    let m = edges.len();
    let mut best: Option<Vec<(usize, usize)>> = None;
    for order in permutations(m) {
        for flips in 0..1usize << m {
            let mut relabel: Vec<(usize, usize)> = Vec::new();
            let name = |v: usize, relabel: &mut Vec<(usize, usize)>| match relabel.iter().find(|x| x.0 == v) {
                Some(&(_, k)) => k,
                None => {
                    let k = relabel.len();
                    relabel.push((v, k));
                    k
                }
            };
            let mut seq: Vec<(usize, usize)> = order
                .iter()
                .map(|&e| {
                    let (a, b) = edges[e];
                    let (a, b) = if flips >> e & 1 == 1 { (b, a) } else { (a, b) };
                    let x = name(a, &mut relabel);
                    let y = name(b, &mut relabel);
                    (x.min(y), x.max(y))
                })
                .collect();
            seq.sort_unstable();
            if best.as_ref().is_none_or(|b| seq < *b) {
                best = Some(seq);
            }
        }
    }
    best.unwrap_or_default()
}

/// One representative of every isomorphism class of simple graphs with
/// `1..=max_edges` edges and no isolated vertices (`max_edges <= 4`).
pub fn small_graphs(max_edges: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    if max_edges > UPSET_EDGE_BUDGET {
        return Err(Error::Resource { what: "small graph edges", requested: max_edges, limit: UPSET_EDGE_BUDGET });
    }
    let mut level: Vec<Vec<(usize, usize)>> = vec![vec![]];
    let mut all = Vec::new();
    for _ in 0..max_edges {
        let mut next: Vec<Vec<(usize, usize)>> = Vec::new();
        for g in &level {
            let v = g.iter().map(|e| e.1 + 1).max().unwrap_or(0);
            // new edge among existing vertices, touching one new vertex, or two new ones
            for b in 0..v + 2 {
                for a in 0..b {
                    if g.contains(&(a, b)) {
                        continue;
                    }
                    let mut h = g.clone();
                    h.push((a, b));
                    let c = canonical(&h);
                    if !next.contains(&c) {
                        next.push(c);
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    Ok(all)
}

/// Vertex count of an edge list without isolated vertices.
pub fn vertex_count(edges: &[(usize, usize)]) -> usize {
    edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0)
}
