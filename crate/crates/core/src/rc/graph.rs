//! Edge subsets of the complete graph on a window of consecutive integers,
//! optionally with a boundary vertex joined to window vertices.

use std::collections::VecDeque;

use super::union_find::DisjointSet;
use crate::error::{Error, Result};

/// Index of the unordered pair `{a, b}`, `a != b`, among all pairs of a
/// window (colexicographic order).
#[inline]
pub fn pair_index(a: usize, b: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    hi * (hi - 1) / 2 + lo
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(idx: usize) -> (usize, usize) {
    let mut hi = (((8 * idx + 1) as f64).sqrt() as usize).div_ceil(2);
    while hi * (hi - 1) / 2 > idx {
        hi -= 1;
    }
    while (hi + 1) * hi / 2 <= idx {
        hi += 1;
    }
    (idx - hi * (hi - 1) / 2, hi)
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(len: usize) -> Self {
        BitSet { words: vec![0; len.div_ceil(64)] }
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize, on: bool) -> bool {
        let w = &mut self.words[i / 64];
        let old = *w >> (i % 64) & 1 == 1;
        if on {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
        old
    }

    fn clear(&mut self) {
        self.words.fill(0);
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + t)
            })
        })
    }
}

/// Occupied edges on the window `origin, origin + 1, ..., origin + n - 1`.
///
/// Vertices are addressed by their position `0..n`; [`RCGraphState::label`]
/// gives the integer site. With a boundary, position `n` is the boundary
/// vertex and `boundary_edge(a)` says whether `a` is wired to it.
#[derive(Debug, Clone)]
pub struct RCGraphState {
    n: usize,
    origin: i64,
    edges: BitSet,
    boundary: Option<BitSet>,
    uf: DisjointSet,
    dirty: bool,
}

impl PartialEq for RCGraphState {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.origin == other.origin && self.edges == other.edges && self.boundary == other.boundary
    }
}

impl RCGraphState {
    pub fn new(n: usize, origin: i64, with_boundary: bool) -> Self {
        RCGraphState {
            n,
            origin,
            edges: BitSet::new(pair_count(n)),
            boundary: with_boundary.then(|| BitSet::new(n)),
            uf: DisjointSet::new(n + usize::from(with_boundary)),
            dirty: false,
        }
    }

    /// Window `[0, n)` without boundary.
    pub fn empty(n: usize) -> Self {
        RCGraphState::new(n, 0, false)
    }

    pub fn from_edges(n: usize, origin: i64, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = RCGraphState::new(n, origin, false);
        for &(a, b) in edges {
            g.insert(a, b)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.is_some()
    }

    /// Position of the boundary vertex, if any.
    pub fn boundary_vertex(&self) -> Option<usize> {
        self.boundary.as_ref().map(|_| self.n)
    }

    pub fn label(&self, a: usize) -> i64 {
        self.origin + a as i64
    }

    pub fn position(&self, label: i64) -> Option<usize> {
        let p = label - self.origin;
        (p >= 0 && (p as usize) < self.n).then_some(p as usize)
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::arg(format!("loop at vertex {a}: loops are excluded")));
        }
        if a >= self.n || b >= self.n {
            return Err(Error::arg(format!("edge ({a}, {b}) outside window of {} vertices", self.n)));
        }
        Ok(())
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a != b && a < self.n && b < self.n && self.edges.get(pair_index(a, b))
    }

    pub fn insert(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_pair(a, b)?;
        self.insert_unchecked(a, b);
        Ok(())
    }

    #[inline]
    pub(crate) fn insert_unchecked(&mut self, a: usize, b: usize) {
        if !self.edges.set(pair_index(a, b), true) && !self.dirty {
            self.uf.union(a, b);
        }
    }

    pub fn remove(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_pair(a, b)?;
        if self.edges.set(pair_index(a, b), false) {
            self.dirty = true;
        }
        Ok(())
    }

    pub fn boundary_edge(&self, a: usize) -> bool {
        self.boundary.as_ref().is_some_and(|b| a < self.n && b.get(a))
    }

    pub fn set_boundary_edge(&mut self, a: usize, on: bool) -> Result<()> {
        if a >= self.n {
            return Err(Error::arg(format!("vertex {a} outside window")));
        }
        let n = self.n;
        let b = self.boundary.as_mut().ok_or_else(|| Error::arg("graph has no boundary vertex"))?;
        let was = b.set(a, on);
        if on && !was && !self.dirty {
            self.uf.union(a, n);
        } else if !on && was {
            self.dirty = true;
        }
        Ok(())
    }

    /// Removes every edge, including boundary edges.
    pub fn clear(&mut self) {
        self.edges.clear();
        if let Some(b) = &mut self.boundary {
            b.clear();
        }
        self.uf.reset();
        self.dirty = false;
    }

    fn rebuild(&mut self) {
        if !self.dirty {
            return;
        }
        self.uf.reset();
        for idx in self.edges.ones() {
            let (a, b) = pair_from_index(idx);
            self.uf.union(a, b);
        }
        if let Some(b) = &self.boundary {
            for a in b.ones() {
                self.uf.union(a, self.n);
            }
        }
        self.dirty = false;
    }

    /// Number of occupied window edges (boundary edges excluded).
    pub fn edge_count(&self) -> usize {
        self.edges.count()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.boundary.as_ref().map_or(0, BitSet::count)
    }

    /// Occupied window edges as position pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edges.ones().map(pair_from_index).collect()
    }

    pub fn boundary_edges(&self) -> Vec<usize> {
        self.boundary.as_ref().map_or_else(Vec::new, |b| b.ones().collect())
    }

    /// Connected components, counting the boundary vertex as a vertex.
    pub fn count_clusters(&mut self) -> usize {
        self.rebuild();
        self.uf.components()
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.rebuild();
        self.uf.connected(a, b)
    }

    /// Representative of the cluster of vertex `a`.
    pub fn root(&mut self, a: usize) -> usize {
        self.rebuild();
        self.uf.find(a)
    }

    /// Component id per vertex, numbered in order of first appearance.
    pub fn component_labels(&mut self) -> Vec<usize> {
        self.rebuild();
        let total = self.uf.len();
        let mut id = vec![usize::MAX; total];
        let mut next = 0;
        (0..total)
            .map(|v| {
                let r = self.uf.find(v);
                if id[r] == usize::MAX {
                    id[r] = next;
                    next += 1;
                }
                id[r]
            })
            .collect()
    }

    pub fn cluster_size(&mut self, a: usize) -> usize {
        let r = self.root(a);
        (0..self.n).filter(|&v| self.uf.find(v) == r).count()
    }

    pub fn degree(&self, a: usize) -> usize {
        (0..self.n).filter(|&b| self.contains(a, b)).count()
    }

    /// Component count by breadth-first search over the edge set; an oracle
    /// independent of the union-find.
    pub fn count_clusters_bfs(&self) -> usize {
        let total = self.n + usize::from(self.has_boundary());
        let mut adj = vec![Vec::new(); total];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in self.boundary_edges() {
            adj[a].push(self.n);
            adj[self.n].push(a);
        }
        let mut seen = vec![false; total];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..total {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !std::mem::replace(&mut seen[w], true) {
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }
}
