//! The folding map `i -> |i|` from graphs on `[-M, M]` to graphs on `[0, M]`.

use super::graph::RCGraphState;
use crate::error::{Error, Result};

fn half_width(t: &RCGraphState) -> Result<usize> {
    let n = t.n();
    if n.is_multiple_of(2) || t.origin() != -((n / 2) as i64) {
        return Err(Error::arg(format!(
            "fold_map needs a symmetric window [-M, M], got {} sites from {}",
            n,
            t.origin()
        )));
    }
    Ok(n / 2)
}

/// `F(t)_{ab} = 1` iff some occupied edge `ij` has `|i| = a`, `|j| = b`,
/// `a != b`; would-be loops are dropped. Boundary edges are ignored.
pub fn fold_map(t: &RCGraphState) -> Result<RCGraphState> {
    let m = half_width(t)?;
    let mut out = RCGraphState::new(m + 1, 0, false);
    for (a, b) in t.edges() {
        let (x, y) = (t.label(a).unsigned_abs() as usize, t.label(b).unsigned_abs() as usize);
        if x != y {
            out.insert_unchecked(x, y);
        }
    }
    Ok(out)
}

/// Number of clusters of `t` whose folded vertices are not all in one
/// cluster of `fold_map(t)`.
pub fn fold_connectivity_violations(t: &mut RCGraphState) -> Result<usize> {
    let mut f = fold_map(t)?;
    let n = t.n();
    let mut image_root = vec![usize::MAX; n];
    let mut bad = vec![false; n];
    for v in 0..n {
        let r = t.root(v);
        let img = f.root(t.label(v).unsigned_abs() as usize);
        if image_root[r] == usize::MAX {
            image_root[r] = img;
        } else if image_root[r] != img {
            bad[r] = true;
        }
    }
    Ok(bad.iter().filter(|&&b| b).count())
}

/// Every occupied edge maps to a single vertex or to an occupied edge of the
/// image, so occupied paths map to connected walks.
pub fn fold_edge_images_ok(t: &RCGraphState, f: &RCGraphState) -> bool {
    t.edges().iter().all(|&(a, b)| {
        let (x, y) = (t.label(a).unsigned_abs() as usize, t.label(b).unsigned_abs() as usize);
        x == y || f.contains(x, y)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rc::field::EdgeProbabilityField;
    use crate::rc::sampler::{BernoulliSampler, GraphSampler};
    use std::collections::VecDeque;

    fn window(m: usize, edges: &[(i64, i64)]) -> RCGraphState {
        let mut g = RCGraphState::new(2 * m + 1, -(m as i64), false);
        for &(i, j) in edges {
            let (a, b) = (g.position(i).unwrap(), g.position(j).unwrap());
            g.insert(a, b).unwrap();
        }
        g
    }

    #[test]
    fn fold_examples() {
        let f = fold_map(&window(3, &[(-1, 2)])).unwrap();
        assert_eq!(f.n(), 4);
        assert_eq!(f.edges(), vec![(1, 2)]);
        assert_eq!(fold_map(&window(3, &[(-3, 3)])).unwrap().edge_count(), 0);
        let f = fold_map(&window(2, &[(-2, 1), (2, -1), (0, 1)])).unwrap();
        assert_eq!(f.edges(), vec![(0, 1), (1, 2)]);
        assert!(fold_map(&RCGraphState::empty(4)).is_err());
    }

    /// Reachability by BFS on the raw edge lists.
    fn reachable(n: usize, edges: &[(usize, usize)], s: usize) -> Vec<bool> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if !std::mem::replace(&mut seen[w], true) {
                    q.push_back(w);
                }
            }
        }
        seen
    }

    #[test]
    fn folding_preserves_connectivity_by_bfs() {
        let field = EdgeProbabilityField::rho(1.8, 0.7).unwrap();
        let m = 6;
        let mut s = BernoulliSampler::new(2 * m + 1, -(m as i64), &field, 77).unwrap();
        for _ in 0..2000 {
            s.advance();
            let t = s.graph();
            let f = fold_map(t).unwrap();
            assert!(fold_edge_images_ok(t, &f));
            let te = t.edges();
            let fe = f.edges();
            for v in 0..t.n() {
                let rt = reachable(t.n(), &te, v);
                let rf = reachable(f.n(), &fe, t.label(v).unsigned_abs() as usize);
                for w in 0..t.n() {
                    if rt[w] {
                        assert!(rf[t.label(w).unsigned_abs() as usize]);
                    }
                }
            }
            assert_eq!(fold_connectivity_violations(t).unwrap(), 0);
        }
    }
}
