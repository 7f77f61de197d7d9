//! Plain-text edge lists.
//!
//! ```text
//! # n=5 origin=-2 boundary=false seed=7 params=alpha=2,beta=1
//! -2 0
//! 1 2
//! ```
//!
//! Every line after the header is an occupied edge given by its two site
//! labels; a boundary edge is written with `b` as the second entry.

use std::fmt::Write as _;

use super::graph::RCGraphState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeListHeader {
    pub n: usize,
    pub origin: i64,
    pub boundary: bool,
    pub seed: u64,
    pub params: String,
}

/// `params` must not contain whitespace.
pub fn to_edge_list(g: &RCGraphState, seed: u64, params: &str) -> Result<String> {
    if params.chars().any(char::is_whitespace) {
        return Err(Error::arg("edge-list params must not contain whitespace"));
    }
    let mut s = format!(
        "# n={} origin={} boundary={} seed={} params={}\n",
        g.n(),
        g.origin(),
        g.has_boundary(),
        seed,
        params
    );
    for (a, b) in g.edges() {
        writeln!(s, "{} {}", g.label(a), g.label(b)).unwrap();
    }
    for a in g.boundary_edges() {
        writeln!(s, "{} b", g.label(a)).unwrap();
    }
    Ok(s)
}

pub fn parse_edge_list(text: &str) -> Result<(RCGraphState, EdgeListHeader)> {
    let mut lines = text.lines();
    let head = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| Error::arg("missing edge-list header"))?;
    let field = |key: &str| -> Result<String> {
        head.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .map(str::to_owned)
            .ok_or_else(|| Error::arg(format!("header lacks {key}")))
    };
    let bad = |what: &str| Error::arg(format!("malformed {what} in edge-list header"));
    let header = EdgeListHeader {
        n: field("n")?.parse().map_err(|_| bad("n"))?,
        origin: field("origin")?.parse().map_err(|_| bad("origin"))?,
        boundary: field("boundary")?.parse().map_err(|_| bad("boundary"))?,
        seed: field("seed")?.parse().map_err(|_| bad("seed"))?,
        params: field("params")?,
    };
    let mut g = RCGraphState::new(header.n, header.origin, header.boundary);
    for (k, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::arg(format!("line {}: expected two entries", k + 2)));
        };
        let pos = |s: &str| -> Result<usize> {
            let label: i64 = s.parse().map_err(|_| Error::arg(format!("line {}: bad site {s}", k + 2)))?;
            g.position(label).ok_or_else(|| Error::arg(format!("line {}: site {label} outside window", k + 2)))
        };
        let a = pos(x)?;
        if y == "b" {
            g.set_boundary_edge(a, true)?;
        } else {
            let b = pos(y)?;
            g.insert(a, b)?;
        }
    }
    Ok((g, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_with_boundary() {
        let mut g = RCGraphState::new(5, -2, true);
        g.insert(0, 2).unwrap();
        g.insert(3, 4).unwrap();
        g.set_boundary_edge(1, true).unwrap();
        let text = to_edge_list(&g, 7, "alpha=2,beta=1").unwrap();
        assert!(text.starts_with("# n=5 origin=-2 boundary=true seed=7 params=alpha=2,beta=1\n"));
        assert!(text.contains("\n-2 0\n"));
        assert!(text.contains("\n-1 b\n"));
        let (h, head) = parse_edge_list(&text).unwrap();
        assert_eq!(h, g);
        assert_eq!(head.seed, 7);
        assert!(parse_edge_list("1 2\n").is_err());
        assert!(parse_edge_list("# n=2 origin=0 boundary=false seed=1 params=x\n0 5\n").is_err());
        assert!(to_edge_list(&g, 1, "a b").is_err());
    }

    proptest! {
        #[test]
        fn random_graphs_round_trip(n in 2usize..12, origin in -20i64..20, bits in prop::collection::vec(any::<bool>(), 66)) {
            let mut g = RCGraphState::new(n, origin, false);
            let mut k = 0;
            for b in 0..n {
                for a in 0..b {
                    if bits[k % bits.len()] {
                        g.insert(a, b).unwrap();
                    }
                    k += 1;
                }
            }
            let (h, _) = parse_edge_list(&to_edge_list(&g, 3, "p").unwrap()).unwrap();
            prop_assert_eq!(h, g);
        }
    }
}
