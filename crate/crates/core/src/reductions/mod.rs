//! Finite-scale reductions: graphs coded as padded trees, conjugacy of the
//! resulting automorphism groups, and cross-cutting equivalence relations.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::tuples;
use crate::{Error, Result};

mod crosscut;
mod pipeline;
mod tree;

pub use crosscut::{
    build_cross_cut, cross_cut_class_counts, e_infinity_classes, exponent_experiment, quotient_coloring,
    structure_isomorphism, CrossCutSpec, ExponentReport, CROSS_CUT_GUARD,
};
pub use pipeline::{
    blind_conjugacy, graph_to_padded_tree, order_method_conjugacy, fs_pipeline_check, FsReport, FsSide, GRAPH_GUARD,
};
pub use tree::{order_to_tree, padding_violation, recover_order, PaddedTree, SparsePerm, Tree};

fn syntax(message: String) -> Error {
    Error::Syntax {
        line: 1,
        column: 1,
        message,
    }
}

/// A simple undirected graph on `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Graph {
    pub k: usize,
    /// Edges as `(i, j)` with `i < j`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::Invalid(format!("loop at vertex {i}")));
            }
            if i >= k || j >= k {
                return Err(Error::Invalid(format!("edge ({i},{j}) out of range for {k} vertices")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self { k, edges: set })
    }

    /// Parses `k; (i,j); (i,j); …`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(';').map(str::trim).filter(|p| !p.is_empty());
        let k = parts
            .next()
            .ok_or_else(|| syntax("empty graph".into()))?
            .parse::<usize>()
            .map_err(|e| syntax(format!("vertex count: {e}")))?;
        let mut edges = Vec::new();
        for p in parts {
            let inner = p
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| syntax(format!("edge `{p}` is not of the form (i,j)")))?;
            let ends: Vec<usize> = inner
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| syntax(format!("edge `{p}`: {e}")))?;
            match ends[..] {
                [i, j] => edges.push((i, j)),
                _ => return Err(syntax(format!("edge `{p}` needs two endpoints"))),
            }
        }
        Self::new(k, edges)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// The graph with vertex `v` renamed `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        Graph::new(self.k, self.edges.iter().map(|&(a, b)| (perm[a], perm[b]))).expect("relabeling keeps a graph")
    }

    /// Upper-triangle adjacency bits when position `i` holds vertex
    /// `order[i]`.
    pub fn bits(&self, order: &[usize]) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.k * self.k.saturating_sub(1) / 2);
        for a in 0..self.k {
            for b in a + 1..self.k {
                out.push(self.adjacent(order[a], order[b]));
            }
        }
        out
    }

    /// Every labeled graph on `k` vertices.
    pub fn all(k: usize) -> Vec<Graph> {
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        (0..1u64 << pairs.len())
            .map(|mask| {
                Graph::new(k, pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e))
                    .expect("pairs are in range")
            })
            .collect()
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.k)?;
        for (a, b) in &self.edges {
            write!(f, "; ({a},{b})")?;
        }
        Ok(())
    }
}

/// A vertex bijection `g → h` preserving adjacency, by brute force.
pub fn graph_isomorphism(g: &Graph, h: &Graph) -> Option<Vec<usize>> {
    if g.k != h.k || g.edges.len() != h.edges.len() {
        return None;
    }
    tuples::permutations(g.k).into_iter().find(|p| g.relabel(p) == *h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let g = Graph::parse("3; (0,1); (2, 1);").unwrap();
        assert_eq!(g.to_string(), "3; (0,1); (1,2)");
        assert_eq!(Graph::parse(&g.to_string()).unwrap(), g);
        assert!(Graph::parse("2; (0,0)").is_err());
        assert!(Graph::parse("2; (0,2)").is_err());
        assert!(Graph::parse("x").is_err());
    }

    #[test]
    fn three_vertex_classes() {
        let all = Graph::all(3);
        assert_eq!(all.len(), 8);
        let mut reps: Vec<Graph> = Vec::new();
        for g in all {
            if !reps.iter().any(|r| graph_isomorphism(r, &g).is_some()) {
                reps.push(g);
            }
        }
        assert_eq!(reps.len(), 4);
    }
}
