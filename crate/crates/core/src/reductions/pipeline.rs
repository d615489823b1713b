//! Graphs to padded trees to automorphism groups, and conjugacy of those
//! groups decided through the ancestor order they determine.

use std::collections::BTreeSet;

use serde::Serialize;

use super::tree::{order_to_tree, recover_order, PaddedTree, SparsePerm, Tree};
use super::{graph_isomorphism, Graph};
use crate::groups::{Perm, PermGroup};
use crate::tuples;
use crate::{Error, Result};

/// Largest vertex count coded as a tree.
pub const GRAPH_GUARD: usize = 5;
/// Largest degree for the brute-force conjugacy search.
pub const BLIND_GUARD: usize = 8;

fn add(parent: &mut Vec<Option<usize>>, of: Option<usize>) -> usize {
    parent.push(of);
    parent.len() - 1
}

/// Codes `g` as a padded tree. The root carries `p` copies of one subtree
/// per distinct adjacency bit string over all vertex orderings; the subtree
/// for a string carries, for each position `i`, `p` copies of a star with
/// `p + 2i + bit` leaves. Nodes are numbered canonically.
pub fn graph_to_padded_tree(g: &Graph, p: usize) -> Result<PaddedTree> {
    if g.k > GRAPH_GUARD {
        return Err(Error::Guard {
            what: "graph vertex count",
            value: g.k,
            limit: GRAPH_GUARD,
        });
    }
    if p < 2 {
        return Err(Error::Invalid(format!("padding multiplicity {p} is below 2")));
    }
    let strings: BTreeSet<Vec<bool>> = tuples::permutations(g.k).iter().map(|o| g.bits(o)).collect();
    let mut parent = Vec::new();
    let root = add(&mut parent, None);
    for s in &strings {
        for _ in 0..p {
            let c = add(&mut parent, Some(root));
            for (i, &bit) in s.iter().enumerate() {
                for _ in 0..p {
                    let center = add(&mut parent, Some(c));
                    for _ in 0..p + 2 * i + usize::from(bit) {
                        add(&mut parent, Some(center));
                    }
                }
            }
        }
    }
    let (tree, _) = Tree::new(parent)?.canonical();
    PaddedTree::new(tree, p)
}

/// Everything the pipeline derives from one graph.
#[derive(Debug, Clone)]
pub struct FsSide {
    pub graph: Graph,
    pub tree: PaddedTree,
    pub gens: Vec<SparsePerm>,
    /// The order read off the automorphism group.
    pub order: Vec<Vec<usize>>,
    /// Whether `order` is the ancestor order of the tree.
    pub order_matches: bool,
}

impl FsSide {
    pub fn new(g: &Graph, p: usize) -> Result<Self> {
        let tree = graph_to_padded_tree(g, p)?;
        let gens = tree.tree.automorphism_generators();
        let order = recover_order(tree.len(), &gens);
        let order_matches = order == tree.tree.ancestor_order();
        Ok(Self {
            graph: g.clone(),
            tree,
            gens,
            order,
            order_matches,
        })
    }
}

fn conjugate_sparse(delta: &[usize], g: &SparsePerm) -> SparsePerm {
    SparsePerm::from_pairs(g.support().map(|x| (delta[x], delta[g.apply(x)])))
}

/// Decides whether the groups generated by `gens1` and `gens2` are conjugate
/// in the symmetric group, assuming each is the full automorphism group of
/// the tree its recovered order describes. An order isomorphism `δ` is the
/// candidate; it is returned only if `δ` conjugates each generating set into
/// the other tree's automorphisms.
pub fn order_method_conjugacy(
    degree1: usize,
    gens1: &[SparsePerm],
    degree2: usize,
    gens2: &[SparsePerm],
) -> Result<Option<Vec<usize>>> {
    if degree1 != degree2 {
        return Ok(None);
    }
    let t1 = order_to_tree(&recover_order(degree1, gens1))?;
    let t2 = order_to_tree(&recover_order(degree2, gens2))?;
    let Some(delta) = t1.isomorphism(&t2) else {
        return Ok(None);
    };
    let mut inv = vec![0; delta.len()];
    for (x, &y) in delta.iter().enumerate() {
        inv[y] = x;
    }
    let (c1, c2) = (t1.children(), t2.children());
    let forward = gens1.iter().all(|g| t2.preserved_by(&conjugate_sparse(&delta, g), &c2));
    let backward = gens2.iter().all(|g| t1.preserved_by(&conjugate_sparse(&inv, g), &c1));
    Ok((forward && backward).then_some(delta))
}

/// Some `δ` with `δ a δ⁻¹ = b`, by trying every permutation.
pub fn blind_conjugacy(a: &PermGroup, b: &PermGroup) -> Result<Option<Perm>> {
    if a.degree > BLIND_GUARD {
        return Err(Error::Guard {
            what: "degree for blind conjugacy search",
            value: a.degree,
            limit: BLIND_GUARD,
        });
    }
    if a.degree != b.degree || a.order() != b.order() {
        return Ok(None);
    }
    let gens: Vec<&Perm> = if a.gens.is_empty() { a.elements.iter().collect() } else { a.gens.iter().collect() };
    for images in tuples::permutations(a.degree) {
        let d = Perm::new(images)?;
        if gens.iter().all(|g| b.contains(&d.conjugate(g))) {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FsReport {
    pub graphs_isomorphic: bool,
    pub codes_conjugate: bool,
    pub agree: bool,
    pub nodes: (usize, usize),
    pub orders_recovered: bool,
}

impl FsSide {
    /// Compares two prepared sides.
    pub fn compare(&self, other: &FsSide) -> Result<FsReport> {
        let graphs_isomorphic = graph_isomorphism(&self.graph, &other.graph).is_some();
        let codes_conjugate =
            order_method_conjugacy(self.tree.len(), &self.gens, other.tree.len(), &other.gens)?.is_some();
        Ok(FsReport {
            graphs_isomorphic,
            codes_conjugate,
            agree: graphs_isomorphic == codes_conjugate,
            nodes: (self.tree.len(), other.tree.len()),
            orders_recovered: self.order_matches && other.order_matches,
        })
    }
}

/// Whether `g ≅ h` agrees with conjugacy of the codes of the automorphism
/// groups of their padded trees.
pub fn fs_pipeline_check(g: &Graph, h: &Graph, p: usize) -> Result<FsReport> {
    FsSide::new(g, p)?.compare(&FsSide::new(h, p)?)
}
