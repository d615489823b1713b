//! Rooted trees, their automorphism groups given by sparse generators, and
//! recovery of the ancestor order from the group alone.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::groups::Perm;
use crate::{Error, Result};

/// A permutation stored by its moved points, sorted by point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparsePerm {
    moved: Vec<(usize, usize)>,
}

impl SparsePerm {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Builds from `(point, image)` pairs; fixed points may be included.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut moved: Vec<(usize, usize)> = pairs.into_iter().filter(|(x, y)| x != y).collect();
        moved.sort_unstable();
        moved.dedup();
        Self { moved }
    }

    pub fn from_perm(p: &Perm) -> Self {
        Self::from_pairs(p.images().iter().copied().enumerate())
    }

    pub fn to_perm(&self, degree: usize) -> Perm {
        let mut images: Vec<usize> = (0..degree).collect();
        for &(x, y) in &self.moved {
            images[x] = y;
        }
        Perm::new(images).expect("sparse permutation is a bijection")
    }

    pub fn apply(&self, x: usize) -> usize {
        match self.moved.binary_search_by_key(&x, |&(p, _)| p) {
            Ok(i) => self.moved[i].1,
            Err(_) => x,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.moved.iter().map(|&(x, _)| x)
    }

    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self::from_pairs(self.moved.iter().map(|&(x, y)| (y, x)))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut pts: Vec<usize> = self.support().chain(other.support()).collect();
        pts.sort_unstable();
        pts.dedup();
        Self::from_pairs(pts.into_iter().map(|x| (x, self.apply(other.apply(x)))))
    }
}

/// A rooted tree as a parent array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tree {
    pub parent: Vec<Option<usize>>,
}

impl Tree {
    pub fn new(parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        if parent.iter().filter(|p| p.is_none()).count() != 1 {
            return Err(Error::Invalid("a tree needs exactly one root".into()));
        }
        if let Some(v) = parent.iter().flatten().find(|&&p| p >= n) {
            return Err(Error::Invalid(format!("parent {v} out of range")));
        }
        for start in 0..n {
            let (mut v, mut steps) = (start, 0);
            while let Some(p) = parent[v] {
                v = p;
                steps += 1;
                if steps > n {
                    return Err(Error::Invalid(format!("node {start} lies on a cycle")));
                }
            }
        }
        Ok(Self { parent })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(Option::is_none).expect("validated tree")
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                out[*p].push(v);
            }
        }
        out
    }

    /// Whether `a` is `b` or one of its ancestors.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut v = Some(b);
        while let Some(x) = v {
            if x == a {
                return true;
            }
            v = self.parent[x];
        }
        false
    }

    /// For each node, the sorted list of its ancestors including itself.
    pub fn ancestor_order(&self) -> Vec<Vec<usize>> {
        (0..self.len())
            .map(|b| {
                let mut out = vec![b];
                let mut v = b;
                while let Some(p) = self.parent[v] {
                    out.push(p);
                    v = p;
                }
                out.sort_unstable();
                out
            })
            .collect()
    }

    /// Nodes listed so that every child comes after its parent.
    fn top_down(&self, children: &[Vec<usize>]) -> Vec<usize> {
        let mut order = vec![self.root()];
        let mut i = 0;
        while i < order.len() {
            order.extend_from_slice(&children[order[i]]);
            i += 1;
        }
        order
    }

    /// Canonical string of every subtree; equal strings mean isomorphic
    /// subtrees.
    pub fn encodings(&self) -> Vec<String> {
        let children = self.children();
        let mut enc = vec![String::new(); self.len()];
        for &v in self.top_down(&children).iter().rev() {
            let mut parts: Vec<&str> = children[v].iter().map(|&c| enc[c].as_str()).collect();
            parts.sort_unstable();
            let mut s = String::with_capacity(2 + parts.iter().map(|p| p.len()).sum::<usize>());
            s.push('(');
            parts.into_iter().for_each(|p| s.push_str(p));
            s.push(')');
            enc[v] = s;
        }
        enc
    }

    fn sorted_children(&self, enc: &[String]) -> Vec<Vec<usize>> {
        let mut children = self.children();
        for c in &mut children {
            c.sort_by(|&x, &y| enc[x].cmp(&enc[y]).then(x.cmp(&y)));
        }
        children
    }

    /// Renumbers nodes breadth-first with children in canonical order.
    /// Isomorphic trees get identical parent arrays. Returns the new tree
    /// and the map from old to new numbers.
    pub fn canonical(&self) -> (Tree, Vec<usize>) {
        let enc = self.encodings();
        let children = self.sorted_children(&enc);
        let order = self.top_down(&children);
        let mut relabel = vec![0; self.len()];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        let mut parent = vec![None; self.len()];
        for (old, p) in self.parent.iter().enumerate() {
            parent[relabel[old]] = p.map(|p| relabel[p]);
        }
        (Tree { parent }, relabel)
    }

    /// An isomorphism onto `other`, if there is one.
    pub fn isomorphism(&self, other: &Tree) -> Option<Vec<usize>> {
        let (c1, r1) = self.canonical();
        let (c2, r2) = other.canonical();
        if c1 != c2 {
            return None;
        }
        let mut inv2 = vec![0; r2.len()];
        for (old, &new) in r2.iter().enumerate() {
            inv2[new] = old;
        }
        Some(r1.iter().map(|&x| inv2[x]).collect())
    }

    /// Swaps of consecutive isomorphic sibling subtrees. These generate the
    /// automorphism group.
    pub fn automorphism_generators(&self) -> Vec<SparsePerm> {
        let enc = self.encodings();
        let children = self.sorted_children(&enc);
        let mut gens = Vec::new();
        for kids in &children {
            for w in kids.windows(2) {
                if enc[w[0]] == enc[w[1]] {
                    let mut pairs = Vec::new();
                    let mut stack = vec![(w[0], w[1])];
                    while let Some((x, y)) = stack.pop() {
                        pairs.push((x, y));
                        pairs.push((y, x));
                        stack.extend(children[x].iter().copied().zip(children[y].iter().copied()));
                    }
                    gens.push(SparsePerm::from_pairs(pairs));
                }
            }
        }
        gens
    }

    /// Whether `sigma` maps parents to parents. Only nodes near the support
    /// are checked.
    pub fn preserved_by(&self, sigma: &SparsePerm, children: &[Vec<usize>]) -> bool {
        sigma.support().all(|v| {
            v < self.len()
                && sigma.apply(v) < self.len()
                && self.parent[sigma.apply(v)] == self.parent[v].map(|p| sigma.apply(p))
                && children[v].iter().all(|&c| self.parent[sigma.apply(c)] == Some(sigma.apply(v)))
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "parent": self.parent })
    }
}

/// A tree in which every child subtree is repeated among its siblings at
/// least `p` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaddedTree {
    pub tree: Tree,
    pub p: usize,
}

impl PaddedTree {
    pub fn new(tree: Tree, p: usize) -> Result<Self> {
        if let Some((a, b)) = padding_violation(&tree, p) {
            return Err(Error::Invalid(format!(
                "child {b} of node {a} has fewer than {p} isomorphic siblings"
            )));
        }
        Ok(Self { tree, p })
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "parent": self.tree.parent, "p": self.p })
    }
}

/// A `(node, child)` pair whose child shape occurs fewer than `p` times
/// among the node's children.
pub fn padding_violation(t: &Tree, p: usize) -> Option<(usize, usize)> {
    let enc = t.encodings();
    for (a, kids) in t.children().iter().enumerate() {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for &c in kids {
            *counts.entry(enc[c].as_str()).or_default() += 1;
        }
        if let Some(&b) = kids.iter().find(|&&c| counts[enc[c].as_str()] < p) {
            return Some((a, b));
        }
    }
    None
}

/// For the group generated by `gens` on `0..degree`, returns for every `b`
/// the sorted set of points fixed by every element fixing `b`.
///
/// Works orbit by orbit. The stabilizer of an orbit representative is
/// generated by its Schreier generators, so its fixed points are the points
/// every Schreier generator fixes; the answer is carried to the rest of the
/// orbit through the transversal.
pub fn recover_order(degree: usize, gens: &[SparsePerm]) -> Vec<Vec<usize>> {
    let mut movers: Vec<Vec<usize>> = vec![Vec::new(); degree];
    for (i, g) in gens.iter().enumerate() {
        for x in g.support() {
            movers[x].push(i);
        }
    }
    let subset = |a: &[usize], b: &[usize]| a.iter().all(|g| b.binary_search(g).is_ok());
    let mut below: Vec<Option<Vec<usize>>> = vec![None; degree];
    for b in 0..degree {
        if below[b].is_some() {
            continue;
        }
        // transversal: t[x] maps b to x
        let mut t: BTreeMap<usize, (SparsePerm, SparsePerm)> = BTreeMap::new();
        t.insert(b, (SparsePerm::identity(), SparsePerm::identity()));
        let mut orbit = vec![b];
        let mut i = 0;
        while i < orbit.len() {
            let x = orbit[i];
            for &gi in &movers[x] {
                let y = gens[gi].apply(x);
                if !t.contains_key(&y) {
                    let ty = gens[gi].compose(&t[&x].0);
                    let inv = ty.inverse();
                    t.insert(y, (ty, inv));
                    orbit.push(y);
                }
            }
            i += 1;
        }
        let mut fixed: Vec<usize> = (0..degree).collect();
        for &x in &orbit {
            let tx = &t[&x].0;
            fixed.retain(|&c| {
                let u = tx.apply(c);
                // generators fixing x give t_x⁻¹ g t_x, which fixes c iff g fixes u
                if !subset(&movers[u], &movers[x]) {
                    return false;
                }
                movers[x].iter().all(|&gi| {
                    let y = gens[gi].apply(x);
                    t[&y].1.apply(gens[gi].apply(u)) == c
                })
            });
        }
        for &x in &orbit {
            let tx = &t[&x].0;
            let mut img: Vec<usize> = fixed.iter().map(|&c| tx.apply(c)).collect();
            img.sort_unstable();
            below[x] = Some(img);
        }
    }
    below.into_iter().map(|x| x.expect("every point lies in an orbit")).collect()
}

/// Reads a recovered order as a tree. Fails unless every down-set is a
/// chain with a single least element.
pub fn order_to_tree(below: &[Vec<usize>]) -> Result<Tree> {
    let mut parent = vec![None; below.len()];
    for (b, down) in below.iter().enumerate() {
        if down.binary_search(&b).is_err() {
            return Err(Error::Invalid(format!("node {b} is not below itself")));
        }
        let strict: Vec<usize> = down.iter().copied().filter(|&a| a != b).collect();
        if strict.is_empty() {
            continue;
        }
        let top = *strict
            .iter()
            .max_by_key(|&&a| below[a].len())
            .expect("nonempty");
        if below[top] != strict {
            return Err(Error::Invalid(format!("the nodes below {b} do not form a chain")));
        }
        parent[b] = Some(top);
    }
    Tree::new(parent)
}
