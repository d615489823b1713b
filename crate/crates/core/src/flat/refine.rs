use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{check_flat_axioms, FlatStructure};
use crate::structures::QfDiagram;
use crate::{Error, Result};

/// Colour refinement run on several flat structures at once, so that colours
/// are comparable between them. Colours start from `(arity, diagram)` and
/// are refined by the ordered colours of all projections together with the
/// set of colours of the one-point extensions. Colour ids follow the sorted
/// order of their signatures, so they do not depend on element numbering.
pub fn joint_refinement(structures: &[&FlatStructure]) -> Vec<Vec<usize>> {
    let initial: BTreeSet<(usize, &QfDiagram)> = structures
        .iter()
        .flat_map(|b| b.elements.iter().map(|e| (e.arity, &e.diagram)))
        .collect();
    let ids: BTreeMap<_, usize> = initial.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut colors: Vec<Vec<usize>> = structures
        .iter()
        .map(|b| b.elements.iter().map(|e| ids[&(e.arity, &e.diagram)]).collect())
        .collect();
    let mut count = ids.len();
    let exts: Vec<Vec<Vec<usize>>> = structures.iter().map(|b| b.extension_index()).collect();
    loop {
        let keys: Vec<Vec<(usize, Vec<usize>, Vec<usize>)>> = structures
            .iter()
            .enumerate()
            .map(|(si, b)| {
                let col = &colors[si];
                b.elements
                    .iter()
                    .enumerate()
                    .map(|(a, e)| {
                        let proj = e.proj.iter().map(|p| p.map_or(usize::MAX, |t| col[t])).collect();
                        let ext: BTreeSet<usize> = exts[si][a].iter().map(|&w| col[w]).collect();
                        (col[a], proj, ext.into_iter().collect())
                    })
                    .collect()
            })
            .collect();
        let sorted: BTreeSet<&(usize, Vec<usize>, Vec<usize>)> = keys.iter().flatten().collect();
        let ids: BTreeMap<_, usize> = sorted.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        let next: Vec<Vec<usize>> = keys.iter().map(|ks| ks.iter().map(|k| ids[k]).collect()).collect();
        let new_count = ids.len();
        colors = next;
        if new_count == count {
            return colors;
        }
        count = new_count;
    }
}

pub fn color_refinement(b: &FlatStructure) -> Vec<usize> {
    joint_refinement(&[b]).pop().unwrap()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HausdorffReport {
    pub hausdorff: bool,
    /// Two distinct points that no formula separates.
    pub unseparated: Option<(usize, usize)>,
    pub colors: usize,
}

/// Whether the ♭-formulas separate all points, decided by colour refinement.
pub fn hausdorff_check(b: &FlatStructure) -> Result<HausdorffReport> {
    let report = check_flat_axioms(b);
    if let Some(f) = report.failure {
        return Err(Error::NotFlat(f.to_string()));
    }
    let colors = color_refinement(b);
    let mut first = BTreeMap::new();
    let mut unseparated = None;
    for (a, &c) in colors.iter().enumerate() {
        if let Some(&x) = first.get(&c) {
            unseparated = Some((x, a));
            break;
        }
        first.insert(c, a);
    }
    let count = colors.iter().collect::<BTreeSet<_>>().len();
    Ok(HausdorffReport {
        hausdorff: unseparated.is_none(),
        unseparated,
        colors: count,
    })
}

/// Some isomorphism `b1 → b2` preserving arity, diagrams and projections.
pub fn flat_isomorphism(b1: &FlatStructure, b2: &FlatStructure) -> Option<Vec<usize>> {
    flat_isomorphisms(b1, b2, 1).pop()
}

/// Up to `limit` isomorphisms `b1 → b2`, found by backtracking in order of
/// increasing arity. Choices are restricted to equal refinement colours and
/// every choice is propagated down through the projections.
pub fn flat_isomorphisms(b1: &FlatStructure, b2: &FlatStructure, limit: usize) -> Vec<Vec<usize>> {
    if b1.n_max != b2.n_max || b1.vocab != b2.vocab || b1.len() != b2.len() {
        return vec![];
    }
    let colors = joint_refinement(&[b1, b2]);
    let hist = |c: &Vec<usize>| {
        let mut h = BTreeMap::new();
        for &x in c {
            *h.entry(x).or_insert(0usize) += 1;
        }
        h
    };
    if hist(&colors[0]) != hist(&colors[1]) {
        return vec![];
    }
    let mut by_color: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (y, &c) in colors[1].iter().enumerate() {
        by_color.entry(c).or_default().push(y);
    }
    let mut order: Vec<usize> = (0..b1.len()).collect();
    order.sort_by_key(|&x| (b1.arity(x), x));
    let mut search = Search {
        b1,
        b2,
        colors: &colors,
        by_color,
        order,
        map: vec![None; b1.len()],
        used: vec![false; b2.len()],
        trail: Vec::new(),
        out: Vec::new(),
        limit,
    };
    search.run(0);
    search.out
}

struct Search<'a> {
    b1: &'a FlatStructure,
    b2: &'a FlatStructure,
    colors: &'a [Vec<usize>],
    by_color: BTreeMap<usize, Vec<usize>>,
    order: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    trail: Vec<usize>,
    out: Vec<Vec<usize>>,
    limit: usize,
}

impl Search<'_> {
    fn run(&mut self, pos: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        let Some(&x) = self.order[pos..].iter().find(|&&x| self.map[x].is_none()) else {
            let map: Vec<usize> = self.map.iter().map(|m| m.unwrap()).collect();
            if is_isomorphism(self.b1, self.b2, &map) {
                self.out.push(map);
            }
            return;
        };
        let next = self.order.iter().position(|&o| o == x).unwrap();
        let candidates: Vec<usize> = self.by_color[&self.colors[0][x]]
            .iter()
            .copied()
            .filter(|&y| !self.used[y] && self.compatible(x, y))
            .collect();
        for y in candidates {
            let mark = self.trail.len();
            if self.assign(x, y) {
                self.run(next + 1);
            }
            self.undo(mark);
            if self.out.len() >= self.limit {
                return;
            }
        }
    }

    fn compatible(&self, x: usize, y: usize) -> bool {
        let (ex, ey) = (&self.b1.elements[x], &self.b2.elements[y]);
        ex.proj.len() == ey.proj.len()
            && ex.proj.iter().zip(&ey.proj).all(|(px, py)| match (px, py) {
                (Some(px), Some(py)) => self.map[*px].is_none_or(|z| z == *py),
                (None, None) => true,
                _ => false,
            })
    }

    fn assign(&mut self, x: usize, y: usize) -> bool {
        let mut stack = vec![(x, y)];
        while let Some((x, y)) = stack.pop() {
            match self.map[x] {
                Some(z) if z == y => continue,
                Some(_) => return false,
                None => {}
            }
            if self.used[y] || self.colors[0][x] != self.colors[1][y] {
                return false;
            }
            self.map[x] = Some(y);
            self.used[y] = true;
            self.trail.push(x);
            let (ex, ey) = (&self.b1.elements[x], &self.b2.elements[y]);
            if ex.proj.len() != ey.proj.len() {
                return false;
            }
            for (px, py) in ex.proj.iter().zip(&ey.proj) {
                match (px, py) {
                    (Some(px), Some(py)) => stack.push((*px, *py)),
                    (None, None) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let x = self.trail.pop().unwrap();
            let y = self.map[x].take().unwrap();
            self.used[y] = false;
        }
    }
}

/// Whether `map` is a bijection `b1 → b2` preserving arity, diagrams and
/// every projection.
pub(crate) fn is_isomorphism(b1: &FlatStructure, b2: &FlatStructure, map: &[usize]) -> bool {
    if map.len() != b1.len() || b1.len() != b2.len() || b1.vocab != b2.vocab {
        return false;
    }
    let mut seen = vec![false; b2.len()];
    for (x, &y) in map.iter().enumerate() {
        if y >= b2.len() || std::mem::replace(&mut seen[y], true) {
            return false;
        }
        let (ex, ey) = (&b1.elements[x], &b2.elements[y]);
        if ex.arity != ey.arity || ex.diagram != ey.diagram || ex.proj.len() != ey.proj.len() {
            return false;
        }
        if ex.proj.iter().zip(&ey.proj).any(|(px, py)| px.map(|p| map[p]) != *py) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backforth::compute_f_infinity;
    use crate::flat::tests::c3_closure;
    use crate::flat::{element_of, flatten};
    use crate::structures::FinStructure;

    #[test]
    fn hausdorff_examples() {
        let two = FinStructure::pure_set(2);
        let s = compute_f_infinity(&two, 2).unwrap();
        let r = hausdorff_check(&flatten(&two, &s).unwrap()).unwrap();
        assert!(r.hausdorff);

        let three = FinStructure::pure_set(3);
        let c3 = c3_closure(3);
        let r = hausdorff_check(&flatten(&three, &c3).unwrap()).unwrap();
        assert!(!r.hausdorff);
        let (x, y) = r.unseparated.unwrap();
        assert_eq!((x, y), (element_of(&c3, &[0, 1]), element_of(&c3, &[0, 2])));
    }

    #[test]
    fn isomorphism_search() {
        let three = FinStructure::pure_set(3);
        let b = flatten(&three, &c3_closure(2)).unwrap();
        // b has an automorphism swapping the two cyclic orientations
        let autos = flat_isomorphisms(&b, &b, usize::MAX);
        assert_eq!(autos.len(), 2);
        let full = flatten(&three, &compute_f_infinity(&three, 2).unwrap()).unwrap();
        assert!(flat_isomorphism(&b, &full).is_none());

        let p3 = FinStructure::relational(3, &[("E", 2, &[&[0, 1], &[1, 0], &[1, 2], &[2, 1]])]).unwrap();
        let q3 = p3.relabel(&[1, 0, 2]);
        let bp = flatten(&p3, &compute_f_infinity(&p3, 3).unwrap()).unwrap();
        let bq = flatten(&q3, &compute_f_infinity(&q3, 3).unwrap()).unwrap();
        assert!(flat_isomorphism(&bp, &bq).is_some());
    }
}
