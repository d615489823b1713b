use serde::{Deserialize, Serialize};

use super::FinStructure;
use crate::tuples;

/// Truth status of one atom. Stored as a two-bit set so that merged or
/// corrupted diagrams can assert both polarities or neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Both,
    Neither,
}

const POS: u8 = 1;
const NEG: u8 = 2;

impl Truth {
    fn from_bits(b: u8) -> Truth {
        match b {
            POS => Truth::True,
            NEG => Truth::False,
            3 => Truth::Both,
            _ => Truth::Neither,
        }
    }

    pub fn is_true(self) -> bool {
        matches!(self, Truth::True | Truth::Both)
    }
}

/// The quantifier-free diagram of an `n`-tuple: equality atoms `x_i = x_j`,
/// every relation atom on variable tuples, and `x_i = c` for each constant.
///
/// Atoms are laid out in a fixed canonical order: the `n×n` equality block,
/// then one block of `n^r` atoms per relation (tuples in lexicographic
/// order), then one block of `n` atoms per constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QfDiagram {
    pub arity: usize,
    pub rel_arities: Vec<usize>,
    pub n_consts: usize,
    pub bits: Vec<u8>,
}

impl QfDiagram {
    fn layout_len(arity: usize, rel_arities: &[usize], n_consts: usize) -> usize {
        arity * arity + rel_arities.iter().map(|&r| tuples::count(arity, r)).sum::<usize>() + n_consts * arity
    }

    /// A diagram asserting nothing.
    pub fn empty(arity: usize, rel_arities: Vec<usize>, n_consts: usize) -> Self {
        let len = Self::layout_len(arity, &rel_arities, n_consts);
        QfDiagram {
            arity,
            rel_arities,
            n_consts,
            bits: vec![0; len],
        }
    }

    fn rel_offset(&self, rel: usize) -> usize {
        self.arity * self.arity
            + self.rel_arities[..rel]
                .iter()
                .map(|&r| tuples::count(self.arity, r))
                .sum::<usize>()
    }

    fn const_offset(&self, c: usize) -> usize {
        self.rel_offset(self.rel_arities.len()) + c * self.arity
    }

    fn eq_slot(&self, i: usize, j: usize) -> usize {
        i * self.arity + j
    }

    fn rel_slot(&self, rel: usize, vars: &[usize]) -> usize {
        self.rel_offset(rel) + tuples::encode(vars, self.arity)
    }

    fn const_slot(&self, c: usize, i: usize) -> usize {
        self.const_offset(c) + i
    }

    fn set(&mut self, slot: usize, value: bool) {
        self.bits[slot] = if value { POS } else { NEG };
    }

    pub fn eq(&self, i: usize, j: usize) -> Truth {
        Truth::from_bits(self.bits[self.eq_slot(i, j)])
    }

    pub fn rel(&self, rel: usize, vars: &[usize]) -> Truth {
        Truth::from_bits(self.bits[self.rel_slot(rel, vars)])
    }

    pub fn is_const(&self, c: usize, i: usize) -> Truth {
        Truth::from_bits(self.bits[self.const_slot(c, i)])
    }

    /// The diagram of `(a_{map(0)}, …, a_{map(k-1)})` given the diagram of
    /// `ā`, for an arbitrary map `k -> n`.
    pub fn pullback(&self, map: &[usize]) -> QfDiagram {
        let k = map.len();
        let mut out = QfDiagram::empty(k, self.rel_arities.clone(), self.n_consts);
        for i in 0..k {
            for j in 0..k {
                let s = out.eq_slot(i, j);
                out.bits[s] = self.bits[self.eq_slot(map[i], map[j])];
            }
        }
        for (r, &ar) in self.rel_arities.iter().enumerate() {
            for vars in tuples::all(k, ar) {
                let image: Vec<usize> = vars.iter().map(|&v| map[v]).collect();
                let s = out.rel_slot(r, &vars);
                out.bits[s] = self.bits[self.rel_slot(r, &image)];
            }
        }
        for c in 0..self.n_consts {
            for i in 0..k {
                let s = out.const_slot(c, i);
                out.bits[s] = self.bits[self.const_slot(c, map[i])];
            }
        }
        out
    }

    /// Atom-wise union of asserted literals.
    pub fn union(&self, other: &QfDiagram) -> QfDiagram {
        assert_eq!(self.bits.len(), other.bits.len(), "diagram layouts differ");
        QfDiagram {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect(),
            ..self.clone()
        }
    }

    /// The variable partition: `classes[i]` is the least `j` with `x_i = x_j`.
    /// Only meaningful on complete types.
    pub fn eq_classes(&self) -> Vec<usize> {
        (0..self.arity)
            .map(|i| (0..=i).find(|&j| self.eq(i, j).is_true()).unwrap_or(i))
            .collect()
    }

    /// Whether `x_{f(i)} = x_{g(i)}` is asserted for every `i`.
    pub fn asserts_equal(&self, f: &[usize], g: &[usize]) -> bool {
        f.iter().zip(g).all(|(&a, &b)| self.eq(a, b) == Truth::True)
    }

    /// Checks that the diagram is a complete, realizable quantifier-free
    /// type. Realizability is constructive: when every atom has exactly one
    /// polarity, equality is an equivalence relation, atoms respect it and
    /// constants name at most one class, the quotient of the variables is a
    /// witness structure.
    pub fn check_complete(&self) -> Result<(), String> {
        if let Some(slot) = self.bits.iter().position(|&b| b != POS && b != NEG) {
            let what = if self.bits[slot] == 3 { "both polarities" } else { "no polarity" };
            return Err(format!("atom #{slot} has {what}"));
        }
        let n = self.arity;
        for i in 0..n {
            if self.eq(i, i) != Truth::True {
                return Err(format!("x{i}=x{i} is not asserted"));
            }
            for j in 0..n {
                if self.eq(i, j) != self.eq(j, i) {
                    return Err(format!("equality x{i}=x{j} is not symmetric"));
                }
                for k in 0..n {
                    if self.eq(i, j).is_true() && self.eq(j, k).is_true() && !self.eq(i, k).is_true() {
                        return Err(format!("equality x{i}=x{j}=x{k} is not transitive"));
                    }
                }
            }
        }
        let reps = self.eq_classes();
        for (r, &ar) in self.rel_arities.iter().enumerate() {
            for vars in tuples::all(n, ar) {
                let canon: Vec<usize> = vars.iter().map(|&v| reps[v]).collect();
                if self.rel(r, &vars) != self.rel(r, &canon) {
                    return Err(format!("relation #{r} on {vars:?} disagrees with equal variables"));
                }
            }
        }
        for c in 0..self.n_consts {
            for i in 0..n {
                if self.is_const(c, i) != self.is_const(c, reps[i]) {
                    return Err(format!("constant #{c} disagrees on equal variables x{i}"));
                }
            }
            let named: Vec<usize> = (0..n).filter(|&i| self.is_const(c, i).is_true()).collect();
            if named.iter().any(|&i| reps[i] != reps[named[0]]) {
                return Err(format!("constant #{c} equals two distinct variables"));
            }
        }
        Ok(())
    }
}

/// The complete atomic diagram of `tuple` in `m`.
pub fn qf_type(m: &FinStructure, tuple: &[usize]) -> QfDiagram {
    let n = tuple.len();
    let mut d = QfDiagram::empty(n, m.vocab.rel_arities(), m.vocab.constants.len());
    for i in 0..n {
        for j in 0..n {
            let s = d.eq_slot(i, j);
            d.set(s, tuple[i] == tuple[j]);
        }
    }
    for (r, sym) in m.vocab.relations.iter().enumerate() {
        for vars in tuples::all(n, sym.arity) {
            let image: Vec<usize> = vars.iter().map(|&v| tuple[v]).collect();
            let s = d.rel_slot(r, &vars);
            d.set(s, m.holds(r, &image));
        }
    }
    for (c, &val) in m.constants.iter().enumerate() {
        for (i, &x) in tuple.iter().enumerate() {
            let s = d.const_slot(c, i);
            d.set(s, x == val);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> FinStructure {
        FinStructure::relational(3, &[("E", 2, &[&[0, 1], &[1, 0], &[1, 2], &[2, 1]])]).unwrap()
    }

    #[test]
    fn equality_only_language() {
        let d = qf_type(&FinStructure::pure_set(2), &[0, 1]);
        assert_eq!(d.eq(0, 1), Truth::False);
        assert_eq!(d.bits.len(), 4);
        d.check_complete().unwrap();
    }

    #[test]
    fn path_pair() {
        let d = qf_type(&p3(), &[0, 2]);
        assert_eq!(d.eq(0, 1), Truth::False);
        assert_eq!(d.rel(0, &[0, 1]), Truth::False);
        assert_eq!(d.rel(0, &[1, 0]), Truth::False);
    }

    #[test]
    fn empty_tuple() {
        let d = qf_type(&p3(), &[]);
        assert_eq!(d.arity, 0);
        assert!(d.bits.is_empty());
    }

    #[test]
    fn pullback_matches_direct() {
        let m = p3();
        let d = qf_type(&m, &[0, 1, 2]);
        for map in tuples::functions(2, 3) {
            let t: Vec<usize> = map.iter().map(|&i| [0, 1, 2][i]).collect();
            assert_eq!(d.pullback(&map), qf_type(&m, &t));
        }
    }

    #[test]
    fn merged_diagrams_are_incomplete() {
        let m = FinStructure::pure_set(2);
        let merged = qf_type(&m, &[0, 0]).union(&qf_type(&m, &[0, 1]));
        assert_eq!(merged.eq(0, 1), Truth::Both);
        assert!(merged.check_complete().is_err());
    }

    #[test]
    fn incoherent_equality_rejected() {
        let m = p3();
        let mut d = qf_type(&m, &[0, 0]);
        // claim E(x0,x1) while x0 = x1 and ¬E(x0,x0)
        let s = d.rel_slot(0, &[0, 1]);
        d.set(s, true);
        assert!(d.check_complete().is_err());
    }
}
