//! Structures with cross-cutting equivalence relations, their automorphism
//! exponents and quotients by the intersection of all relations.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::groups::{automorphism_group_guarded, divides_check, exponent, generate, Perm};
use crate::structures::{qf_type, FinStructure, RelSym, Vocabulary};
use crate::tuples;
use crate::{Error, Result};

/// Largest universe built from a spec.
pub const CROSS_CUT_GUARD: usize = 32;

/// Class counts `h(n)` and a multiplicity for every cell of the product of
/// the class index sets, indexed in mixed radix with coordinate 0 most
/// significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossCutSpec {
    pub h: Vec<usize>,
    pub mult: Vec<usize>,
}

impl CrossCutSpec {
    pub fn new(h: Vec<usize>, mult: Vec<usize>) -> Result<Self> {
        if h.is_empty() || h.iter().any(|&x| x < 2) {
            return Err(Error::Invalid("every relation needs at least two classes".into()));
        }
        let cells: usize = h.iter().product();
        if mult.len() != cells {
            return Err(Error::LengthMismatch {
                expected: cells,
                found: mult.len(),
            });
        }
        if mult.contains(&0) {
            return Err(Error::Invalid("multiplicities must be positive".into()));
        }
        Ok(Self { h, mult })
    }

    /// Every cell realized once.
    pub fn atomic(h: Vec<usize>) -> Result<Self> {
        let cells = h.iter().product();
        Self::new(h, vec![1; cells])
    }

    pub fn is_atomic(&self) -> bool {
        self.mult.iter().all(|&m| m == 1)
    }

    /// The coordinates of cell `i`.
    pub fn cell(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.h.len()];
        for (slot, &h) in out.iter_mut().zip(&self.h).rev() {
            *slot = i % h;
            i /= h;
        }
        out
    }

    pub fn size(&self) -> usize {
        self.mult.iter().sum()
    }
}

fn relation_name(n: usize) -> String {
    format!("E{n}")
}

/// Disjoint copies of the cells; `E_n` relates elements whose cells agree
/// in coordinate `n`.
pub fn build_cross_cut(spec: &CrossCutSpec) -> Result<FinStructure> {
    let size = spec.size();
    if size > CROSS_CUT_GUARD {
        return Err(Error::Guard {
            what: "cross-cut structure size",
            value: size,
            limit: CROSS_CUT_GUARD,
        });
    }
    let cells: Vec<Vec<usize>> = spec
        .mult
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| std::iter::repeat_n(spec.cell(i), m))
        .collect();
    let vocab = Vocabulary {
        relations: (0..spec.h.len())
            .map(|n| RelSym {
                name: relation_name(n),
                arity: 2,
                functional: false,
            })
            .collect(),
        ..Default::default()
    };
    let relations = (0..spec.h.len())
        .map(|n| tuples::all(size, 2).filter(|t| cells[t[0]][n] == cells[t[1]][n]).collect())
        .collect();
    let m = FinStructure::new(vocab, size, relations, vec![], vec![])?;
    for (subset, count) in cross_cut_class_counts(&m)? {
        let expected: usize = subset.iter().map(|&n| spec.h[n]).product();
        if count != expected {
            return Err(Error::Corrupt(format!("E_{subset:?} has {count} classes, expected {expected}")));
        }
    }
    Ok(m)
}

/// For every binary relation, the least element related to each point.
/// Fails unless each relation is an equivalence relation.
fn class_reps(m: &FinStructure) -> Result<Vec<Vec<usize>>> {
    m.vocab
        .relations
        .iter()
        .enumerate()
        .map(|(r, sym)| {
            if sym.arity != 2 {
                return Err(Error::Invalid(format!("relation `{}` is not binary", sym.name)));
            }
            let rel = &m.relations[r];
            let holds = |x: usize, y: usize| rel.contains(&vec![x, y]);
            let equivalence = (0..m.size).all(|x| holds(x, x))
                && rel.iter().all(|t| holds(t[1], t[0]))
                && rel
                    .iter()
                    .all(|t| (0..m.size).all(|z| !holds(t[1], z) || holds(t[0], z)));
            if !equivalence {
                return Err(Error::Invalid(format!("relation `{}` is not an equivalence relation", sym.name)));
            }
            Ok((0..m.size).map(|x| (0..m.size).find(|&y| holds(x, y)).unwrap()).collect())
        })
        .collect()
}

/// The number of classes of `E_F = ⋀_{n∈F} E_n` for every nonempty set `F`
/// of relation indices.
pub fn cross_cut_class_counts(m: &FinStructure) -> Result<Vec<(Vec<usize>, usize)>> {
    let reps = class_reps(m)?;
    let n = reps.len();
    Ok((1..1usize << n)
        .map(|mask| {
            let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let classes: BTreeSet<Vec<usize>> =
                (0..m.size).map(|x| subset.iter().map(|&i| reps[i][x]).collect()).collect();
            (subset, classes.len())
        })
        .collect())
}

/// Classes of the conjunction of all relations, each sorted, ordered by
/// least element.
pub fn e_infinity_classes(m: &FinStructure) -> Result<Vec<Vec<usize>>> {
    let reps = class_reps(m)?;
    let mut classes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for x in 0..m.size {
        classes.entry(reps.iter().map(|r| r[x]).collect()).or_default().push(x);
    }
    let mut out: Vec<Vec<usize>> = classes.into_values().collect();
    out.sort();
    Ok(out)
}

/// The quotient by the intersection of all relations, with the relations
/// induced and a unary predicate `U{m}` on the classes of size `m`.
pub fn quotient_coloring(m: &FinStructure) -> Result<FinStructure> {
    let reps = class_reps(m)?;
    for (i, sym) in m.vocab.relations.iter().enumerate() {
        if sym.name != relation_name(i) {
            return Err(Error::Invalid(format!("relation `{}` should be named {}", sym.name, relation_name(i))));
        }
    }
    let h: Vec<usize> = reps.iter().map(|r| r.iter().collect::<BTreeSet<_>>().len()).collect();
    for (subset, count) in cross_cut_class_counts(m)? {
        if count != subset.iter().map(|&n| h[n]).product::<usize>() {
            return Err(Error::Invalid(format!("relations {subset:?} do not cross-cut")));
        }
    }
    let classes = e_infinity_classes(m)?;
    let sizes: BTreeSet<usize> = classes.iter().map(Vec::len).collect();
    let mut vocab = m.vocab.clone();
    for s in &sizes {
        vocab.relations.push(RelSym {
            name: format!("U{s}"),
            arity: 1,
            functional: false,
        });
    }
    let q = classes.len();
    let mut relations: Vec<BTreeSet<Vec<usize>>> = (0..reps.len())
        .map(|r| tuples::all(q, 2).filter(|t| reps[r][classes[t[0]][0]] == reps[r][classes[t[1]][0]]).collect())
        .collect();
    for s in &sizes {
        relations.push((0..q).filter(|&c| classes[c].len() == *s).map(|c| vec![c]).collect());
    }
    FinStructure::new(vocab, q, relations, vec![], vec![])
}

/// An isomorphism `a → b`, found by extending partial isomorphisms.
pub fn structure_isomorphism(a: &FinStructure, b: &FinStructure) -> Option<Vec<usize>> {
    if a.vocab != b.vocab || a.size != b.size {
        return None;
    }
    fn rec(a: &FinStructure, b: &FinStructure, image: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let i = image.len();
        if i == a.size {
            return true;
        }
        let domain: Vec<usize> = (0..=i).collect();
        for y in 0..b.size {
            if used[y] {
                continue;
            }
            image.push(y);
            if qf_type(a, &domain) == qf_type(b, image) {
                used[y] = true;
                if rec(a, b, image, used) {
                    return true;
                }
                used[y] = false;
            }
            image.pop();
        }
        false
    }
    let mut image = Vec::with_capacity(a.size);
    let mut used = vec![false; b.size];
    rec(a, b, &mut image, &mut used).then_some(image)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExponentReport {
    pub h: Vec<usize>,
    pub order: usize,
    pub exponent: u64,
    pub k: usize,
    pub k_factorial: u64,
    pub exponent_divides: bool,
    /// The least prime above `k`.
    pub prime: usize,
    /// Whether the cyclic group of that prime order divides the group.
    pub cyclic_divides: bool,
    /// How many elements have each order.
    pub element_orders: BTreeMap<u64, usize>,
}

fn least_prime_above(k: usize) -> usize {
    (k + 1..).find(|&q| (2..q).all(|d| q % d != 0)).expect("primes are unbounded")
}

/// Measures the automorphism group of an atomic cross-cut structure and
/// checks that its exponent divides `K!` for `K = max h(n)`.
pub fn exponent_experiment(spec: &CrossCutSpec) -> Result<ExponentReport> {
    if !spec.is_atomic() {
        return Err(Error::Invalid("exponent experiment needs every multiplicity equal to 1".into()));
    }
    let m = build_cross_cut(spec)?;
    let aut = automorphism_group_guarded(&m, CROSS_CUT_GUARD)?;
    let e = exponent(&aut);
    let k = *spec.h.iter().max().expect("nonempty");
    let k_factorial = tuples::factorial(k as u64);
    let prime = least_prime_above(k);
    let cycle = Perm::new((0..prime).map(|i| (i + 1) % prime).collect())?;
    let cyclic = generate(&[cycle], prime)?;
    let mut element_orders = BTreeMap::new();
    for g in &aut.elements {
        *element_orders.entry(g.order()).or_default() += 1;
    }
    Ok(ExponentReport {
        h: spec.h.clone(),
        order: aut.order(),
        exponent: e,
        k,
        k_factorial,
        exponent_divides: k_factorial.is_multiple_of(e),
        prime,
        cyclic_divides: divides_check(&aut, &cyclic)?.is_some(),
        element_orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::automorphism_group_brute;

    #[test]
    fn build_examples() {
        let m = build_cross_cut(&CrossCutSpec::atomic(vec![2, 2]).unwrap()).unwrap();
        assert_eq!(m.size, 4);
        assert_eq!(automorphism_group_brute(&m).unwrap().order(), 4);
        let m = build_cross_cut(&CrossCutSpec::atomic(vec![2, 3]).unwrap()).unwrap();
        let brute = automorphism_group_brute(&m).unwrap();
        assert_eq!(brute.order(), 12);
        assert_eq!(exponent(&brute), 6);
        let m = build_cross_cut(&CrossCutSpec::new(vec![2, 2], vec![1, 1, 1, 2]).unwrap()).unwrap();
        assert_eq!(m.size, 5);
        let mut sizes: Vec<usize> = e_infinity_classes(&m).unwrap().iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 1, 2]);
    }

    #[test]
    fn exponent_examples() {
        let r = exponent_experiment(&CrossCutSpec::atomic(vec![2, 2]).unwrap()).unwrap();
        assert_eq!((r.exponent, r.k_factorial, r.exponent_divides), (2, 2, true));
        assert_eq!(r.prime, 3);
        assert!(!r.cyclic_divides);
        let r = exponent_experiment(&CrossCutSpec::atomic(vec![2, 3]).unwrap()).unwrap();
        assert_eq!((r.order, r.exponent, r.k_factorial), (12, 6, 6));
        assert!(exponent_experiment(&CrossCutSpec::new(vec![2, 2], vec![1, 1, 1, 2]).unwrap()).is_err());
    }

    #[test]
    fn quotient_examples() {
        let m = build_cross_cut(&CrossCutSpec::atomic(vec![2, 2]).unwrap()).unwrap();
        let q = quotient_coloring(&m).unwrap();
        assert_eq!(q.size, 4);
        assert_eq!(q.vocab.relations.last().unwrap().name, "U1");

        let a = build_cross_cut(&CrossCutSpec::new(vec![2, 2], vec![1, 1, 1, 2]).unwrap()).unwrap();
        let b = build_cross_cut(&CrossCutSpec::new(vec![2, 2], vec![1, 1, 2, 1]).unwrap()).unwrap();
        let (qa, qb) = (quotient_coloring(&a).unwrap(), quotient_coloring(&b).unwrap());
        assert!(structure_isomorphism(&a, &b).is_some());
        assert!(structure_isomorphism(&qa, &qb).is_some());

        let c = build_cross_cut(&CrossCutSpec::new(vec![2, 2], vec![2, 1, 1, 2]).unwrap()).unwrap();
        let d = build_cross_cut(&CrossCutSpec::new(vec![2, 2], vec![2, 2, 1, 1]).unwrap()).unwrap();
        assert!(structure_isomorphism(&c, &d).is_none());
        assert!(structure_isomorphism(&quotient_coloring(&c).unwrap(), &quotient_coloring(&d).unwrap()).is_none());

        let path = FinStructure::relational(3, &[("E0", 2, &[&[0, 1]])]).unwrap();
        assert!(quotient_coloring(&path).is_err());
    }
}
