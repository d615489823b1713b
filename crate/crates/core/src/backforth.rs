//! Truncated sharp back-and-forth systems on finite structures.
//!
//! A [`TruncatedSystem`] stores, for every arity `k ≤ n_max`, a partition of
//! `M^k` as a class id per tuple. Class ids are canonical: classes are
//! numbered in order of their lexicographically least member.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::structures::{qf_type, FinStructure, QfDiagram};
use crate::tuples;
use crate::{Error, Result};

/// Largest universe for which `F∞` and the orbit oracle are computed.
pub const SIZE_GUARD: usize = 8;

/// A set of tuple pairs `(ā, b̄)` of equal length.
pub type PairSet = BTreeSet<(Vec<usize>, Vec<usize>)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruncatedSystem {
    pub size: usize,
    pub n_max: usize,
    /// `classes[k][code(ā)]` is the class id of `ā ∈ M^k`.
    pub classes: Vec<Vec<usize>>,
}

impl TruncatedSystem {
    /// Builds a system from arbitrary per-arity labels, renumbering classes
    /// canonically.
    pub fn from_labels<L: Eq + std::hash::Hash>(size: usize, labels: Vec<Vec<L>>) -> Self {
        let n_max = labels.len() - 1;
        let classes = labels
            .into_iter()
            .map(|level| {
                let mut ids = HashMap::new();
                level
                    .into_iter()
                    .map(|l| {
                        let next = ids.len();
                        *ids.entry(l).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        TruncatedSystem { size, n_max, classes }
    }

    /// The system whose classes are single tuples.
    pub fn discrete(size: usize, n_max: usize) -> Self {
        let labels = (0..=n_max).map(|k| (0..tuples::count(size, k)).collect()).collect();
        TruncatedSystem::from_labels(size, labels)
    }

    pub fn class_of(&self, tuple: &[usize]) -> usize {
        self.classes[tuple.len()][tuples::encode(tuple, self.size)]
    }

    pub fn class_count(&self, k: usize) -> usize {
        self.classes[k].iter().max().map_or(0, |m| m + 1)
    }

    pub fn related(&self, a: &[usize], b: &[usize]) -> bool {
        a.len() == b.len() && self.class_of(a) == self.class_of(b)
    }

    /// Members of each class of arity `k`, in lexicographic order.
    pub fn members(&self, k: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = vec![Vec::new(); self.class_count(k)];
        for (code, &c) in self.classes[k].iter().enumerate() {
            out[c].push(tuples::decode(code, self.size, k));
        }
        out
    }

    /// Every class of `self` lies inside a class of `other`.
    pub fn refines(&self, other: &TruncatedSystem) -> bool {
        self.size == other.size
            && self.n_max <= other.n_max
            && (0..=self.n_max).all(|k| {
                let mut image = HashMap::new();
                self.classes[k]
                    .iter()
                    .zip(&other.classes[k])
                    .all(|(a, b)| *image.entry(a).or_insert(b) == b)
            })
    }

    /// Restriction to arities `≤ n_max`.
    pub fn truncate(&self, n_max: usize) -> TruncatedSystem {
        TruncatedSystem {
            size: self.size,
            n_max,
            classes: self.classes[..=n_max].to_vec(),
        }
    }

    pub fn to_pairs(&self) -> PairSet {
        let mut out = PairSet::new();
        for k in 0..=self.n_max {
            for class in self.members(k) {
                for a in &class {
                    for b in &class {
                        out.insert((a.clone(), b.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let arities: Vec<BTreeMap<String, usize>> = (0..=self.n_max)
            .map(|k| {
                self.classes[k]
                    .iter()
                    .enumerate()
                    .map(|(code, &c)| (tuple_key(&tuples::decode(code, self.size, k)), c))
                    .collect()
            })
            .collect();
        serde_json::to_value(SystemJson {
            size: self.size,
            n_max: self.n_max,
            arities,
        })
        .expect("system serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let js: SystemJson =
            serde_json::from_value(value.clone()).map_err(|e| Error::InvalidSystem(e.to_string()))?;
        let mut labels = Vec::new();
        for (k, level) in js.arities.iter().enumerate() {
            let total = tuples::count(js.size, k);
            let mut row = vec![None; total];
            for (key, &c) in level {
                let t = parse_tuple_key(key)?;
                if t.len() != k || t.iter().any(|&x| x >= js.size) {
                    return Err(Error::InvalidSystem(format!("bad tuple `{key}` at arity {k}")));
                }
                row[tuples::encode(&t, js.size)] = Some(c);
            }
            if row.iter().any(Option::is_none) {
                return Err(Error::InvalidSystem(format!("arity {k} does not cover every tuple")));
            }
            labels.push(row.into_iter().map(Option::unwrap).collect::<Vec<_>>());
        }
        if labels.len() != js.n_max + 1 {
            return Err(Error::InvalidSystem("arity count does not match n_max".into()));
        }
        Ok(TruncatedSystem::from_labels(js.size, labels))
    }
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    size: usize,
    n_max: usize,
    arities: Vec<BTreeMap<String, usize>>,
}

pub fn tuple_key(t: &[usize]) -> String {
    t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_tuple_key(key: &str) -> Result<Vec<usize>> {
    if key.is_empty() {
        return Ok(vec![]);
    }
    key.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::InvalidSystem(format!("bad tuple key `{key}`"))))
        .collect()
}

/// The first violated clause of sharpness, with witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SharpViolation {
    Carrier(String),
    QfElementary { a: Vec<usize>, b: Vec<usize> },
    DownwardClosure { a: Vec<usize>, b: Vec<usize>, f: Vec<usize> },
    Extension { a: Vec<usize>, b: Vec<usize>, c: usize, back: bool },
    NotEquivalence { a: Vec<usize>, b: Vec<usize> },
    Empty,
}

impl std::fmt::Display for SharpViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SharpViolation::Carrier(s) => write!(f, "carrier mismatch: {s}"),
            SharpViolation::QfElementary { a, b } => write!(f, "q.f.-elementarity fails on {a:?} ~ {b:?}"),
            SharpViolation::DownwardClosure { a, b, f: m } => {
                write!(f, "downward closure fails on {a:?} ~ {b:?} along {m:?}")
            }
            SharpViolation::Extension { a, b, c, back } => {
                let side = if *back { "back" } else { "forth" };
                write!(f, "{side} extension fails on {a:?} ~ {b:?} at {c}")
            }
            SharpViolation::NotEquivalence { a, b } => write!(f, "not an equivalence relation at {a:?}, {b:?}"),
            SharpViolation::Empty => write!(f, "the system is empty"),
        }
    }
}

/// Checks q.f.-elementarity, downward closure and (below `n_max`) the
/// extension property. Partitions make the equivalence clauses structural.
pub fn validate_sharp(m: &FinStructure, s: &TruncatedSystem) -> Result<(), SharpViolation> {
    if s.size != m.size || s.classes.len() != s.n_max + 1 {
        return Err(SharpViolation::Carrier(format!("system over {} points, structure has {}", s.size, m.size)));
    }
    for k in 0..=s.n_max {
        if s.classes[k].len() != tuples::count(m.size, k) {
            return Err(SharpViolation::Carrier(format!("arity {k} has wrong tuple count")));
        }
    }
    let groups: Vec<_> = (0..=s.n_max).map(|k| s.members(k)).collect();
    for class in groups.iter().flatten() {
        let rep = &class[0];
        let d = qf_type(m, rep);
        if let Some(b) = class.iter().find(|b| qf_type(m, b) != d) {
            return Err(SharpViolation::QfElementary { a: rep.clone(), b: b.clone() });
        }
    }
    for (n, level) in groups.iter().enumerate() {
        let maps: Vec<Vec<usize>> = (0..=n).flat_map(|k| tuples::injections(k, n)).collect();
        for class in level {
            let rep = &class[0];
            for f in &maps {
                let want = s.class_of(&tuples::compose(rep, f));
                if let Some(b) = class.iter().find(|b| s.class_of(&tuples::compose(b, f)) != want) {
                    return Err(SharpViolation::DownwardClosure {
                        a: rep.clone(),
                        b: b.clone(),
                        f: f.clone(),
                    });
                }
            }
        }
    }
    for level in groups.iter().take(s.n_max) {
        for class in level {
            let rep = &class[0];
            let ext = extension_classes(s, rep);
            for b in class {
                if let Err((c, back)) = match_extensions(s, rep, b, &ext) {
                    return Err(SharpViolation::Extension { a: rep.clone(), b: b.clone(), c, back });
                }
            }
        }
    }
    Ok(())
}

fn extension_classes(s: &TruncatedSystem, a: &[usize]) -> Vec<usize> {
    let mut t = a.to_vec();
    t.push(0);
    (0..s.size)
        .map(|c| {
            *t.last_mut().unwrap() = c;
            s.class_of(&t)
        })
        .collect()
}

/// Forth: every `āc` class is met by some `b̄d`; back: the converse. On
/// failure returns the unmatched point and the direction.
fn match_extensions(s: &TruncatedSystem, a: &[usize], b: &[usize], a_ext: &[usize]) -> Result<(), (usize, bool)> {
    let b_ext = extension_classes(s, b);
    let a_set: BTreeSet<_> = a_ext.iter().collect();
    let b_set: BTreeSet<_> = b_ext.iter().collect();
    let _ = a;
    if let Some(c) = (0..s.size).find(|&c| !b_set.contains(&a_ext[c])) {
        return Err((c, false));
    }
    if let Some(d) = (0..s.size).find(|&d| !a_set.contains(&b_ext[d])) {
        return Err((d, true));
    }
    Ok(())
}

/// Checks that a raw pair set is a back-and-forth system truncated at
/// `n_max`: non-empty, q.f.-elementary, extension property below `n_max`.
pub fn validate_back_and_forth(m: &FinStructure, f: &PairSet, n_max: usize) -> Result<(), SharpViolation> {
    if f.is_empty() {
        return Err(SharpViolation::Empty);
    }
    for (a, b) in f {
        if a.len() != b.len() || a.len() > n_max || a.iter().chain(b).any(|&x| x >= m.size) {
            return Err(SharpViolation::Carrier(format!("bad pair {a:?}, {b:?}")));
        }
        if qf_type(m, a) != qf_type(m, b) {
            return Err(SharpViolation::QfElementary { a: a.clone(), b: b.clone() });
        }
        if a.len() < n_max {
            let ext = |x: &[usize], c: usize| [x, &[c]].concat();
            for c in 0..m.size {
                if !(0..m.size).any(|d| f.contains(&(ext(a, c), ext(b, d)))) {
                    return Err(SharpViolation::Extension { a: a.clone(), b: b.clone(), c, back: false });
                }
                if !(0..m.size).any(|d| f.contains(&(ext(a, d), ext(b, c)))) {
                    return Err(SharpViolation::Extension { a: a.clone(), b: b.clone(), c, back: true });
                }
            }
        }
    }
    Ok(())
}

/// Closes a pair set under all subsequence maps.
pub fn downward_closure(f: &PairSet) -> Result<PairSet> {
    let mut out = PairSet::new();
    for (a, b) in f {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        let n = a.len();
        for k in 0..=n {
            for g in tuples::injections(k, n) {
                out.insert((tuples::compose(a, &g), tuples::compose(b, &g)));
            }
        }
    }
    Ok(out)
}

/// The smallest sharp system containing `f`: the arity-wise reflexive,
/// symmetric and transitive closure of its downward closure.
pub fn sharp_closure(f: &PairSet, m: &FinStructure, n_max: usize) -> Result<TruncatedSystem> {
    validate_back_and_forth(m, f, n_max).map_err(|v| Error::InvalidSystem(v.to_string()))?;
    let closed = downward_closure(f)?;
    let labels = (0..=n_max)
        .map(|k| {
            let total = tuples::count(m.size, k);
            let mut uf = UnionFind::new(total);
            for (a, b) in closed.iter().filter(|(a, _)| a.len() == k) {
                uf.union(tuples::encode(a, m.size), tuples::encode(b, m.size));
            }
            (0..total).map(|i| uf.find(i)).collect::<Vec<_>>()
        })
        .collect();
    let s = TruncatedSystem::from_labels(m.size, labels);
    // The closure of a back-and-forth system should again be one; anything
    // else is reported rather than returned.
    validate_sharp(m, &s).map_err(|v| Error::InvalidSystem(format!("closure is not sharp: {v}")))?;
    Ok(s)
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Splits a tuple into its equality pattern and its core (distinct values in
/// order of first occurrence).
pub fn pattern_and_core(t: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut core: Vec<usize> = Vec::new();
    let pattern = t
        .iter()
        .map(|x| match core.iter().position(|y| y == x) {
            Some(i) => i,
            None => {
                core.push(*x);
                core.len() - 1
            }
        })
        .collect();
    (pattern, core)
}

/// The largest sharp system, truncated at `n_max`.
///
/// Refinement runs on injective tuples of every length up to `|M|`, from the
/// top down: an injective `|M|`-tuple is classified by its diagram alone, and
/// a shorter one by its diagram together with the set of classes of its
/// one-point injective extensions. On a finite structure this is exactly
/// back-and-forth equivalence, since the opponent can exhaust the universe.
/// Arbitrary tuples are then classified by equality pattern and core.
pub fn compute_f_infinity(m: &FinStructure, n_max: usize) -> Result<TruncatedSystem> {
    if m.size > SIZE_GUARD {
        return Err(Error::Guard {
            what: "structure size for F∞",
            value: m.size,
            limit: SIZE_GUARD,
        });
    }
    let size = m.size;
    let mut color: Vec<HashMap<Vec<usize>, usize>> = vec![HashMap::new(); size + 1];
    for k in (0..=size).rev() {
        let mut intern: HashMap<(QfDiagram, Vec<usize>), usize> = HashMap::new();
        let mut level = HashMap::new();
        for t in tuples::injections(k, size) {
            let ext: Vec<usize> = if k < size {
                let above = &color[k + 1];
                let set: BTreeSet<usize> = (0..size)
                    .filter(|c| !t.contains(c))
                    .map(|c| above[&[t.as_slice(), &[c]].concat()])
                    .collect();
                set.into_iter().collect()
            } else {
                Vec::new()
            };
            let key = (qf_type(m, &t), ext);
            let next = intern.len();
            let id = *intern.entry(key).or_insert(next);
            level.insert(t, id);
        }
        color[k] = level;
    }
    let labels = (0..=n_max)
        .map(|k| {
            tuples::all(size, k)
                .map(|t| {
                    let (pattern, core) = pattern_and_core(&t);
                    let c = color[core.len()][&core];
                    (pattern, c)
                })
                .collect()
        })
        .collect();
    Ok(TruncatedSystem::from_labels(size, labels))
}

/// Diagonal `Aut(M)`-orbit equivalence, with `Aut(M)` found by enumerating
/// every permutation.
pub fn orbit_oracle(m: &FinStructure, n_max: usize) -> Result<TruncatedSystem> {
    if m.size > SIZE_GUARD {
        return Err(Error::Guard {
            what: "structure size for orbit oracle",
            value: m.size,
            limit: SIZE_GUARD,
        });
    }
    let auts: Vec<Vec<usize>> = tuples::permutations(m.size)
        .into_iter()
        .filter(|p| m.relabel(p) == *m)
        .collect();
    let labels = (0..=n_max)
        .map(|k| {
            tuples::all(m.size, k)
                .map(|t| {
                    auts.iter()
                        .map(|p| tuples::encode(&tuples::compose(p, &t), m.size))
                        .min()
                        .unwrap()
                })
                .collect()
        })
        .collect();
    Ok(TruncatedSystem::from_labels(m.size, labels))
}
