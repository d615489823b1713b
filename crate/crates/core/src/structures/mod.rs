//! Finite vocabularies and structures, quantifier-free diagrams, formulas
//! and the structure file format.

mod diagram;
mod formula;
mod parse;

pub use diagram::{qf_type, QfDiagram, Truth};
pub use formula::{eval_formula, Formula};
pub use parse::{parse_json, parse_structure, parse_structure_path, serialize_json, serialize_structure};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelSym {
    pub name: String,
    pub arity: usize,
    /// Set on graph relations produced by [`relationalize`]; the flat axiom
    /// checker tests totality and functionality for these.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub functional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FunSym {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    #[serde(default)]
    pub relations: Vec<RelSym>,
    #[serde(default)]
    pub constants: Vec<String>,
    #[serde(default)]
    pub functions: Vec<FunSym>,
}

impl Vocabulary {
    pub fn relational(rels: &[(&str, usize)]) -> Self {
        Vocabulary {
            relations: rels
                .iter()
                .map(|(n, a)| RelSym {
                    name: n.to_string(),
                    arity: *a,
                    functional: false,
                })
                .collect(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let names = self
            .relations
            .iter()
            .map(|r| (&r.name, Some(r.arity)))
            .chain(self.constants.iter().map(|c| (c, None)))
            .chain(self.functions.iter().map(|f| (&f.name, Some(f.arity))));
        for (name, arity) in names {
            if !seen.insert(name.clone()) {
                return Err(Error::Semantic(format!("duplicate symbol `{name}`")));
            }
            if arity == Some(0) {
                return Err(Error::Semantic(format!("symbol `{name}` has arity 0")));
            }
        }
        Ok(())
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    pub fn rel_arities(&self) -> Vec<usize> {
        self.relations.iter().map(|r| r.arity).collect()
    }

    pub fn is_relational(&self) -> bool {
        self.functions.is_empty()
    }
}

/// A finite structure with universe `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinStructure {
    pub vocab: Vocabulary,
    pub size: usize,
    pub relations: Vec<BTreeSet<Vec<usize>>>,
    pub constants: Vec<usize>,
    pub functions: Vec<BTreeMap<Vec<usize>, usize>>,
}

impl FinStructure {
    /// A structure over the empty vocabulary.
    pub fn pure_set(size: usize) -> Self {
        FinStructure {
            vocab: Vocabulary::default(),
            size,
            relations: vec![],
            constants: vec![],
            functions: vec![],
        }
    }

    pub fn new(
        vocab: Vocabulary,
        size: usize,
        relations: Vec<BTreeSet<Vec<usize>>>,
        constants: Vec<usize>,
        functions: Vec<BTreeMap<Vec<usize>, usize>>,
    ) -> Result<Self> {
        let s = FinStructure {
            vocab,
            size,
            relations,
            constants,
            functions,
        };
        s.validate()?;
        Ok(s)
    }

    /// Relational structure from `(name, arity, tuples)` triples.
    pub fn relational(size: usize, rels: &[(&str, usize, &[&[usize]])]) -> Result<Self> {
        let vocab = Vocabulary::relational(&rels.iter().map(|(n, a, _)| (*n, *a)).collect::<Vec<_>>());
        let relations = rels
            .iter()
            .map(|(_, _, ts)| ts.iter().map(|t| t.to_vec()).collect())
            .collect();
        FinStructure::new(vocab, size, relations, vec![], vec![])
    }

    pub fn validate(&self) -> Result<()> {
        self.vocab.validate()?;
        if self.size == 0 {
            return Err(Error::Semantic("universe must be non-empty".into()));
        }
        if self.relations.len() != self.vocab.relations.len()
            || self.constants.len() != self.vocab.constants.len()
            || self.functions.len() != self.vocab.functions.len()
        {
            return Err(Error::Semantic("interpretation does not match vocabulary".into()));
        }
        for (sym, tuples) in self.vocab.relations.iter().zip(&self.relations) {
            for t in tuples {
                if t.len() != sym.arity {
                    return Err(Error::Semantic(format!(
                        "tuple {t:?} of `{}` has length {}, expected {}",
                        sym.name,
                        t.len(),
                        sym.arity
                    )));
                }
                if let Some(&bad) = t.iter().find(|&&x| x >= self.size) {
                    return Err(Error::Semantic(format!(
                        "index {bad} out of range in `{}` (size {})",
                        sym.name, self.size
                    )));
                }
            }
        }
        for (name, &c) in self.vocab.constants.iter().zip(&self.constants) {
            if c >= self.size {
                return Err(Error::Semantic(format!(
                    "constant `{name}` = {c} out of range (size {})",
                    self.size
                )));
            }
        }
        for (sym, table) in self.vocab.functions.iter().zip(&self.functions) {
            for (args, &v) in table {
                if args.len() != sym.arity || args.iter().chain([&v]).any(|&x| x >= self.size) {
                    return Err(Error::Semantic(format!(
                        "bad entry {args:?} -> {v} in function `{}`",
                        sym.name
                    )));
                }
            }
            let total = crate::tuples::count(self.size, sym.arity);
            if table.len() != total {
                return Err(Error::Semantic(format!(
                    "function `{}` is not total ({} of {total} entries)",
                    sym.name,
                    table.len()
                )));
            }
        }
        Ok(())
    }

    pub fn holds(&self, rel: usize, tuple: &[usize]) -> bool {
        self.relations[rel].contains(tuple)
    }

    /// The image of `self` under the bijection `perm` (element `i` becomes
    /// `perm[i]`).
    pub fn relabel(&self, perm: &[usize]) -> FinStructure {
        let map = |t: &Vec<usize>| t.iter().map(|&x| perm[x]).collect::<Vec<_>>();
        FinStructure {
            vocab: self.vocab.clone(),
            size: self.size,
            relations: self.relations.iter().map(|r| r.iter().map(map).collect()).collect(),
            constants: self.constants.iter().map(|&c| perm[c]).collect(),
            functions: self
                .functions
                .iter()
                .map(|f| f.iter().map(|(a, &v)| (map(a), perm[v])).collect())
                .collect(),
        }
    }

    /// Whether the bijection `perm` is an isomorphism from `self` onto
    /// `other`. Vocabularies must agree.
    pub fn is_isomorphism(&self, other: &FinStructure, perm: &[usize]) -> bool {
        self.vocab == other.vocab && self.size == other.size && &self.relabel(perm) == other
    }
}

/// An injective map `k -> n`, the index pattern of a subsequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubseqMap {
    pub n: usize,
    pub values: Vec<usize>,
}

impl SubseqMap {
    pub fn new(values: Vec<usize>, n: usize) -> Result<Self> {
        if values.len() > n
            || values.iter().any(|&v| v >= n)
            || !crate::tuples::is_injective(&values)
        {
            return Err(Error::Invalid(format!("{values:?} is not an injection into {n}")));
        }
        Ok(SubseqMap { n, values })
    }

    pub fn identity(n: usize) -> Self {
        SubseqMap {
            n,
            values: (0..n).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// `self ∘ inner`, where `inner: j -> k`.
    pub fn compose(&self, inner: &SubseqMap) -> Result<SubseqMap> {
        if inner.n != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                found: inner.n,
            });
        }
        Ok(SubseqMap {
            n: self.n,
            values: crate::tuples::compose(&self.values, &inner.values),
        })
    }
}

/// `(a_{f(0)}, …, a_{f(k-1)})`.
pub fn subsequence<T: Clone>(tuple: &[T], f: &SubseqMap) -> Result<Vec<T>> {
    if tuple.len() != f.n {
        return Err(Error::LengthMismatch {
            expected: f.n,
            found: tuple.len(),
        });
    }
    Ok(f.values.iter().map(|&i| tuple[i].clone()).collect())
}

/// Replace every function symbol by its graph relation. The graph of a
/// `k`-ary function is a `(k+1)`-ary relation named after the function and
/// flagged as functional.
pub fn relationalize(m: &FinStructure) -> FinStructure {
    let mut vocab = m.vocab.clone();
    let mut relations = m.relations.clone();
    for (sym, table) in m.vocab.functions.iter().zip(&m.functions) {
        vocab.relations.push(RelSym {
            name: sym.name.clone(),
            arity: sym.arity + 1,
            functional: true,
        });
        relations.push(
            table
                .iter()
                .map(|(args, &v)| {
                    let mut t = args.clone();
                    t.push(v);
                    t
                })
                .collect(),
        );
    }
    vocab.functions.clear();
    FinStructure {
        vocab,
        size: m.size,
        relations,
        constants: m.constants.clone(),
        functions: vec![],
    }
}
