//! Flat structures: the universe is the disjoint union of the `U_n`, each
//! point carries a complete quantifier-free diagram, and projection
//! functions `P^f` connect the levels.

mod axioms;
mod blowup;
mod refine;
mod translate;

pub use axioms::{check_flat_axioms, FlatFailure, FlatReport};
pub use blowup::{blowup, gen_projection};
pub use refine::{
    color_refinement, flat_isomorphism, flat_isomorphisms, hausdorff_check, joint_refinement, HausdorffReport,
};
pub use translate::{eval_flat, translate, FlatFormula};
pub(crate) use refine::is_isomorphism;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::backforth::{parse_tuple_key, tuple_key, validate_sharp, TruncatedSystem};
use crate::structures::{qf_type, FinStructure, QfDiagram, Vocabulary};
use crate::tuples::{self, Catalogs};
use crate::{Error, Result};

/// A point of a flat structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlatElement {
    pub arity: usize,
    pub diagram: QfDiagram,
    /// Indexed by the slot of the injection in the catalog for `arity`.
    /// `None` marks a missing projection edge.
    pub proj: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct FlatStructure {
    pub n_max: usize,
    pub vocab: Vocabulary,
    pub elements: Vec<FlatElement>,
    catalogs: Arc<Catalogs>,
}

impl PartialEq for FlatStructure {
    fn eq(&self, other: &Self) -> bool {
        self.n_max == other.n_max && self.vocab == other.vocab && self.elements == other.elements
    }
}

impl Eq for FlatStructure {}

/// Shared injection catalogs, one set per arity bound.
pub(crate) fn catalogs(n_max: usize) -> Arc<Catalogs> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Catalogs>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().expect("catalog cache poisoned");
    guard
        .entry(n_max)
        .or_insert_with(|| Arc::new(Catalogs::new(n_max)))
        .clone()
}

impl FlatStructure {
    pub fn new(n_max: usize, vocab: Vocabulary, elements: Vec<FlatElement>) -> Self {
        FlatStructure {
            n_max,
            vocab,
            elements,
            catalogs: catalogs(n_max),
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn arity(&self, a: usize) -> usize {
        self.elements[a].arity
    }

    pub fn diagram(&self, a: usize) -> &QfDiagram {
        &self.elements[a].diagram
    }

    pub fn catalog(&self, n: usize) -> &tuples::InjectionCatalog {
        self.catalogs.get(n)
    }

    /// Elements of `U_n`, in index order.
    pub fn level(&self, n: usize) -> Vec<usize> {
        (0..self.len()).filter(|&a| self.arity(a) == n).collect()
    }

    /// Element ids grouped by arity `0..=n_max`.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_max + 1];
        for (a, e) in self.elements.iter().enumerate() {
            if e.arity <= self.n_max {
                out[e.arity].push(a);
            }
        }
        out
    }

    /// `P^f(a)` for an injection `f` into the arity of `a`.
    pub fn project(&self, a: usize, f: &[usize]) -> Option<usize> {
        let e = &self.elements[a];
        if e.arity > self.n_max {
            return None;
        }
        let slot = self.catalog(e.arity).slot(f)?;
        e.proj.get(slot).copied().flatten()
    }

    /// `P^{id_{k,n}}(a)`.
    pub fn prefix(&self, a: usize, k: usize) -> Option<usize> {
        let e = &self.elements[a];
        if e.arity > self.n_max || k > e.arity {
            return None;
        }
        e.proj.get(self.catalog(e.arity).prefix_slot(k)).copied().flatten()
    }

    /// The projection stored at a catalog slot.
    pub fn proj_slot(&self, a: usize, slot: usize) -> Option<usize> {
        self.elements[a].proj.get(slot).copied().flatten()
    }

    pub(crate) fn catalogs(&self) -> &Catalogs {
        &self.catalogs
    }

    /// `a ≤ b`: `a` is the initial-segment projection of `b`.
    pub fn le(&self, a: usize, b: usize) -> bool {
        let k = self.arity(a);
        k <= self.arity(b) && self.prefix(b, k) == Some(a)
    }

    /// The points `w ∈ U_{n+1}` with `P^{id_{n,n+1}}(w) = a`, per element.
    pub fn extension_index(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (w, e) in self.elements.iter().enumerate() {
            if e.arity == 0 {
                continue;
            }
            if let Some(a) = self.prefix(w, e.arity - 1) {
                if a < out.len() {
                    out[a].push(w);
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(id, e)| {
                let cat = self.catalog(e.arity.min(self.n_max));
                ElementJson {
                    id,
                    arity: e.arity,
                    diagram: diagram_string(&e.diagram),
                    projections: e
                        .proj
                        .iter()
                        .enumerate()
                        .filter_map(|(s, p)| p.map(|p| (tuple_key(&cat.maps[s]), p)))
                        .collect(),
                }
            })
            .collect();
        serde_json::to_value(FlatJson {
            n_max: self.n_max,
            vocabulary: self.vocab.clone(),
            elements,
        })
        .expect("flat structure serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let js: FlatJson = serde_json::from_value(value.clone()).map_err(|e| Error::Corrupt(e.to_string()))?;
        js.vocabulary.validate()?;
        if !js.vocabulary.is_relational() {
            return Err(Error::Corrupt("flat structures carry no function symbols".into()));
        }
        let cats = catalogs(js.n_max);
        let rel_arities = js.vocabulary.rel_arities();
        let n_consts = js.vocabulary.constants.len();
        let mut elements = Vec::with_capacity(js.elements.len());
        for (i, e) in js.elements.iter().enumerate() {
            if e.id != i {
                return Err(Error::Corrupt(format!("element ids must be 0..{}, found {} at {i}", js.elements.len(), e.id)));
            }
            if e.arity > js.n_max {
                return Err(Error::Corrupt(format!("element {i} has arity {} > n_max", e.arity)));
            }
            let diagram = parse_diagram(&e.diagram, e.arity, rel_arities.clone(), n_consts)
                .ok_or_else(|| Error::Corrupt(format!("element {i}: malformed diagram")))?;
            let cat = cats.get(e.arity);
            let mut proj = vec![None; cat.len()];
            for (key, &target) in &e.projections {
                let map = parse_tuple_key(key).map_err(|_| Error::Corrupt(format!("element {i}: bad key `{key}`")))?;
                let slot = cat
                    .slot(&map)
                    .ok_or_else(|| Error::Corrupt(format!("element {i}: `{key}` is not an injection into {}", e.arity)))?;
                if target >= js.elements.len() {
                    return Err(Error::Corrupt(format!("element {i}: projection target {target} out of range")));
                }
                proj[slot] = Some(target);
            }
            elements.push(FlatElement {
                arity: e.arity,
                diagram,
                proj,
            });
        }
        Ok(FlatStructure {
            n_max: js.n_max,
            vocab: js.vocabulary,
            elements,
            catalogs: cats,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FlatJson {
    n_max: usize,
    vocabulary: Vocabulary,
    elements: Vec<ElementJson>,
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    id: usize,
    arity: usize,
    /// One character per atom in canonical order: `1` true, `0` false, `b`
    /// both, `-` neither.
    diagram: String,
    projections: BTreeMap<String, usize>,
}

fn diagram_string(d: &QfDiagram) -> String {
    d.bits
        .iter()
        .map(|b| match b {
            1 => '1',
            2 => '0',
            3 => 'b',
            _ => '-',
        })
        .collect()
}

fn parse_diagram(s: &str, arity: usize, rel_arities: Vec<usize>, n_consts: usize) -> Option<QfDiagram> {
    let mut d = QfDiagram::empty(arity, rel_arities, n_consts);
    if s.chars().count() != d.bits.len() {
        return None;
    }
    for (slot, c) in s.chars().enumerate() {
        d.bits[slot] = match c {
            '1' => 1,
            '0' => 2,
            'b' => 3,
            '-' => 0,
            _ => return None,
        };
    }
    Some(d)
}

/// The flattening of `(M, S)`: one point per `E_n`-class for `n ≤ n_max`,
/// carrying the diagram of any representative, with `P^f([ā]) = [ā↾f]`.
///
/// Points are numbered by arity, then by class id.
pub fn flatten(m: &FinStructure, s: &TruncatedSystem) -> Result<FlatStructure> {
    if !m.vocab.is_relational() {
        return Err(Error::Invalid("relationalize function symbols before flattening".into()));
    }
    validate_sharp(m, s).map_err(|v| Error::InvalidSystem(v.to_string()))?;
    let n_max = s.n_max;
    let cats = catalogs(n_max);
    let mut offset = vec![0; n_max + 2];
    for k in 0..=n_max {
        offset[k + 1] = offset[k] + s.class_count(k);
    }
    let mut elements = Vec::with_capacity(offset[n_max + 1]);
    for n in 0..=n_max {
        let mut reps = vec![None; s.class_count(n)];
        for (code, &c) in s.classes[n].iter().enumerate() {
            reps[c].get_or_insert(code);
        }
        let cat = cats.get(n);
        for code in reps.into_iter().map(Option::unwrap) {
            let rep = tuples::decode(code, m.size, n);
            let proj = cat
                .maps
                .iter()
                .map(|f| {
                    let sub = tuples::compose(&rep, f);
                    Some(offset[f.len()] + s.class_of(&sub))
                })
                .collect();
            elements.push(FlatElement {
                arity: n,
                diagram: qf_type(m, &rep),
                proj,
            });
        }
    }
    Ok(FlatStructure {
        n_max,
        vocab: m.vocab.clone(),
        elements,
        catalogs: cats,
    })
}

/// The point of `flatten(m, s)` holding the class of `tuple`.
pub fn element_of(s: &TruncatedSystem, tuple: &[usize]) -> usize {
    (0..tuple.len()).map(|k| s.class_count(k)).sum::<usize>() + s.class_of(tuple)
}
