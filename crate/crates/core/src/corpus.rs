//! The deterministic instance corpus: named small structures, seeded random
//! ones, and the sharp systems coming from subgroups of their automorphism
//! groups.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backforth::TruncatedSystem;
use crate::groups::{automorphism_group, code_of, subgroups, PermGroup};
use crate::reductions::Graph;
use crate::structures::{relationalize, FinStructure, FunSym, Vocabulary};
use crate::Result;

pub const DEFAULT_SEED: u64 = 0;
/// Random structures added to the named ones.
pub const RANDOM_COUNT: usize = 8;

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub structure: FinStructure,
}

fn rel(size: usize, rels: &[(&str, usize, &[&[usize]])]) -> FinStructure {
    FinStructure::relational(size, rels).expect("named structure is valid")
}

fn symmetric(edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    edges.iter().flat_map(|&(a, b)| [vec![a, b], vec![b, a]]).collect()
}

fn graph(size: usize, edges: &[(usize, usize)]) -> FinStructure {
    let e = symmetric(edges);
    let refs: Vec<&[usize]> = e.iter().map(Vec::as_slice).collect();
    rel(size, &[("E", 2, &refs)])
}

/// Hand-picked structures of size at most 4.
pub fn named() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut push = |name: &str, m: FinStructure| {
        out.push(Instance {
            name: name.into(),
            structure: m,
        })
    };
    for n in 1..=4 {
        push(&format!("empty{n}"), FinStructure::pure_set(n));
    }
    push("k2", graph(2, &[(0, 1)]));
    push("p3", graph(3, &[(0, 1), (1, 2)]));
    push("unary-rigid", rel(3, &[("P", 1, &[&[0]]), ("Q", 1, &[&[0], &[1]])]));
    push("dicycle3", rel(3, &[("E", 2, &[&[0, 1], &[1, 2], &[2, 0]])]));
    push("ternary", rel(3, &[("R", 3, &[&[0, 1, 2]])]));
    let mut constant = FinStructure::pure_set(3);
    constant.vocab.constants.push("c".into());
    constant.constants.push(0);
    push("const3", constant);
    let succ = FinStructure::new(
        Vocabulary {
            functions: vec![FunSym {
                name: "s".into(),
                arity: 1,
            }],
            ..Default::default()
        },
        3,
        vec![],
        vec![],
        vec![(0..3).map(|i| (vec![i], (i + 1) % 3)).collect()],
    )
    .expect("successor is total");
    push("succ3", relationalize(&succ));
    push("p4", graph(4, &[(0, 1), (1, 2), (2, 3)]));
    push("star4", graph(4, &[(0, 1), (0, 2), (0, 3)]));
    push("c4", graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
    push("split4", rel(4, &[("P", 1, &[&[0], &[1]])]));
    push(
        "crosscut22",
        rel(
            4,
            &[
                ("E0", 2, &[&[0, 0], &[0, 1], &[1, 0], &[1, 1], &[2, 2], &[2, 3], &[3, 2], &[3, 3]]),
                ("E1", 2, &[&[0, 0], &[0, 2], &[2, 0], &[2, 2], &[1, 1], &[1, 3], &[3, 1], &[3, 3]]),
            ],
        ),
    );
    out
}

/// Random structures with one unary and one binary relation, sizes 2 to 4.
pub fn random(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let size = rng.gen_range(2..=4);
            let unary: Vec<Vec<usize>> = (0..size).filter(|_| rng.gen_bool(0.4)).map(|x| vec![x]).collect();
            let binary: Vec<Vec<usize>> = crate::tuples::all(size, 2).filter(|_| rng.gen_bool(0.3)).collect();
            let u: Vec<&[usize]> = unary.iter().map(Vec::as_slice).collect();
            let b: Vec<&[usize]> = binary.iter().map(Vec::as_slice).collect();
            Instance {
                name: format!("random{i}"),
                structure: rel(size, &[("P", 1, &u), ("E", 2, &b)]),
            }
        })
        .collect()
}

/// Named structures followed by the seeded random ones.
pub fn structures(seed: u64) -> Vec<Instance> {
    let mut out = named();
    out.extend(random(seed, RANDOM_COUNT));
    out
}

/// A sharp system on a corpus structure, obtained from a subgroup of its
/// automorphism group.
#[derive(Debug, Clone)]
pub struct SharpInstance {
    pub name: String,
    pub structure: FinStructure,
    pub subgroup: PermGroup,
    pub system: TruncatedSystem,
}

/// The systems `F(H)` for every subgroup `H ≤ Aut(M)`, truncated at `n_max`.
/// Subgroups with equal truncated codes are listed once.
pub fn sharp_systems(inst: &Instance, n_max: usize) -> Result<Vec<SharpInstance>> {
    let m = &inst.structure;
    let aut = automorphism_group(m)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, h) in subgroups(&aut)?.into_iter().enumerate() {
        let system = code_of(&h.elements, m.size, n_max)
            .to_system()
            .expect("the code of a subgroup is a partition");
        if seen.insert(system.classes.clone()) {
            out.push(SharpInstance {
                name: format!("{}/h{i}", inst.name),
                structure: m.clone(),
                subgroup: h,
                system,
            });
        }
    }
    Ok(out)
}

/// Every `(M, S)` pair of the corpus, with `n_max = |M| + extra`.
pub fn sharp_pairs(seed: u64, extra: usize) -> Result<Vec<SharpInstance>> {
    let mut out = Vec::new();
    for inst in structures(seed) {
        let n = inst.structure.size + extra;
        out.extend(sharp_systems(&inst, n)?);
    }
    Ok(out)
}

/// Every labeled graph on one to three vertices.
pub fn small_graphs() -> Vec<Graph> {
    (1..=3).flat_map(Graph::all).collect()
}

/// Seeded pairs of 4-vertex graphs. Every other pair is a random graph and
/// a random relabeling of it, so both verdicts occur.
pub fn sampled_graph_pairs(seed: u64, count: usize) -> Vec<(Graph, Graph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = Graph::all(4);
    (0..count)
        .map(|i| {
            let g = all.choose(&mut rng).expect("graphs exist").clone();
            let h = if i % 2 == 0 {
                let mut perm: Vec<usize> = (0..4).collect();
                perm.shuffle(&mut rng);
                g.relabel(&perm)
            } else {
                all.choose(&mut rng).expect("graphs exist").clone()
            };
            (g, h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let a = structures(DEFAULT_SEED);
        let b = structures(DEFAULT_SEED);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.structure, y.structure);
        }
        assert!(a.iter().all(|i| i.structure.size <= 4));
        let pairs = sharp_pairs(DEFAULT_SEED, 0).unwrap();
        assert!(pairs.len() <= 200, "{} instances", pairs.len());
        assert_eq!(small_graphs().len(), 11);
        assert_eq!(sampled_graph_pairs(DEFAULT_SEED, 20), sampled_graph_pairs(DEFAULT_SEED, 20));
    }
}
