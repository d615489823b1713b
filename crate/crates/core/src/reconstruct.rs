//! Recovering a structure with a sharp system from a flat structure, the
//! covering maps, round trips, canonical forms and the canonical
//! homomorphism.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::backforth::{compute_f_infinity, pattern_and_core, validate_sharp, TruncatedSystem};
use crate::flat::{check_flat_axioms, element_of, flat_isomorphism, flatten, FlatStructure};
use crate::groups::{sharp_isomorphism, Perm};
use crate::structures::{qf_type, FinStructure, Truth};
use crate::tuples;
use crate::{Error, Result};

/// Largest reconstructed universe handed to brute-force canonical labeling.
pub const CANON_GUARD: usize = 8;

/// Which one-point extension the chain takes when several qualify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ChainOrder {
    #[default]
    Least,
    Greatest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoveringChain {
    /// `a_0 ≤ a_1 ≤ … ≤ a_N`, with `a_i ∈ U_i`.
    pub chain: Vec<usize>,
    pub closed: bool,
}

impl CoveringChain {
    pub fn top(&self) -> usize {
        *self.chain.last().expect("chain starts at U_0")
    }
}

/// Whether the diagram of `w` puts its last variable apart from all others.
fn new_coordinate(b: &FlatStructure, w: usize) -> bool {
    let n = b.arity(w);
    n > 0 && (0..n - 1).all(|i| b.diagram(w).eq(i, n - 1) == Truth::False)
}

fn is_distinct_type(b: &FlatStructure, w: usize) -> bool {
    let n = b.arity(w);
    (0..n).all(|i| (0..i).all(|j| b.diagram(w).eq(i, j) == Truth::False))
}

/// Extends the chain one new coordinate at a time until no extension of the
/// top point adds a new element. The chain then covers every distinct-type
/// point, which is checked before the chain is returned.
pub fn build_covering_chain(b: &FlatStructure, order: ChainOrder) -> Result<CoveringChain> {
    if let Some(f) = check_flat_axioms(b).failure {
        return Err(Error::NotFlat(f.to_string()));
    }
    let ext = b.extension_index();
    let mut chain = vec![b.level(0)[0]];
    loop {
        let top = *chain.last().unwrap();
        let n = b.arity(top);
        if n + 1 > b.n_max {
            return Err(Error::TruncationTooSmall(format!(
                "cannot decide whether the chain closes at arity {n} with n_max = {}",
                b.n_max
            )));
        }
        let next = ext[top].iter().copied().filter(|&w| new_coordinate(b, w));
        let pick = match order {
            ChainOrder::Least => next.min(),
            ChainOrder::Greatest => next.max(),
        };
        match pick {
            Some(w) => chain.push(w),
            None => break,
        }
    }
    let top = *chain.last().unwrap();
    let n = b.arity(top);
    let cat = b.catalog(n);
    let covered: BTreeSet<usize> = (0..cat.len()).filter_map(|s| b.proj_slot(top, s)).collect();
    if let Some(c) = (0..b.len()).find(|&c| is_distinct_type(b, c) && !covered.contains(&c)) {
        return Err(Error::NotFlat(format!("point {c} is not a projection of the chain top {top}")));
    }
    Ok(CoveringChain { chain, closed: true })
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub m: FinStructure,
    pub s: TruncatedSystem,
    /// `cov[n][code(ā)]` is the flat point covering `ā ∈ M^n`.
    pub cov: Vec<Vec<usize>>,
    pub chain: CoveringChain,
}

impl Reconstruction {
    pub fn cov_of(&self, tuple: &[usize]) -> usize {
        self.cov[tuple.len()][tuples::encode(tuple, self.m.size)]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cov: Vec<std::collections::BTreeMap<String, usize>> = self
            .cov
            .iter()
            .enumerate()
            .map(|(k, level)| {
                level
                    .iter()
                    .enumerate()
                    .map(|(code, &e)| (crate::backforth::tuple_key(&tuples::decode(code, self.m.size, k)), e))
                    .collect()
            })
            .collect();
        serde_json::json!({
            "structure": crate::structures::serialize_structure(&self.m),
            "system": self.s.to_json(),
            "cov": cov,
            "chain": self.chain.chain,
        })
    }
}

/// Rebuilds `(M, S)` from `b`: the universe is the set of coordinates of the
/// chain top, relations are read off its diagram, and `S` is the kernel of
/// the covering maps.
pub fn reconstruct(b: &FlatStructure) -> Result<Reconstruction> {
    reconstruct_with(b, ChainOrder::Least)
}

pub fn reconstruct_with(b: &FlatStructure, order: ChainOrder) -> Result<Reconstruction> {
    let chain = build_covering_chain(b, order)?;
    let top = chain.top();
    let size = b.arity(top);
    if size == 0 {
        return Err(Error::NotFlat("the chain never leaves U_0; the universe would be empty".into()));
    }
    let d = b.diagram(top);
    let relations = b
        .vocab
        .relations
        .iter()
        .enumerate()
        .map(|(r, sym)| tuples::all(size, sym.arity).filter(|t| d.rel(r, t) == Truth::True).collect())
        .collect();
    let constants = (0..b.vocab.constants.len())
        .map(|c| {
            (0..size)
                .find(|&i| d.is_const(c, i) == Truth::True)
                .ok_or_else(|| Error::NotFlat(format!("constant `{}` names no coordinate", b.vocab.constants[c])))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = FinStructure::new(b.vocab.clone(), size, relations, constants, vec![])?;

    // Points of each level indexed by (equality pattern, point on the core).
    let mut by_pattern: HashMap<(Vec<usize>, usize), Vec<usize>> = HashMap::new();
    for e in 0..b.len() {
        let reps = b.diagram(e).eq_classes();
        let (pattern, firsts) = pattern_and_core(&reps);
        let core = b
            .project(e, &firsts)
            .ok_or_else(|| Error::NotFlat(format!("point {e} lacks projection {firsts:?}")))?;
        by_pattern.entry((pattern, core)).or_default().push(e);
    }
    let mut cov = Vec::with_capacity(b.n_max + 1);
    for n in 0..=b.n_max {
        let mut level = Vec::with_capacity(tuples::count(size, n));
        for t in tuples::all(size, n) {
            let (pattern, core) = pattern_and_core(&t);
            let core_point = b.project(top, &core).expect("chain top has every projection");
            let hits = by_pattern.get(&(pattern, core_point)).map_or(&[][..], Vec::as_slice);
            match hits {
                [e] => level.push(*e),
                [] => return Err(Error::NotFlat(format!("no point covers {t:?}"))),
                _ => return Err(Error::Corrupt(format!("points {hits:?} all cover {t:?}"))),
            }
        }
        cov.push(level);
    }
    for (n, level) in cov.iter().enumerate() {
        let hit: BTreeSet<usize> = level.iter().copied().collect();
        if let Some(e) = b.level(n).into_iter().find(|e| !hit.contains(e)) {
            return Err(Error::NotFlat(format!("point {e} of U_{n} is not covered")));
        }
        for (code, &e) in level.iter().enumerate() {
            let t = tuples::decode(code, size, n);
            if qf_type(&m, &t) != *b.diagram(e) {
                return Err(Error::NotFlat(format!("diagram of point {e} disagrees with {t:?}")));
            }
        }
    }
    let s = TruncatedSystem::from_labels(size, cov.clone());
    validate_sharp(&m, &s).map_err(|v| Error::NotFlat(format!("reconstructed system is not sharp: {v}")))?;
    Ok(Reconstruction { m, s, cov, chain })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundTrip {
    pub ok: bool,
    /// Map from the points of the re-flattening onto the points of the input.
    pub iso: Option<Vec<usize>>,
    pub reason: Option<String>,
}

/// Whether `flatten(reconstruct(b))` is isomorphic to `b`. The covering maps
/// give the candidate isomorphism; a generic search is the fallback.
pub fn roundtrip_check(b: &FlatStructure) -> Result<RoundTrip> {
    let rec = reconstruct(b)?;
    let again = flatten(&rec.m, &rec.s)?;
    let mut map = vec![usize::MAX; again.len()];
    for n in 0..=rec.s.n_max {
        for t in tuples::all(rec.m.size, n) {
            map[element_of(&rec.s, &t)] = rec.cov_of(&t);
        }
    }
    if crate::flat::is_isomorphism(&again, b, &map) {
        return Ok(RoundTrip {
            ok: true,
            iso: Some(map),
            reason: None,
        });
    }
    Ok(match flat_isomorphism(&again, b) {
        Some(iso) => RoundTrip {
            ok: true,
            iso: Some(iso),
            reason: Some("covering maps do not induce an isomorphism; search found one".into()),
        },
        None => RoundTrip {
            ok: false,
            iso: None,
            reason: Some(format!(
                "no isomorphism: re-flattening has {} points, input has {}",
                again.len(),
                b.len()
            )),
        },
    })
}

/// Whether `reconstruct(flatten(m, s))` is `L♯`-isomorphic to `(m, s)`.
pub fn roundtrip_sharp(m: &FinStructure, s: &TruncatedSystem) -> Result<bool> {
    let rec = reconstruct(&flatten(m, s)?)?;
    Ok(sharp_isomorphism(m, s, &rec.m, &rec.s)?.is_some())
}

/// The lexicographically least relabeling of `m`, with the permutation that
/// produces it.
pub fn canonical_structure(m: &FinStructure) -> Result<(FinStructure, Perm)> {
    if m.size > CANON_GUARD {
        return Err(Error::Guard {
            what: "structure size for canonical labeling",
            value: m.size,
            limit: CANON_GUARD,
        });
    }
    let key = |x: &FinStructure| (x.relations.clone(), x.constants.clone());
    let (best, perm) = tuples::permutations(m.size)
        .into_iter()
        .map(|p| (m.relabel(&p), p))
        .min_by(|(a, _), (b, _)| key(a).cmp(&key(b)))
        .expect("at least one permutation");
    Ok((best, Perm::new(perm)?))
}

/// The flattening of the canonical relabeling of the reconstruction under
/// its largest sharp system. Isomorphic reconstructions give equal forms.
pub fn canonical_form(b: &FlatStructure) -> Result<FlatStructure> {
    let rec = reconstruct(b)?;
    let (canon, _) = canonical_structure(&rec.m)?;
    flatten(&canon, &compute_f_infinity(&canon, b.n_max)?)
}

/// The canonical homomorphism `b → canonical_form(b)`: each point goes to
/// the class of the canonical image of any tuple it covers.
pub fn cmap(b: &FlatStructure) -> Result<Vec<usize>> {
    let rec = reconstruct(b)?;
    let (canon, perm) = canonical_structure(&rec.m)?;
    let finf = compute_f_infinity(&canon, b.n_max)?;
    let mut map = vec![None; b.len()];
    for n in 0..=b.n_max {
        for t in tuples::all(rec.m.size, n) {
            let target = element_of(&finf, &perm.apply_tuple(&t));
            let slot = &mut map[rec.cov_of(&t)];
            match slot {
                None => *slot = Some(target),
                Some(prev) if *prev != target => {
                    return Err(Error::Corrupt(format!(
                        "tuples covering point {} disagree in the canonical form",
                        rec.cov_of(&t)
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(map.into_iter().map(|x| x.expect("covering maps are onto")).collect())
}

/// Whether `map` is a surjective homomorphism `b → c`: arity, diagrams and
/// projections are preserved and every point of `c` is hit.
pub fn is_surjective_homomorphism(b: &FlatStructure, c: &FlatStructure, map: &[usize]) -> bool {
    if map.len() != b.len() || b.vocab != c.vocab || b.n_max != c.n_max {
        return false;
    }
    let hit: BTreeSet<usize> = map.iter().copied().collect();
    if hit.len() != c.len() || hit.iter().any(|&y| y >= c.len()) {
        return false;
    }
    map.iter().enumerate().all(|(x, &y)| {
        let (ex, ey) = (&b.elements[x], &c.elements[y]);
        ex.arity == ey.arity
            && ex.diagram == ey.diagram
            && ex.proj.iter().zip(&ey.proj).all(|(px, py)| px.map(|p| map[p]) == *py)
    })
}

/// Every surjective homomorphism `b → c`, by exhaustive search.
pub fn surjective_homomorphisms(b: &FlatStructure, c: &FlatStructure) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by_key(|&x| (b.arity(x), x));
    let mut out = Vec::new();
    let mut map = vec![usize::MAX; b.len()];
    fn rec(b: &FlatStructure, c: &FlatStructure, order: &[usize], i: usize, map: &mut [usize], out: &mut Vec<Vec<usize>>) {
        if i == order.len() {
            if is_surjective_homomorphism(b, c, map) {
                out.push(map.to_vec());
            }
            return;
        }
        let x = order[i];
        for y in 0..c.len() {
            let (ex, ey) = (&b.elements[x], &c.elements[y]);
            if ex.arity != ey.arity || ex.diagram != ey.diagram {
                continue;
            }
            // projections land in lower arities, which are already mapped
            let ok = ex.proj.iter().zip(&ey.proj).all(|(px, py)| match (px, py) {
                (Some(px), Some(py)) => map[*px] == usize::MAX || map[*px] == *py,
                _ => false,
            });
            if ok {
                map[x] = y;
                rec(b, c, order, i + 1, map, out);
                map[x] = usize::MAX;
            }
        }
    }
    rec(b, c, &order, 0, &mut map, &mut out);
    out
}

/// Hausdorffness decided through reconstruction: the reconstructed system
/// must be the largest one.
pub fn hausdorff_oracle(b: &FlatStructure) -> Result<bool> {
    let rec = reconstruct(b)?;
    Ok(compute_f_infinity(&rec.m, b.n_max)? == rec.s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backforth::sharp_closure;
    use crate::flat::{gen_projection, hausdorff_check};
    use crate::groups::{automorphism_group, code_of, generate};

    fn p3() -> FinStructure {
        FinStructure::relational(3, &[("E", 2, &[&[0, 1], &[1, 0], &[1, 2], &[2, 1]])]).unwrap()
    }

    fn c3(n_max: usize) -> TruncatedSystem {
        let g = generate(&[Perm::parse_cycles("(0 1 2)", 3).unwrap()], 3).unwrap();
        sharp_closure(&code_of(&g.elements, 3, n_max).all_pairs(), &FinStructure::pure_set(3), n_max).unwrap()
    }

    fn finf(m: &FinStructure, n: usize) -> FlatStructure {
        flatten(m, &compute_f_infinity(m, n).unwrap()).unwrap()
    }

    #[test]
    fn chain_examples() {
        let two = FinStructure::pure_set(2);
        let b = finf(&two, 3);
        let ch = build_covering_chain(&b, ChainOrder::Least).unwrap();
        assert_eq!(ch.chain.len(), 3);
        assert!(ch.closed);
        let s = compute_f_infinity(&two, 3).unwrap();
        assert_eq!(ch.top(), element_of(&s, &[0, 1]));

        let one = FinStructure::pure_set(1);
        assert_eq!(build_covering_chain(&finf(&one, 2), ChainOrder::Least).unwrap().chain.len(), 2);
        assert!(matches!(
            build_covering_chain(&finf(&two, 1), ChainOrder::Least),
            Err(Error::TruncationTooSmall(_))
        ));
    }

    #[test]
    fn reconstruction_examples() {
        let two = FinStructure::pure_set(2);
        let r = reconstruct(&finf(&two, 3)).unwrap();
        assert_eq!(r.m.size, 2);
        assert_eq!(r.s, compute_f_infinity(&two, 3).unwrap());

        let three = FinStructure::pure_set(3);
        let r = reconstruct(&flatten(&three, &c3(4)).unwrap()).unwrap();
        assert_eq!(r.m.size, 3);
        assert_eq!(r.s.class_count(2), 3);

        let r = reconstruct(&finf(&p3(), 4)).unwrap();
        assert!(sharp_isomorphism(&p3(), &compute_f_infinity(&p3(), 4).unwrap(), &r.m, &r.s)
            .unwrap()
            .is_some());
    }

    #[test]
    fn covering_agrees_with_generalized_projection() {
        let b = finf(&p3(), 5);
        let r = reconstruct(&b).unwrap();
        let top = r.chain.top();
        for n in 0..=2 {
            for t in tuples::all(3, n) {
                assert_eq!(r.cov_of(&t), gen_projection(&b, top, &t).unwrap(), "{t:?}");
            }
        }
    }

    #[test]
    fn stepup() {
        let b = finf(&p3(), 4);
        let r = reconstruct(&b).unwrap();
        for n in 0..=b.n_max {
            for t in tuples::all(3, n) {
                let pt = r.cov_of(&t);
                for c in 0..b.len() {
                    if b.le(pt, c) {
                        let extra = b.arity(c) - n;
                        let found = tuples::all(3, extra).any(|e| r.cov_of(&[t.as_slice(), &e].concat()) == c);
                        assert!(found);
                    }
                }
            }
        }
    }

    #[test]
    fn round_trips() {
        let three = FinStructure::pure_set(3);
        for b in [finf(&p3(), 4), flatten(&three, &c3(4)).unwrap()] {
            assert!(roundtrip_check(&b).unwrap().ok);
        }
        assert!(roundtrip_sharp(&three, &c3(4)).unwrap());

        let b = flatten(&three, &c3(4)).unwrap();
        let r1 = reconstruct_with(&b, ChainOrder::Least).unwrap();
        let r2 = reconstruct_with(&b, ChainOrder::Greatest).unwrap();
        assert!(sharp_isomorphism(&r1.m, &r1.s, &r2.m, &r2.s).unwrap().is_some());

        let mut broken = finf(&p3(), 4);
        let top = broken.level(3)[0];
        broken.elements[top].proj[1] = None;
        assert!(reconstruct(&broken).is_err() || !roundtrip_check(&broken).unwrap().ok);
    }

    #[test]
    fn canonical_forms() {
        let two = FinStructure::pure_set(2);
        let b = finf(&two, 3);
        let c = canonical_form(&b).unwrap();
        assert_eq!(canonical_form(&c).unwrap(), c);

        let three = FinStructure::pure_set(3);
        assert_eq!(
            canonical_form(&flatten(&three, &c3(4)).unwrap()).unwrap(),
            canonical_form(&finf(&three, 4)).unwrap()
        );
        let q3 = p3().relabel(&[2, 0, 1]);
        assert_eq!(canonical_form(&finf(&p3(), 4)).unwrap(), canonical_form(&finf(&q3, 4)).unwrap());
    }

    #[test]
    fn cmap_examples() {
        let three = FinStructure::pure_set(3);
        let sys = c3(4);
        let b = flatten(&three, &sys).unwrap();
        let map = cmap(&b).unwrap();
        let c = canonical_form(&b).unwrap();
        assert!(is_surjective_homomorphism(&b, &c, &map));
        assert_eq!(map[element_of(&sys, &[0, 1])], map[element_of(&sys, &[0, 2])]);
        assert!(!hausdorff_check(&b).unwrap().hausdorff);
        assert!(!hausdorff_oracle(&b).unwrap());

        let h = finf(&p3(), 4);
        let map = cmap(&h).unwrap();
        assert_eq!(map.iter().collect::<BTreeSet<_>>().len(), h.len());
        assert!(hausdorff_oracle(&h).unwrap());
    }

    #[test]
    fn cmap_is_the_only_surjection() {
        let three = FinStructure::pure_set(3);
        let b = flatten(&three, &c3(4)).unwrap();
        let homs = surjective_homomorphisms(&b, &canonical_form(&b).unwrap());
        assert_eq!(homs, vec![cmap(&b).unwrap()]);
        let aut = automorphism_group(&three).unwrap();
        assert_eq!(aut.order(), 6);
    }
}
