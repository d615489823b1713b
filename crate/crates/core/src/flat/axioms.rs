use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use super::FlatStructure;
use crate::structures::{QfDiagram, Truth};
use crate::tuples;

/// The first violated axiom instance, with the points involved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlatFailure {
    /// Axiom label, e.g. `1(b)` or `4`.
    pub axiom: &'static str,
    pub message: String,
    pub witness: Vec<usize>,
}

impl std::fmt::Display for FlatFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "axiom {}: {} (points {:?})", self.axiom, self.message, self.witness)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlatReport {
    pub failure: Option<FlatFailure>,
    /// Instances above the arity bound, per axiom label.
    pub skipped: BTreeMap<&'static str, usize>,
}

impl FlatReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn fail(axiom: &'static str, message: String, witness: Vec<usize>) -> Result<(), FlatFailure> {
    Err(FlatFailure {
        axiom,
        message,
        witness,
    })
}

/// Checks the flat-structure axioms in order and stops at the first failure.
/// Instances whose witness would need arity above `n_max` are counted as
/// skipped instead of checked.
pub fn check_flat_axioms(b: &FlatStructure) -> FlatReport {
    let mut skipped = BTreeMap::new();
    let failure = run(b, &mut skipped).err();
    FlatReport { failure, skipped }
}

fn run(b: &FlatStructure, skipped: &mut BTreeMap<&'static str, usize>) -> Result<(), FlatFailure> {
    structural(b)?;
    let levels = b.levels();
    composition(b)?;
    pullback(b)?;
    equality(b)?;
    amalgamation(b, &levels, skipped)?;
    duplication(b, &levels, skipped)?;
    constants(b, &levels, skipped)?;
    functions(b, &levels, skipped)?;
    Ok(())
}

fn structural(b: &FlatStructure) -> Result<(), FlatFailure> {
    let rel_arities = b.vocab.rel_arities();
    let n_consts = b.vocab.constants.len();
    for (a, e) in b.elements.iter().enumerate() {
        if e.arity > b.n_max {
            return fail("1(a)", format!("arity {} exceeds the bound", e.arity), vec![a]);
        }
        if e.diagram.arity != e.arity
            || e.diagram.rel_arities != rel_arities
            || e.diagram.n_consts != n_consts
            || e.diagram.bits.len() != QfDiagram::empty(e.arity, rel_arities.clone(), n_consts).bits.len()
        {
            return fail("1(a)", "diagram does not match arity or vocabulary".into(), vec![a]);
        }
    }
    let roots = b.level(0);
    if roots.len() != 1 {
        return fail("1(a)", format!("U_0 has {} points", roots.len()), roots);
    }
    for (a, e) in b.elements.iter().enumerate() {
        let cat = b.catalog(e.arity);
        if e.proj.len() != cat.len() {
            return fail("1(b)", "projection table has the wrong length".into(), vec![a]);
        }
        for (slot, p) in e.proj.iter().enumerate() {
            let k = cat.maps[slot].len();
            match p {
                None => {
                    return fail("1(b)", format!("P^{:?} is undefined", cat.maps[slot]), vec![a]);
                }
                Some(t) if *t >= b.len() || b.arity(*t) != k => {
                    return fail("1(b)", format!("P^{:?} does not land in U_{k}", cat.maps[slot]), vec![a, *t]);
                }
                _ => {}
            }
        }
        let id = b.prefix(a, e.arity).unwrap();
        if id != a {
            return fail("1(c)", "P^id is not the identity".into(), vec![a, id]);
        }
    }
    for (a, e) in b.elements.iter().enumerate() {
        if let Err(msg) = e.diagram.check_complete() {
            return fail("1(d)", format!("diagram is not a complete type: {msg}"), vec![a]);
        }
    }
    Ok(())
}

fn composition(b: &FlatStructure) -> Result<(), FlatFailure> {
    for (a, e) in b.elements.iter().enumerate() {
        let outer = b.catalog(e.arity);
        for (gs, g) in outer.maps.iter().enumerate() {
            let mid = e.proj[gs].unwrap();
            let inner = b.catalog(g.len());
            for (fs, &gf) in b.catalogs().composites(e.arity, gs).iter().enumerate() {
                let direct = e.proj[gf].unwrap();
                let two_step = b.elements[mid].proj[fs].unwrap();
                if direct != two_step {
                    let f = &inner.maps[fs];
                    return fail(
                        "2(a)",
                        format!("P^(g∘f) ≠ P^f∘P^g for g = {g:?}, f = {f:?}"),
                        vec![a, direct, two_step],
                    );
                }
            }
        }
    }
    Ok(())
}

fn pullback(b: &FlatStructure) -> Result<(), FlatFailure> {
    for (a, e) in b.elements.iter().enumerate() {
        let cat = b.catalog(e.arity);
        for (s, f) in cat.maps.iter().enumerate() {
            let t = e.proj[s].unwrap();
            if b.elements[t].diagram != e.diagram.pullback(f) {
                return fail("2(b)", format!("diagram of P^{f:?} is not the pullback"), vec![a, t]);
            }
        }
    }
    Ok(())
}

fn equality(b: &FlatStructure) -> Result<(), FlatFailure> {
    for (a, e) in b.elements.iter().enumerate() {
        let reps = e.diagram.eq_classes();
        let cat = b.catalog(e.arity);
        let mut seen: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for (s, f) in cat.maps.iter().enumerate() {
            let key = tuples::compose(&reps, f);
            let t = e.proj[s].unwrap();
            if let Some(&(s0, t0)) = seen.get(&key) {
                if t0 != t {
                    return fail(
                        "3",
                        format!("{:?} and {:?} agree under equality but project differently", cat.maps[s0], f),
                        vec![a, t0, t],
                    );
                }
            } else {
                seen.insert(key, (s, t));
            }
        }
    }
    Ok(())
}

fn amalgamation(
    b: &FlatStructure,
    levels: &[Vec<usize>],
    skipped: &mut BTreeMap<&'static str, usize>,
) -> Result<(), FlatFailure> {
    let n_max = b.n_max;
    // realized[(k, n, m)] = {(P^{id_n}(d), P^v(d))}
    let mut realized: HashMap<(usize, usize, usize), HashSet<(usize, usize)>> = HashMap::new();
    for (big, level) in levels.iter().enumerate() {
        for k in 0..=big {
            for n in k..=big {
                let m = big + k - n;
                if m < k {
                    continue;
                }
                let v: Vec<usize> = (0..m).map(|i| if i < k { i } else { n + i - k }).collect();
                let v_slot = b.catalog(big).slot(&v).expect("v is an injection");
                let entry = realized.entry((k, n, m)).or_default();
                for &d in level {
                    entry.insert((b.prefix(d, n).unwrap(), b.proj_slot(d, v_slot).unwrap()));
                }
            }
        }
    }
    let mut skip = 0;
    for k in 0..=n_max {
        for n in k..=n_max {
            for m in k..=n_max {
                let by_prefix = |lv: &[usize]| {
                    let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                    for &x in lv {
                        g.entry(b.prefix(x, k).unwrap()).or_default().push(x);
                    }
                    g
                };
                let bs = by_prefix(&levels[n]);
                let cs = by_prefix(&levels[m]);
                if n + m - k > n_max {
                    skip += bs.iter().map(|(a, v)| v.len() * cs.get(a).map_or(0, Vec::len)).sum::<usize>();
                    continue;
                }
                let have = &realized[&(k, n, m)];
                for (a, bv) in &bs {
                    for &x in bv {
                        for &y in cs.get(a).into_iter().flatten() {
                            if !have.contains(&(x, y)) {
                                return fail(
                                    "4",
                                    format!("no amalgam in U_{} of b, c over a (k={k})", n + m - k),
                                    vec![*a, x, y],
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    if skip > 0 {
        skipped.insert("4", skip);
    }
    Ok(())
}

fn duplication(
    b: &FlatStructure,
    levels: &[Vec<usize>],
    skipped: &mut BTreeMap<&'static str, usize>,
) -> Result<(), FlatFailure> {
    let ext = b.extension_index();
    let mut skip = 0;
    for (n, level) in levels.iter().enumerate() {
        for &a in level {
            for i in 0..n {
                if n + 1 > b.n_max {
                    skip += 1;
                    continue;
                }
                if !ext[a].iter().any(|&w| b.diagram(w).eq(i, n) == Truth::True) {
                    return fail("5", format!("no extension duplicating x{i}"), vec![a]);
                }
            }
        }
    }
    if skip > 0 {
        skipped.insert("5", skip);
    }
    Ok(())
}

fn constants(
    b: &FlatStructure,
    levels: &[Vec<usize>],
    skipped: &mut BTreeMap<&'static str, usize>,
) -> Result<(), FlatFailure> {
    let n = b.vocab.constants.len();
    if n == 0 {
        return Ok(());
    }
    if b.n_max == 0 {
        skipped.insert("6", n);
        return Ok(());
    }
    for c in 0..n {
        if !levels[1].iter().any(|&w| b.diagram(w).is_const(c, 0) == Truth::True) {
            return fail("6", format!("constant `{}` names no point", b.vocab.constants[c]), levels[0].clone());
        }
    }
    Ok(())
}

fn functions(
    b: &FlatStructure,
    levels: &[Vec<usize>],
    skipped: &mut BTreeMap<&'static str, usize>,
) -> Result<(), FlatFailure> {
    let ext = b.extension_index();
    let mut skip = 0;
    for (r, sym) in b.vocab.relations.iter().enumerate().filter(|(_, s)| s.functional) {
        let k = sym.arity - 1;
        let args: Vec<usize> = (0..=k).collect();
        if k + 1 > b.n_max {
            skip += levels.get(k).map_or(1, Vec::len);
        } else {
            for &a in &levels[k] {
                if !ext[a].iter().any(|&w| b.diagram(w).rel(r, &args) == Truth::True) {
                    return fail("7", format!("`{}` has no value at this argument", sym.name), vec![a]);
                }
            }
        }
        if k + 2 > b.n_max {
            skip += 1;
            continue;
        }
        let alt: Vec<usize> = (0..k).chain([k + 1]).collect();
        for &d in &levels[k + 2] {
            let dg = b.diagram(d);
            if dg.rel(r, &args) == Truth::True && dg.rel(r, &alt) == Truth::True && dg.eq(k, k + 1) != Truth::True {
                return fail("7", format!("`{}` takes two values", sym.name), vec![d]);
            }
        }
    }
    if skip > 0 {
        skipped.insert("7", skip);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backforth::compute_f_infinity;
    use crate::flat::flatten;
    use crate::structures::{relationalize, FinStructure, FunSym, Vocabulary};

    fn two_point(n_max: usize) -> FlatStructure {
        let m = FinStructure::pure_set(2);
        flatten(&m, &compute_f_infinity(&m, n_max).unwrap()).unwrap()
    }

    #[test]
    fn flattenings_pass() {
        let r = check_flat_axioms(&two_point(3));
        assert!(r.passed(), "{:?}", r.failure);
        assert!(r.skipped.contains_key("4"));
        let p3 = FinStructure::relational(3, &[("E", 2, &[&[0, 1], &[1, 0], &[1, 2], &[2, 1]])]).unwrap();
        assert!(check_flat_axioms(&flatten(&p3, &compute_f_infinity(&p3, 3).unwrap()).unwrap()).passed());
    }

    #[test]
    fn missing_projection() {
        let mut b = two_point(2);
        let a = b.level(2)[0];
        b.elements[a].proj[1] = None;
        assert_eq!(check_flat_axioms(&b).failure.unwrap().axiom, "1(b)");
    }

    #[test]
    fn merged_pair_classes() {
        let mut b = two_point(2);
        let u2 = b.level(2);
        let (x, y) = (u2[0], u2[1]);
        b.elements[x].diagram = b.diagram(x).union(b.diagram(y));
        let last = b.elements.len() - 1;
        // redirect every projection into y to x, then drop y
        for e in &mut b.elements {
            for p in e.proj.iter_mut().flatten() {
                if *p == y {
                    *p = x;
                }
            }
        }
        b.elements.remove(y);
        assert_eq!(y, last);
        let f = check_flat_axioms(&b).failure.unwrap();
        assert_eq!(f.axiom, "1(d)");
        assert!(f.message.contains("both polarities"));
    }

    #[test]
    fn broken_amalgamation_and_duplication() {
        // drop the diagonal pair class: (0) has no duplicate
        let m = FinStructure::pure_set(2);
        let s = compute_f_infinity(&m, 2).unwrap();
        let mut b = flatten(&m, &s).unwrap();
        let diag = crate::flat::element_of(&s, &[0, 0]);
        b.elements.remove(diag);
        for e in &mut b.elements {
            for p in e.proj.iter_mut().flatten() {
                if *p > diag {
                    *p -= 1;
                }
            }
        }
        assert_eq!(check_flat_axioms(&b).failure.unwrap().axiom, "5");
    }

    #[test]
    fn functions_axiom() {
        let succ = FinStructure::new(
            Vocabulary {
                functions: vec![FunSym { name: "s".into(), arity: 1 }],
                ..Default::default()
            },
            2,
            vec![],
            vec![],
            vec![[(vec![0], 1), (vec![1], 0)].into_iter().collect()],
        )
        .unwrap();
        let r = relationalize(&succ);
        let b = flatten(&r, &compute_f_infinity(&r, 3).unwrap()).unwrap();
        assert!(check_flat_axioms(&b).passed());

        // a non-functional graph flagged functional fails
        let mut bad = r.clone();
        bad.relations[0].insert(vec![0, 0]);
        let b = flatten(&bad, &compute_f_infinity(&bad, 3).unwrap()).unwrap();
        assert_eq!(check_flat_axioms(&b).failure.unwrap().axiom, "7");
    }
}
