//! Finite permutation groups, subgroup codes, `Fix`, conjugacy and dividing.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backforth::{validate_sharp, PairSet, TruncatedSystem};
use crate::flat::{element_of, flat_isomorphisms, flatten};
use crate::structures::{qf_type, FinStructure};
use crate::tuples;
use crate::{Error, Result};

/// Largest group materialized by [`generate`].
pub const ELEMENT_CAP: usize = 50_000;
/// Largest group whose subgroups are enumerated.
pub const SUBGROUP_GUARD: usize = 48;
/// Largest structure handed to [`automorphism_group`].
pub const AUT_GUARD: usize = 10;

/// A bijection of `0..n`, stored as its image list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || std::mem::replace(&mut seen[x], true) {
                return Err(Error::Invalid(format!("{images:?} is not a permutation")));
            }
        }
        Ok(Perm(images))
    }

    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn apply_tuple(&self, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&x| self.0[x]).collect()
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.degree()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Perm(inv)
    }

    /// `self ∘ g ∘ self⁻¹`.
    pub fn conjugate(&self, g: &Perm) -> Perm {
        self.compose(g).compose(&self.inverse())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().enumerate().filter(|(i, x)| i != *x).count()
    }

    /// Non-trivial cycles, each starting at its least point, ordered by that
    /// point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = self.0[start];
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = self.0[x];
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }

    /// Cycle lengths including fixed points, sorted descending.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        t.resize(t.len() + self.degree() - t.iter().sum::<usize>(), 1);
        t.sort_unstable_by(|a, b| b.cmp(a));
        t
    }

    pub fn order(&self) -> u64 {
        self.cycles().iter().fold(1, |acc, c| tuples::lcm(acc, c.len() as u64))
    }

    /// Parses cycle notation such as `(0 1)(2 3)`, `(0,1,2)` or `(01)`; a
    /// cycle written without separators is read one digit per point. The
    /// empty string and `()` denote the identity.
    pub fn parse_cycles(s: &str, degree: usize) -> Result<Perm> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut seen = vec![false; degree];
        let s = s.trim();
        let mut rest = s;
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Invalid(format!("expected `(` in `{s}`")))?;
            let close = open
                .find(')')
                .ok_or_else(|| Error::Invalid(format!("unclosed cycle in `{s}`")))?;
            let body = &open[..close];
            rest = open[close + 1..].trim_start();
            let tokens: Vec<&str> = body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
            let points: Vec<usize> = if tokens.len() == 1 && tokens[0].len() > 1 {
                tokens[0]
                    .chars()
                    .map(|c| c.to_digit(10).map(|d| d as usize))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::Invalid(format!("bad cycle `({body})`")))?
            } else {
                tokens
                    .iter()
                    .map(|t| t.parse().map_err(|_| Error::Invalid(format!("bad point `{t}`"))))
                    .collect::<Result<_>>()?
            };
            for (i, &p) in points.iter().enumerate() {
                if p >= degree {
                    return Err(Error::Invalid(format!("point {p} out of range for degree {degree}")));
                }
                if std::mem::replace(&mut seen[p], true) {
                    return Err(Error::Invalid(format!("point {p} appears twice in `{s}`")));
                }
                images[p] = points[(i + 1) % points.len()];
            }
        }
        Perm::new(images)
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            let body: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A permutation group with its elements materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermGroup {
    pub degree: usize,
    pub gens: Vec<Perm>,
    pub elements: BTreeSet<Perm>,
}

impl PermGroup {
    pub fn trivial(degree: usize) -> Self {
        PermGroup {
            degree,
            gens: vec![],
            elements: [Perm::identity(degree)].into_iter().collect(),
        }
    }

    pub fn symmetric(degree: usize) -> Result<Self> {
        let mut gens = Vec::new();
        if degree >= 2 {
            gens.push(Perm::parse_cycles("(0 1)", degree)?);
            gens.push(Perm::new((1..degree).chain([0]).collect())?);
        }
        generate(&gens, degree)
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.contains(p)
    }

    pub fn is_subgroup_of(&self, g: &PermGroup) -> bool {
        self.degree == g.degree && self.elements.is_subset(&g.elements)
    }

    pub fn conjugate_by(&self, d: &Perm) -> PermGroup {
        PermGroup {
            degree: self.degree,
            gens: self.gens.iter().map(|g| d.conjugate(g)).collect(),
            elements: self.elements.iter().map(|g| d.conjugate(g)).collect(),
        }
    }

    /// A small generating set, chosen greedily in element order.
    pub fn small_generators(&self) -> Vec<Perm> {
        let mut gens = Vec::new();
        let mut span: BTreeSet<Perm> = [Perm::identity(self.degree)].into_iter().collect();
        for g in &self.elements {
            if !span.contains(g) {
                gens.push(g.clone());
                span = closure(&gens, self.degree, usize::MAX).expect("uncapped closure");
            }
        }
        gens
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "degree": self.degree,
            "order": self.order(),
            "generators": self.small_generators().iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        })
    }
}

fn closure(gens: &[Perm], degree: usize, cap: usize) -> Result<BTreeSet<Perm>> {
    let id = Perm::identity(degree);
    let mut seen: BTreeSet<Perm> = [id.clone()].into_iter().collect();
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = g.compose(&x);
            if !seen.contains(&y) {
                if seen.len() >= cap {
                    return Err(Error::Guard {
                        what: "group order",
                        value: seen.len() + 1,
                        limit: cap,
                    });
                }
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(seen)
}

/// The group generated by `gens`.
pub fn generate(gens: &[Perm], degree: usize) -> Result<PermGroup> {
    generate_capped(gens, degree, ELEMENT_CAP)
}

pub fn generate_capped(gens: &[Perm], degree: usize, cap: usize) -> Result<PermGroup> {
    if let Some(g) = gens.iter().find(|g| g.degree() != degree) {
        return Err(Error::DegreeMismatch(degree, g.degree()));
    }
    Ok(PermGroup {
        degree,
        gens: gens.to_vec(),
        elements: closure(gens, degree, cap)?,
    })
}

/// The closure of an arbitrary set of permutations, as a group.
pub fn group_of_elements(elements: &BTreeSet<Perm>, degree: usize) -> Result<PermGroup> {
    let gens: Vec<Perm> = elements.iter().cloned().collect();
    generate(&gens, degree)
}

/// Every subgroup of `g`, each listed once, ordered by order and then by
/// element list.
pub fn subgroups(g: &PermGroup) -> Result<Vec<PermGroup>> {
    if g.order() > SUBGROUP_GUARD {
        return Err(Error::Guard {
            what: "group order for subgroup enumeration",
            value: g.order(),
            limit: SUBGROUP_GUARD,
        });
    }
    let mut found: BTreeMap<BTreeSet<Perm>, Vec<Perm>> = BTreeMap::new();
    let trivial = PermGroup::trivial(g.degree);
    found.insert(trivial.elements.clone(), vec![]);
    let mut queue = VecDeque::from([(trivial.elements, Vec::<Perm>::new())]);
    while let Some((elems, gens)) = queue.pop_front() {
        for x in &g.elements {
            if elems.contains(x) {
                continue;
            }
            let mut more = gens.clone();
            more.push(x.clone());
            let span = closure(&more, g.degree, usize::MAX)?;
            if !found.contains_key(&span) {
                found.insert(span.clone(), more.clone());
                queue.push_back((span, more));
            }
        }
    }
    let mut out: Vec<PermGroup> = found
        .into_iter()
        .map(|(elements, gens)| PermGroup {
            degree: g.degree,
            gens,
            elements,
        })
        .collect();
    out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.elements.cmp(&b.elements)));
    Ok(out)
}

/// Whether the bijection preserves every relation and constant of `m`.
pub fn is_automorphism(m: &FinStructure, p: &Perm) -> bool {
    p.degree() == m.size && m.relabel(p.images()) == *m
}

/// `Aut(m)` by exhaustive enumeration of `Sym(|M|)`.
pub fn automorphism_group_brute(m: &FinStructure) -> Result<PermGroup> {
    if m.size > 8 {
        return Err(Error::Guard {
            what: "structure size for brute-force automorphisms",
            value: m.size,
            limit: 8,
        });
    }
    let elements = tuples::permutations(m.size)
        .into_iter()
        .map(Perm)
        .filter(|p| is_automorphism(m, p))
        .collect::<BTreeSet<_>>();
    Ok(PermGroup {
        degree: m.size,
        gens: elements.iter().cloned().collect(),
        elements,
    })
}

/// Point colours refined by the types of pairs, used to prune the
/// automorphism search.
fn point_colors(m: &FinStructure) -> Vec<usize> {
    let intern = |keys: Vec<_>| -> Vec<usize> {
        let sorted: BTreeSet<_> = keys.iter().cloned().collect();
        let ids: BTreeMap<_, usize> = sorted.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        keys.iter().map(|k| ids[k]).collect()
    };
    let pair_types: Vec<Vec<_>> = (0..m.size)
        .map(|x| (0..m.size).map(|y| qf_type(m, &[x, y])).collect())
        .collect();
    let mut colors = intern((0..m.size).map(|x| (0usize, vec![qf_type(m, &[x])], vec![])).collect());
    loop {
        let keys: Vec<_> = (0..m.size)
            .map(|x| {
                let mut around: Vec<_> = (0..m.size).map(|y| (colors[y], pair_types[x][y].clone())).collect();
                around.sort();
                (colors[x], vec![], around)
            })
            .collect();
        let next = intern(keys);
        let count = |c: &Vec<usize>| c.iter().collect::<BTreeSet<_>>().len();
        if count(&next) == count(&colors) {
            return next;
        }
        colors = next;
    }
}

/// `Aut(m)`, by backtracking over points with colour pruning and a
/// diagram check on every partial map.
pub fn automorphism_group(m: &FinStructure) -> Result<PermGroup> {
    automorphism_group_guarded(m, AUT_GUARD)
}

/// As [`automorphism_group`], with a caller-chosen size limit. The search
/// prunes on partial isomorphism, so structures with few automorphisms stay
/// cheap well past the default limit.
pub fn automorphism_group_guarded(m: &FinStructure, guard: usize) -> Result<PermGroup> {
    if m.size > guard {
        return Err(Error::Guard {
            what: "structure size for automorphisms",
            value: m.size,
            limit: guard,
        });
    }
    let colors = point_colors(m);
    let mut out = BTreeSet::new();
    let mut image = Vec::with_capacity(m.size);
    let mut used = vec![false; m.size];
    let domain: Vec<usize> = (0..m.size).collect();
    fn rec(
        m: &FinStructure,
        colors: &[usize],
        domain: &[usize],
        image: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut BTreeSet<Perm>,
    ) -> Result<()> {
        let i = image.len();
        if i == m.size {
            let p = Perm(image.clone());
            if is_automorphism(m, &p) {
                if out.len() >= ELEMENT_CAP {
                    return Err(Error::Guard {
                        what: "automorphism group order",
                        value: out.len() + 1,
                        limit: ELEMENT_CAP,
                    });
                }
                out.insert(p);
            }
            return Ok(());
        }
        for y in 0..m.size {
            if used[y] || colors[y] != colors[i] {
                continue;
            }
            image.push(y);
            if qf_type(m, &domain[..=i]) == qf_type(m, image) {
                used[y] = true;
                rec(m, colors, domain, image, used, out)?;
                used[y] = false;
            }
            image.pop();
        }
        Ok(())
    }
    rec(m, &colors, &domain, &mut image, &mut used, &mut out)?;
    Ok(PermGroup {
        degree: m.size,
        gens: vec![],
        elements: out,
    }
    .with_generators())
}

impl PermGroup {
    fn with_generators(mut self) -> Self {
        self.gens = self.small_generators();
        self
    }
}

/// Per-arity pair sets `(ā, b̄)` over `0..degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupCode {
    pub degree: usize,
    pub n_max: usize,
    pub pairs: Vec<BTreeSet<(Vec<usize>, Vec<usize>)>>,
}

impl SubgroupCode {
    pub fn contains(&self, a: &[usize], b: &[usize]) -> bool {
        a.len() == b.len() && a.len() <= self.n_max && self.pairs[a.len()].contains(&(a.to_vec(), b.to_vec()))
    }

    pub fn all_pairs(&self) -> PairSet {
        self.pairs.iter().flatten().cloned().collect()
    }

    /// The code read as a system of partitions, when every arity is an
    /// equivalence relation.
    pub fn to_system(&self) -> Option<TruncatedSystem> {
        let mut labels = Vec::new();
        for k in 0..=self.n_max {
            let total = tuples::count(self.degree, k);
            let mut class: Vec<Option<usize>> = vec![None; total];
            let mut sizes = Vec::new();
            for a in tuples::all(self.degree, k) {
                let ca = tuples::encode(&a, self.degree);
                if class[ca].is_some() {
                    continue;
                }
                let id = sizes.len();
                let mut size = 0;
                for (x, y) in self.pairs[k].range((a.clone(), vec![])..) {
                    if *x != a {
                        break;
                    }
                    let cy = tuples::encode(y, self.degree);
                    if class[cy].is_some() {
                        return None;
                    }
                    class[cy] = Some(id);
                    size += 1;
                }
                if class[ca] != Some(id) {
                    return None;
                }
                sizes.push(size);
            }
            // every pair must stay inside one class, and each class must be
            // complete
            let expected: usize = sizes.iter().map(|s| s * s).sum();
            if expected != self.pairs[k].len()
                || self.pairs[k].iter().any(|(x, y)| {
                    class[tuples::encode(x, self.degree)] != class[tuples::encode(y, self.degree)]
                })
            {
                return None;
            }
            labels.push(class.into_iter().map(Option::unwrap).collect::<Vec<_>>());
        }
        Some(TruncatedSystem::from_labels(self.degree, labels))
    }

    pub fn from_system(s: &TruncatedSystem) -> SubgroupCode {
        let mut pairs = vec![BTreeSet::new(); s.n_max + 1];
        for (k, set) in pairs.iter_mut().enumerate() {
            for class in s.members(k) {
                for a in &class {
                    for b in &class {
                        set.insert((a.clone(), b.clone()));
                    }
                }
            }
        }
        SubgroupCode {
            degree: s.size,
            n_max: s.n_max,
            pairs,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let key = crate::backforth::tuple_key;
        serde_json::json!({
            "degree": self.degree,
            "n_max": self.n_max,
            "pairs": self.pairs.iter().map(|set| set.iter().map(|(a, b)| [key(a), key(b)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// `F(C)`: the pairs `(ā, σā)` for `σ ∈ C`, at every arity `≤ n_max`.
pub fn code_of<'a>(c: impl IntoIterator<Item = &'a Perm>, degree: usize, n_max: usize) -> SubgroupCode {
    let c: Vec<&Perm> = c.into_iter().collect();
    let pairs = (0..=n_max)
        .map(|k| {
            tuples::all(degree, k)
                .flat_map(|a| {
                    c.iter()
                        .map(|s| (a.clone(), s.apply_tuple(&a)))
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    SubgroupCode { degree, n_max, pairs }
}

/// `C_F`: the permutations whose graph lies in `F`. With `strict`, codes that
/// stop below the degree are rejected since they cannot pin permutations
/// down.
pub fn group_of_code(f: &SubgroupCode, strict: bool) -> Result<BTreeSet<Perm>> {
    if strict && f.n_max < f.degree {
        return Err(Error::Invalid(format!(
            "code truncated at {} cannot determine permutations of degree {}",
            f.n_max, f.degree
        )));
    }
    Ok(tuples::permutations(f.degree)
        .into_iter()
        .map(Perm)
        .filter(|s| (0..=f.n_max).all(|k| tuples::all(f.degree, k).all(|a| f.contains(&a, &s.apply_tuple(&a)))))
        .collect())
}

/// Whether the code is a sharp system on the pure set `0..degree`.
pub fn is_sharp_code(f: &SubgroupCode) -> bool {
    if f.pairs.len() != f.n_max + 1 || f.degree == 0 {
        return false;
    }
    match f.to_system() {
        Some(s) => validate_sharp(&FinStructure::pure_set(f.degree), &s).is_ok(),
        None => false,
    }
}

/// Whether `C` is closed under composition and contains the identity.
pub fn is_subgroup(c: &BTreeSet<Perm>, degree: usize) -> bool {
    c.contains(&Perm::identity(degree)) && c.iter().all(|a| c.iter().all(|b| c.contains(&a.compose(b))))
}

/// Automorphisms of `m` that move every tuple inside its class.
pub fn fix(m: &FinStructure, s: &TruncatedSystem) -> Result<PermGroup> {
    let aut = automorphism_group(m)?;
    let elements: BTreeSet<Perm> = aut
        .elements
        .into_iter()
        .filter(|p| (0..=s.n_max).all(|k| tuples::all(m.size, k).all(|a| s.related(&a, &p.apply_tuple(&a)))))
        .collect();
    Ok(PermGroup {
        degree: m.size,
        gens: vec![],
        elements,
    }
    .with_generators())
}

/// Automorphisms of `m` that permute the classes of `s`.
pub fn aut_of_sharp(m: &FinStructure, s: &TruncatedSystem) -> Result<PermGroup> {
    let aut = automorphism_group(m)?;
    let elements: BTreeSet<Perm> = aut
        .elements
        .into_iter()
        .filter(|p| preserves_system(s, s, p))
        .collect();
    Ok(PermGroup {
        degree: m.size,
        gens: vec![],
        elements,
    }
    .with_generators())
}

/// Whether `p` maps the classes of `s1` bijectively onto those of `s2`.
pub fn preserves_system(s1: &TruncatedSystem, s2: &TruncatedSystem, p: &Perm) -> bool {
    if s1.n_max != s2.n_max || s1.size != s2.size {
        return false;
    }
    (0..=s1.n_max).all(|k| {
        if s1.class_count(k) != s2.class_count(k) {
            return false;
        }
        let mut fwd = HashMap::new();
        tuples::all(s1.size, k).all(|a| {
            let c2 = s2.class_of(&p.apply_tuple(&a));
            *fwd.entry(s1.class_of(&a)).or_insert(c2) == c2
        })
    })
}

fn conjugator_key(p: &Perm) -> (usize, &[usize]) {
    (p.support_size(), p.images())
}

fn cycle_type_profile(h: &PermGroup) -> BTreeMap<Vec<usize>, usize> {
    let mut out = BTreeMap::new();
    for g in &h.elements {
        *out.entry(g.cycle_type()).or_insert(0) += 1;
    }
    out
}

/// Some `δ ∈ G` with `δ H1 δ⁻¹ = H2`. The witness is least by support size
/// and then by image list.
pub fn conjugacy_test(h1: &PermGroup, h2: &PermGroup, g: &PermGroup) -> Result<Option<Perm>> {
    for (name, h) in [("first", h1), ("second", h2)] {
        if !h.is_subgroup_of(g) {
            return Err(Error::NotMember(format!("{name} group is not contained in the ambient group")));
        }
    }
    if h1.order() != h2.order() || cycle_type_profile(h1) != cycle_type_profile(h2) {
        return Ok(None);
    }
    let gens1 = h1.small_generators();
    let mut candidates: Vec<&Perm> = g.elements.iter().collect();
    candidates.sort_by(|a, b| conjugator_key(a).cmp(&conjugator_key(b)));
    Ok(candidates
        .into_iter()
        .find(|d| gens1.iter().all(|x| h2.contains(&d.conjugate(x))))
        .cloned())
}

/// An `L♯`-isomorphism `(m1, s1) → (m2, s2)`: an isomorphism of the
/// structures mapping classes onto classes. Exhaustive over bijections.
pub fn sharp_isomorphism(
    m1: &FinStructure,
    s1: &TruncatedSystem,
    m2: &FinStructure,
    s2: &TruncatedSystem,
) -> Result<Option<Perm>> {
    if m1.size > 8 {
        return Err(Error::Guard {
            what: "structure size for sharp isomorphism search",
            value: m1.size,
            limit: 8,
        });
    }
    if m1.size != m2.size || m1.vocab != m2.vocab || s1.n_max != s2.n_max {
        return Ok(None);
    }
    Ok(tuples::permutations(m1.size)
        .into_iter()
        .map(Perm)
        .find(|p| m1.is_isomorphism(m2, p.images()) && preserves_system(s1, s2, p)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BireductionReport {
    pub isomorphic: bool,
    pub conjugate: bool,
    pub agree: bool,
}

/// Compares `L♯`-isomorphism of two expansions of `m` with conjugacy of
/// their fix groups inside `Aut(m)`.
pub fn bireduction_check(m: &FinStructure, s1: &TruncatedSystem, s2: &TruncatedSystem) -> Result<BireductionReport> {
    let isomorphic = sharp_isomorphism(m, s1, m, s2)?.is_some();
    let aut = automorphism_group(m)?;
    let conjugate = conjugacy_test(&fix(m, s1)?, &fix(m, s2)?, &aut)?.is_some();
    Ok(BireductionReport {
        isomorphic,
        conjugate,
        agree: isomorphic == conjugate,
    })
}

#[derive(Debug, Clone)]
pub struct InducedAction {
    /// `Aut(M, S)`.
    pub domain: PermGroup,
    /// The permutation of flat points induced by each domain element, in
    /// domain order.
    pub images: Vec<Vec<usize>>,
    /// `Aut(flatten(M, S))`, enumerated directly on the flat structure.
    pub flat_automorphisms: BTreeSet<Vec<usize>>,
    pub homomorphism: bool,
    pub surjective: bool,
}

/// The action of `Aut(M, S)` on the points of the flattening, compared with
/// the automorphisms of the flattening.
pub fn induced_flat_action(m: &FinStructure, s: &TruncatedSystem) -> Result<InducedAction> {
    let domain = aut_of_sharp(m, s)?;
    let b = flatten(m, s)?;
    let mut reps: Vec<Option<Vec<usize>>> = vec![None; b.len()];
    for k in 0..=s.n_max {
        for t in tuples::all(m.size, k) {
            let e = element_of(s, &t);
            reps[e].get_or_insert(t);
        }
    }
    let reps: Vec<Vec<usize>> = reps.into_iter().map(Option::unwrap).collect();
    let act = |p: &Perm| -> Vec<usize> { reps.iter().map(|t| element_of(s, &p.apply_tuple(t))).collect() };
    let images: Vec<Vec<usize>> = domain.elements.iter().map(act).collect();
    let homomorphism = domain.elements.iter().all(|x| {
        domain.elements.iter().all(|y| {
            let (ix, iy) = (act(x), act(y));
            act(&x.compose(y)) == tuples::compose(&ix, &iy)
        })
    });
    let flat_automorphisms: BTreeSet<Vec<usize>> = flat_isomorphisms(&b, &b, ELEMENT_CAP).into_iter().collect();
    let image_set: BTreeSet<Vec<usize>> = images.iter().cloned().collect();
    let surjective = image_set == flat_automorphisms;
    Ok(InducedAction {
        domain,
        images,
        flat_automorphisms,
        homomorphism,
        surjective,
    })
}

/// The least `e ≥ 1` with `σ^e = id` for every element.
pub fn exponent(g: &PermGroup) -> u64 {
    g.elements.iter().fold(1, |acc, p| tuples::lcm(acc, p.order()))
}

/// A subgroup of `G` together with a surjective homomorphism onto `H`,
/// given by the images of the subgroup's generators.
#[derive(Debug, Clone)]
pub struct DividesWitness {
    pub subgroup: PermGroup,
    pub generator_images: Vec<(Perm, Perm)>,
}

/// Whether `H` divides `G`. Element orders of `H` not dividing the exponent
/// of `G` refute it at once.
pub fn divides_check(g: &PermGroup, h: &PermGroup) -> Result<Option<DividesWitness>> {
    let e = exponent(g);
    if h.elements.iter().any(|x| !e.is_multiple_of(x.order())) {
        return Ok(None);
    }
    for sub in subgroups(g)? {
        if sub.order() < h.order() || sub.order() % h.order() != 0 {
            continue;
        }
        let gens = sub.small_generators();
        let targets: Vec<&Perm> = h.elements.iter().collect();
        let mut choice = vec![0usize; gens.len()];
        loop {
            let imgs: Vec<&Perm> = choice.iter().map(|&i| targets[i]).collect();
            if gens.iter().zip(&imgs).all(|(x, y)| y.order() <= x.order() && x.order() % y.order() == 0) {
                if let Some(map) = extend_homomorphism(&sub, &gens, &imgs, h.degree) {
                    let onto: BTreeSet<&Perm> = map.values().collect();
                    if onto.len() == h.order() {
                        return Ok(Some(DividesWitness {
                            generator_images: gens.iter().cloned().zip(imgs.into_iter().cloned()).collect(),
                            subgroup: sub,
                        }));
                    }
                }
            }
            // next assignment, odometer style
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < targets.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
    }
    Ok(None)
}

/// Extends generator images to a map on the whole group, failing when the
/// assignment is not a homomorphism.
fn extend_homomorphism(g: &PermGroup, gens: &[Perm], imgs: &[&Perm], h_degree: usize) -> Option<HashMap<Perm, Perm>> {
    let mut map = HashMap::new();
    let id = Perm::identity(g.degree);
    map.insert(id.clone(), Perm::identity(h_degree));
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        let fx = map[&x].clone();
        for (s, fs) in gens.iter().zip(imgs) {
            let y = s.compose(&x);
            let fy = fs.compose(&fx);
            match map.get(&y) {
                Some(existing) if *existing != fy => return None,
                Some(_) => {}
                None => {
                    map.insert(y.clone(), fy);
                    queue.push_back(y);
                }
            }
        }
    }
    // closure under generators is enough for a finite group, but check the
    // relation on all pairs to be safe
    let elems: Vec<&Perm> = g.elements.iter().collect();
    let ok = elems
        .iter()
        .all(|x| elems.iter().all(|y| map[&x.compose(y)] == map[*x].compose(&map[*y])));
    ok.then_some(map)
}

/// `f⁻¹(H)` for a map `f` defined on every element of `g`.
pub fn preimage(g: &PermGroup, f: impl Fn(&Perm) -> Perm, h: &PermGroup) -> PermGroup {
    PermGroup {
        degree: g.degree,
        gens: vec![],
        elements: g.elements.iter().filter(|x| h.contains(&f(x))).cloned().collect(),
    }
    .with_generators()
}
