//! Tuple enumeration, mixed-radix encoding and catalogs of index maps.
//!
//! Tuples over a universe of size `m` are enumerated lexicographically with
//! the first coordinate most significant, so the code of a tuple is its
//! position in that enumeration.

/// Number of tuples of length `k` over `m` points.
pub fn count(m: usize, k: usize) -> usize {
    m.pow(k as u32)
}

pub fn encode(tuple: &[usize], m: usize) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * m + x)
}

pub fn decode(mut code: usize, m: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = code % m;
        code /= m;
    }
    out
}

/// All tuples of length `k` over `0..m`, in lexicographic order.
pub fn all(m: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..count(m, k)).map(move |c| decode(c, m, k))
}

/// All injections `k -> n` as value lists, lexicographic.
pub fn injections(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    let mut used = vec![false; n];
    fn rec(k: usize, n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(k, n, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    if k <= n {
        rec(k, n, &mut cur, &mut used, &mut out);
    }
    out
}

/// All functions `n -> m` as value lists, lexicographic.
pub fn functions(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    all(m, n).collect()
}

/// All permutations of `0..n`, lexicographic.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    injections(n, n)
}

pub fn is_injective(map: &[usize]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(map.len());
    map.iter().all(|v| seen.insert(*v))
}

/// The injections into `n`, ordered by source arity and then
/// lexicographically, with a reverse index. This fixes the slot layout of
/// projection tables.
#[derive(Debug, Clone)]
pub struct InjectionCatalog {
    pub n: usize,
    pub maps: Vec<Vec<usize>>,
    index: std::collections::HashMap<Vec<usize>, usize>,
    /// `offsets[k]` is the slot of the first injection `k -> n`, which is the
    /// inclusion `id_{k,n}`.
    offsets: Vec<usize>,
}

impl InjectionCatalog {
    pub fn new(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut maps = Vec::new();
        for k in 0..=n {
            offsets.push(maps.len());
            maps.extend(injections(k, n));
        }
        let index = maps.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        InjectionCatalog { n, maps, index, offsets }
    }

    /// The slot of `id_{k,n}`.
    pub fn prefix_slot(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn slot(&self, map: &[usize]) -> Option<usize> {
        self.index.get(map).copied()
    }
}

/// One catalog per target arity `0..=n_max`.
#[derive(Debug, Clone)]
pub struct Catalogs {
    pub by_arity: Vec<InjectionCatalog>,
    /// `compose[n][g][f]` is the slot of `g ∘ f` in the catalog for `n`,
    /// where `f` is a slot of the catalog for the source arity of `g`.
    compose: Vec<Vec<Vec<usize>>>,
}

impl Catalogs {
    pub fn new(n_max: usize) -> Self {
        let by_arity: Vec<InjectionCatalog> = (0..=n_max).map(InjectionCatalog::new).collect();
        let compose = by_arity
            .iter()
            .map(|outer| {
                outer
                    .maps
                    .iter()
                    .map(|g| {
                        by_arity[g.len()]
                            .maps
                            .iter()
                            .map(|f| outer.slot(&compose(g, f)).expect("composite of injections"))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Catalogs { by_arity, compose }
    }

    pub fn get(&self, n: usize) -> &InjectionCatalog {
        &self.by_arity[n]
    }

    /// Slots of `g ∘ f` for every `f` into the source of the map at slot `g`.
    pub fn composites(&self, n: usize, g: usize) -> &[usize] {
        &self.compose[n][g]
    }
}

pub fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// The shift `v_l : n -> n + l`, `i ↦ l + i`.
pub fn shift(n: usize, l: usize) -> Vec<usize> {
    (0..n).map(|i| l + i).collect()
}

/// `outer ∘ inner`: `i ↦ outer[inner[i]]`.
pub fn compose(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&i| outer[i]).collect()
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_roundtrip() {
        for t in all(3, 3) {
            assert_eq!(decode(encode(&t, 3), 3, 3), t);
        }
        assert_eq!(all(2, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn injection_counts() {
        assert_eq!(injections(2, 3).len(), 6);
        assert_eq!(injections(0, 3), vec![Vec::<usize>::new()]);
        assert!(injections(3, 2).is_empty());
        assert_eq!(InjectionCatalog::new(4).len(), 1 + 4 + 12 + 24 + 24);
        assert_eq!(functions(2, 0).len(), 0);
        assert_eq!(functions(0, 0).len(), 1);
    }

    #[test]
    fn compose_order() {
        // (5,7,9) restricted along [2,0] then [1]: [1] picks index 0 of [2,0].
        assert_eq!(compose(&[2, 0], &[1]), vec![0]);
    }
}
