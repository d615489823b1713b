use super::FlatStructure;
use crate::structures::Truth;
use crate::tuples;
use crate::{Error, Result};

/// The `f*`-blowup of `a ∈ U_m` for an arbitrary map `f*: n -> m`: the
/// unique `c ∈ U_{m+n}` with `a ≤ c` and `x_{f*(i)} = x_{m+i}` in `Δ_c`.
pub fn blowup(b: &FlatStructure, a: usize, fstar: &[usize]) -> Result<usize> {
    let m = b.arity(a);
    let n = fstar.len();
    if let Some(&bad) = fstar.iter().find(|&&v| v >= m) {
        return Err(Error::Invalid(format!("map value {bad} out of range for arity {m}")));
    }
    if m + n > b.n_max {
        return Err(Error::ArityOverflow {
            needed: m + n,
            n_max: b.n_max,
        });
    }
    let mut found = b.level(m + n).into_iter().filter(|&c| {
        b.le(a, c) && fstar.iter().enumerate().all(|(i, &v)| b.diagram(c).eq(v, m + i) == Truth::True)
    });
    let first = found
        .next()
        .ok_or_else(|| Error::NotFlat(format!("no blowup witness for point {a} along {fstar:?}")))?;
    if let Some(second) = found.next() {
        return Err(Error::Corrupt(format!(
            "two blowup witnesses {first} and {second} for point {a} along {fstar:?}"
        )));
    }
    Ok(first)
}

/// `P^{f*}(a) = P^{v_m}(blowup(a, f*))` where `v_m` shifts by `m`.
pub fn gen_projection(b: &FlatStructure, a: usize, fstar: &[usize]) -> Result<usize> {
    let c = blowup(b, a, fstar)?;
    let shift = tuples::shift(fstar.len(), b.arity(a));
    b.project(c, &shift)
        .ok_or_else(|| Error::NotFlat(format!("point {c} lacks projection {shift:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backforth::compute_f_infinity;
    use crate::flat::{element_of, flatten};
    use crate::structures::FinStructure;

    #[test]
    fn examples() {
        let m = FinStructure::pure_set(2);
        let s = compute_f_infinity(&m, 3).unwrap();
        let b = flatten(&m, &s).unwrap();
        let u1 = element_of(&s, &[0]);
        assert_eq!(blowup(&b, u1, &[0]).unwrap(), element_of(&s, &[0, 0]));
        let pair = element_of(&s, &[0, 1]);
        assert!(matches!(
            blowup(&b, pair, &[0, 1]),
            Err(Error::ArityOverflow { needed: 4, n_max: 3 })
        ));
        assert_eq!(gen_projection(&b, u1, &[0, 0]).unwrap(), element_of(&s, &[0, 0]));

        let s4 = compute_f_infinity(&m, 4).unwrap();
        let b4 = flatten(&m, &s4).unwrap();
        let pair4 = element_of(&s4, &[0, 1]);
        assert_eq!(blowup(&b4, pair4, &[1]).unwrap(), element_of(&s4, &[0, 1, 1]));
        assert_eq!(gen_projection(&b4, pair4, &[1, 0]).unwrap(), b4.project(pair4, &[1, 0]).unwrap());
        assert_eq!(gen_projection(&b4, pair4, &[1, 1]).unwrap(), element_of(&s4, &[0, 0]));
    }
}
