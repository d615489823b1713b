use serde::{Deserialize, Serialize};

use super::FlatStructure;
use crate::structures::{Formula, Truth};
use crate::{Error, Result};

/// A formula in one point variable `z` ranging over `U_arity`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlatFormula {
    /// A quantifier-free formula in `x_0..x_{arity-1}`, true at `z` when the
    /// diagram of `z` makes it true.
    Leaf { arity: usize, formula: Formula },
    And(Vec<FlatFormula>),
    Or(Vec<FlatFormula>),
    Not(Box<FlatFormula>),
    /// Some `w ∈ U_{arity+1}` with `P^{id}(w) = z` satisfies the body.
    Exists { arity: usize, body: Box<FlatFormula> },
}

impl FlatFormula {
    pub fn depth(&self) -> usize {
        match self {
            FlatFormula::Leaf { .. } => 0,
            FlatFormula::And(fs) | FlatFormula::Or(fs) => fs.iter().map(FlatFormula::depth).max().unwrap_or(0),
            FlatFormula::Not(f) => f.depth(),
            FlatFormula::Exists { body, .. } => 1 + body.depth(),
        }
    }
}

/// The ♭-translation of `phi` read at `arity`. Maximal quantifier-free
/// subformulas become diagram tests and `∀` is rewritten as `¬∃¬`.
pub fn translate(phi: &Formula, arity: usize) -> Result<FlatFormula> {
    phi.check_scope(arity)?;
    Ok(go(phi, arity))
}

fn go(phi: &Formula, arity: usize) -> FlatFormula {
    if phi.is_quantifier_free() {
        return FlatFormula::Leaf {
            arity,
            formula: phi.clone(),
        };
    }
    match phi {
        Formula::And(fs) => FlatFormula::And(fs.iter().map(|f| go(f, arity)).collect()),
        Formula::Or(fs) => FlatFormula::Or(fs.iter().map(|f| go(f, arity)).collect()),
        Formula::Not(f) => FlatFormula::Not(Box::new(go(f, arity))),
        Formula::Exists(body) => FlatFormula::Exists {
            arity,
            body: Box::new(go(body, arity + 1)),
        },
        Formula::Forall(body) => {
            let inner = Formula::not((**body).clone());
            FlatFormula::Not(Box::new(FlatFormula::Exists {
                arity,
                body: Box::new(go(&inner, arity + 1)),
            }))
        }
        _ => unreachable!("atoms are quantifier-free"),
    }
}

/// Truth of `phi` at the point `a`.
pub fn eval_flat(b: &FlatStructure, phi: &FlatFormula, a: usize) -> Result<bool> {
    let ext = b.extension_index();
    eval(b, &ext, phi, a)
}

pub(crate) fn eval(b: &FlatStructure, ext: &[Vec<usize>], phi: &FlatFormula, a: usize) -> Result<bool> {
    match phi {
        FlatFormula::Leaf { arity, formula } => {
            check_arity(b, a, *arity)?;
            let d = b.diagram(a);
            Ok(formula.eval_qf(&|atom| {
                let t = match atom {
                    Formula::Rel(r, vars) => d.rel(*r, vars),
                    Formula::Eq(i, j) => d.eq(*i, *j),
                    Formula::EqConst(i, c) => d.is_const(*c, *i),
                    _ => unreachable!(),
                };
                t == Truth::True
            }))
        }
        FlatFormula::And(fs) => {
            for f in fs {
                if !eval(b, ext, f, a)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        FlatFormula::Or(fs) => {
            for f in fs {
                if eval(b, ext, f, a)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        FlatFormula::Not(f) => Ok(!eval(b, ext, f, a)?),
        FlatFormula::Exists { arity, body } => {
            check_arity(b, a, *arity)?;
            if arity + 1 > b.n_max {
                return Err(Error::ArityOverflow {
                    needed: arity + 1,
                    n_max: b.n_max,
                });
            }
            for &w in &ext[a] {
                if eval(b, ext, body, w)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

fn check_arity(b: &FlatStructure, a: usize, arity: usize) -> Result<()> {
    if b.arity(a) != arity {
        return Err(Error::LengthMismatch {
            expected: arity,
            found: b.arity(a),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backforth::compute_f_infinity;
    use crate::flat::{element_of, flatten};
    use crate::structures::FinStructure;

    #[test]
    fn translation_shapes() {
        let atom = Formula::Rel(0, vec![0, 1]);
        assert!(matches!(translate(&atom, 2).unwrap(), FlatFormula::Leaf { arity: 2, .. }));
        let dup = Formula::exists(Formula::Eq(0, 1));
        match translate(&dup, 1).unwrap() {
            FlatFormula::Exists { arity: 1, body } => {
                assert!(matches!(*body, FlatFormula::Leaf { arity: 2, .. }))
            }
            other => panic!("{other:?}"),
        }
        let neg = Formula::not(dup.clone());
        assert!(matches!(translate(&neg, 1).unwrap(), FlatFormula::Not(_)));
        assert!(translate(&Formula::Eq(0, 3), 2).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let m = FinStructure::pure_set(2);
        let s = compute_f_infinity(&m, 2).unwrap();
        let b = flatten(&m, &s).unwrap();
        let u1 = element_of(&s, &[0]);
        let other = Formula::exists(Formula::not(Formula::Eq(0, 1)));
        assert!(eval_flat(&b, &translate(&other, 1).unwrap(), u1).unwrap());
        let all_eq = Formula::forall(Formula::Eq(0, 1));
        assert!(!eval_flat(&b, &translate(&all_eq, 1).unwrap(), u1).unwrap());
        let nonempty = Formula::exists(Formula::Eq(0, 0));
        assert!(eval_flat(&b, &translate(&nonempty, 0).unwrap(), 0).unwrap());
        let deep = Formula::exists(Formula::exists(Formula::Eq(0, 2)));
        assert!(matches!(
            eval_flat(&b, &translate(&deep, 1).unwrap(), u1),
            Err(Error::ArityOverflow { .. })
        ));
    }
}
