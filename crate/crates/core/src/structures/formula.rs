use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FinStructure, Vocabulary};
use crate::{Error, Result};

/// Finitary first-order formulas over a relational-plus-constants
/// vocabulary.
///
/// Variables are positional. A formula is read at some arity `n`, meaning
/// its free variables are among `x_0..x_{n-1}`; a quantifier node read at
/// arity `n` binds `x_n` and reads its body at arity `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Rel(usize, Vec<usize>),
    Eq(usize, usize),
    EqConst(usize, usize),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Exists(Box<Formula>),
    Forall(Box<Formula>),
}

impl Formula {
    pub fn exists(body: Formula) -> Formula {
        Formula::Exists(Box::new(body))
    }

    pub fn forall(body: Formula) -> Formula {
        Formula::Forall(Box::new(body))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(body: Formula) -> Formula {
        Formula::Not(Box::new(body))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Rel(..) | Formula::Eq(..) | Formula::EqConst(..) => true,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::Exists(_) | Formula::Forall(_) => false,
        }
    }

    pub fn quantifier_rank(&self) -> usize {
        match self {
            Formula::Rel(..) | Formula::Eq(..) | Formula::EqConst(..) => 0,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::quantifier_rank).max().unwrap_or(0),
            Formula::Not(f) => f.quantifier_rank(),
            Formula::Exists(f) | Formula::Forall(f) => 1 + f.quantifier_rank(),
        }
    }

    /// Checks that every variable is in scope when read at `arity`.
    pub fn check_scope(&self, arity: usize) -> Result<()> {
        let check = |v: usize| {
            if v < arity {
                Ok(())
            } else {
                Err(Error::Scope { var: v, arity })
            }
        };
        match self {
            Formula::Rel(_, vars) => vars.iter().try_for_each(|&v| check(v)),
            Formula::Eq(a, b) => check(*a).and(check(*b)),
            Formula::EqConst(a, _) => check(*a),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|f| f.check_scope(arity)),
            Formula::Not(f) => f.check_scope(arity),
            Formula::Exists(f) | Formula::Forall(f) => f.check_scope(arity + 1),
        }
    }

    /// Truth of a quantifier-free formula given a truth function for atoms.
    pub fn eval_qf(&self, atom: &impl Fn(&Formula) -> bool) -> bool {
        match self {
            Formula::Rel(..) | Formula::Eq(..) | Formula::EqConst(..) => atom(self),
            Formula::And(fs) => fs.iter().all(|f| f.eval_qf(atom)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval_qf(atom)),
            Formula::Not(f) => !f.eval_qf(atom),
            Formula::Exists(_) | Formula::Forall(_) => panic!("eval_qf on a quantified formula"),
        }
    }

    /// A random formula readable at `arity` with quantifier rank at most
    /// `qrank`.
    pub fn random<R: Rng>(rng: &mut R, vocab: &Vocabulary, arity: usize, qrank: usize) -> Formula {
        let choice = rng.gen_range(0..10);
        if qrank > 0 && choice < 4 {
            let body = Formula::random(rng, vocab, arity + 1, qrank - 1);
            return if choice < 2 {
                Formula::exists(body)
            } else {
                Formula::forall(body)
            };
        }
        match choice {
            4 | 5 if qrank > 0 || arity > 0 => {
                let n = rng.gen_range(2..=3);
                let parts = (0..n).map(|_| Formula::random(rng, vocab, arity, qrank)).collect();
                if choice == 4 {
                    Formula::And(parts)
                } else {
                    Formula::Or(parts)
                }
            }
            6 if qrank > 0 || arity > 0 => Formula::not(Formula::random(rng, vocab, arity, qrank)),
            _ => random_atom(rng, vocab, arity),
        }
    }
}

fn random_atom<R: Rng>(rng: &mut R, vocab: &Vocabulary, arity: usize) -> Formula {
    if arity == 0 {
        // no variables in scope: a trivially closed atom
        return Formula::exists(Formula::Eq(0, 0));
    }
    let kinds = 1 + usize::from(!vocab.relations.is_empty()) + usize::from(!vocab.constants.is_empty());
    match rng.gen_range(0..kinds) {
        0 => Formula::Eq(rng.gen_range(0..arity), rng.gen_range(0..arity)),
        1 if !vocab.relations.is_empty() => {
            let r = rng.gen_range(0..vocab.relations.len());
            let vars = (0..vocab.relations[r].arity).map(|_| rng.gen_range(0..arity)).collect();
            Formula::Rel(r, vars)
        }
        _ => Formula::EqConst(rng.gen_range(0..arity), rng.gen_range(0..vocab.constants.len())),
    }
}

/// Tarskian satisfaction of `phi` read at arity `tuple.len()`.
pub fn eval_formula(m: &FinStructure, phi: &Formula, tuple: &[usize]) -> Result<bool> {
    phi.check_scope(tuple.len())?;
    let mut env = tuple.to_vec();
    Ok(eval_in(m, phi, &mut env))
}

fn eval_in(m: &FinStructure, phi: &Formula, env: &mut Vec<usize>) -> bool {
    match phi {
        Formula::Rel(r, vars) => {
            let t: Vec<usize> = vars.iter().map(|&v| env[v]).collect();
            m.holds(*r, &t)
        }
        Formula::Eq(a, b) => env[*a] == env[*b],
        Formula::EqConst(a, c) => env[*a] == m.constants[*c],
        Formula::And(fs) => fs.iter().all(|f| eval_in(m, f, env)),
        Formula::Or(fs) => fs.iter().any(|f| eval_in(m, f, env)),
        Formula::Not(f) => !eval_in(m, f, env),
        Formula::Exists(f) | Formula::Forall(f) => {
            let want = matches!(phi, Formula::Exists(_));
            let mut result = !want;
            for c in 0..m.size {
                env.push(c);
                let v = eval_in(m, f, env);
                env.pop();
                if v == want {
                    result = want;
                    break;
                }
            }
            result
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p3() -> FinStructure {
        FinStructure::relational(3, &[("E", 2, &[&[0, 1], &[1, 0], &[1, 2], &[2, 1]])]).unwrap()
    }

    #[test]
    fn examples() {
        let two = FinStructure::pure_set(2);
        let dup = Formula::exists(Formula::Eq(0, 1));
        assert!(eval_formula(&two, &dup, &[0]).unwrap());
        let adj = Formula::exists(Formula::Rel(0, vec![0, 1]));
        assert!(eval_formula(&p3(), &adj, &[2]).unwrap());
        let all = Formula::forall(Formula::Rel(0, vec![0, 1]));
        assert!(!eval_formula(&p3(), &all, &[0]).unwrap());
    }

    #[test]
    fn scope_error() {
        let phi = Formula::Eq(0, 2);
        assert_eq!(
            eval_formula(&p3(), &phi, &[0, 1]),
            Err(Error::Scope { var: 2, arity: 2 })
        );
    }

    // Independent evaluator: expands every quantifier into the explicit
    // finite disjunction/conjunction of its instances, then evaluates the
    // resulting quantifier-free formula over constants-as-values.
    fn expand(m: &FinStructure, phi: &Formula, env: &[usize]) -> bool {
        match phi {
            Formula::Exists(body) => (0..m.size)
                .map(|c| [env, &[c]].concat())
                .collect::<Vec<_>>()
                .iter()
                .fold(false, |acc, e| acc | expand(m, body, e)),
            Formula::Forall(body) => (0..m.size)
                .map(|c| [env, &[c]].concat())
                .collect::<Vec<_>>()
                .iter()
                .fold(true, |acc, e| acc & expand(m, body, e)),
            Formula::And(fs) => fs.iter().fold(true, |acc, f| acc & expand(m, f, env)),
            Formula::Or(fs) => fs.iter().fold(false, |acc, f| acc | expand(m, f, env)),
            Formula::Not(f) => !expand(m, f, env),
            Formula::Eq(a, b) => env[*a] == env[*b],
            Formula::EqConst(a, c) => env[*a] == m.constants[*c],
            Formula::Rel(r, vars) => m.relations[*r].iter().any(|t| t.iter().zip(vars).all(|(x, &v)| *x == env[v])),
        }
    }

    proptest! {
        #[test]
        fn agrees_with_expansion(seed in 0u64..10_000, arity in 0usize..3, q in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = p3();
            m.vocab.constants.push("c".into());
            m.constants.push(1);
            let phi = Formula::random(&mut rng, &m.vocab, arity, q);
            prop_assert!(phi.quantifier_rank() <= q.max(1));
            for t in crate::tuples::all(m.size, arity) {
                prop_assert_eq!(eval_formula(&m, &phi, &t).unwrap(), expand(&m, &phi, &t));
            }
        }
    }
}
