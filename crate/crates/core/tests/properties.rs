use proptest::prelude::*;

use flatsharp::backforth::{compute_f_infinity, orbit_oracle, validate_sharp};
use flatsharp::flat::{check_flat_axioms, element_of, eval_flat, flatten, hausdorff_check, translate, FlatStructure};
use flatsharp::groups::{code_of, generate, group_of_code, is_sharp_code, Perm};
use flatsharp::reconstruct::{reconstruct, roundtrip_check};
use flatsharp::reductions::{padding_violation, recover_order, Graph, SparsePerm, Tree};
use flatsharp::structures::{eval_formula, FinStructure, Formula};
use flatsharp::tuples;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Structures on up to three points with one unary and one binary relation.
fn small_structure() -> impl Strategy<Value = FinStructure> {
    (1usize..=3, any::<u8>(), any::<u16>()).prop_map(|(size, pm, em)| {
        let p: Vec<Vec<usize>> = (0..size).filter(|i| pm >> i & 1 == 1).map(|i| vec![i]).collect();
        let e: Vec<Vec<usize>> = tuples::all(size, 2).enumerate().filter(|(i, _)| em >> i & 1 == 1).map(|(_, t)| t).collect();
        let pr: Vec<&[usize]> = p.iter().map(Vec::as_slice).collect();
        let er: Vec<&[usize]> = e.iter().map(Vec::as_slice).collect();
        FinStructure::relational(size, &[("P", 1, &pr), ("E", 2, &er)]).unwrap()
    })
}

fn perm(degree: usize) -> impl Strategy<Value = Perm> {
    Just((0..degree).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Perm::new(v).unwrap())
}

/// Padded trees built from random shapes, each child shape repeated `p`
/// times.
fn padded_tree() -> impl Strategy<Value = Tree> {
    prop::collection::vec(0usize..3, 1..4).prop_map(|shape| {
        let p = 3;
        let mut parent = vec![None];
        // every node at depth i gets p subtree children and p * shape[i] leaves
        fn grow(parent: &mut Vec<Option<usize>>, at: usize, shape: &[usize], p: usize) {
            let Some((&extra, rest)) = shape.split_first() else { return };
            for _ in 0..p * extra {
                parent.push(Some(at));
            }
            if rest.is_empty() {
                return;
            }
            for _ in 0..p {
                parent.push(Some(at));
                let child = parent.len() - 1;
                grow(parent, child, rest, p);
            }
        }
        grow(&mut parent, 0, &shape, p);
        Tree::new(parent).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn f_infinity_is_the_orbit_partition(m in small_structure(), n_max in 1usize..=3) {
        let s = compute_f_infinity(&m, n_max).unwrap();
        prop_assert_eq!(&s, &orbit_oracle(&m, n_max).unwrap());
        prop_assert!(validate_sharp(&m, &s).is_ok());
    }

    #[test]
    fn flattenings_are_flat_hausdorff_and_reconstructible(m in small_structure()) {
        let n_max = m.size + 1;
        let s = compute_f_infinity(&m, n_max).unwrap();
        let b = flatten(&m, &s).unwrap();
        prop_assert!(check_flat_axioms(&b).passed());
        prop_assert!(hausdorff_check(&b).unwrap().hausdorff);
        prop_assert!(roundtrip_check(&b).unwrap().ok);
        let again = FlatStructure::from_json(&b.to_json()).unwrap();
        prop_assert_eq!(&again, &b);
        prop_assert_eq!(reconstruct(&again).unwrap().m.size, m.size);
    }

    #[test]
    fn formulas_transfer(m in small_structure(), seed in any::<u64>(), arity in 0usize..=2) {
        let s = compute_f_infinity(&m, 3).unwrap();
        let b = flatten(&m, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = Formula::random(&mut rng, &m.vocab, arity, 3 - arity);
        let flat = translate(&phi, arity).unwrap();
        for t in tuples::all(m.size, arity) {
            prop_assert_eq!(eval_formula(&m, &phi, &t).unwrap(), eval_flat(&b, &flat, element_of(&s, &t)).unwrap());
        }
    }

    #[test]
    fn codes_of_generated_groups_round_trip(gens in prop::collection::vec(perm(4), 0..3)) {
        let g = generate(&gens, 4).unwrap();
        let f = code_of(&g.elements, 4, 4);
        prop_assert!(is_sharp_code(&f));
        prop_assert_eq!(group_of_code(&f, true).unwrap(), g.elements);
    }

    #[test]
    fn sparse_permutations_match_dense(a in perm(6), b in perm(6)) {
        let (sa, sb) = (SparsePerm::from_perm(&a), SparsePerm::from_perm(&b));
        prop_assert_eq!(sa.compose(&sb).to_perm(6), a.compose(&b));
        prop_assert_eq!(sa.inverse().to_perm(6), a.inverse());
    }

    #[test]
    fn padded_trees_reveal_their_order(t in padded_tree(), shuffle in any::<u64>()) {
        prop_assert!(padding_violation(&t, 3).is_none());
        // relabel so the root is not always node 0
        let mut order: Vec<usize> = (0..t.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let mut parent = vec![None; t.len()];
        for (v, p) in t.parent.iter().enumerate() {
            parent[order[v]] = p.map(|p| order[p]);
        }
        let t = Tree::new(parent).unwrap();
        prop_assert_eq!(recover_order(t.len(), &t.automorphism_generators()), t.ancestor_order());
    }

    #[test]
    fn graphs_print_and_parse(k in 1usize..=5, mask in any::<u16>()) {
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        let g = Graph::new(k, pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e)).unwrap();
        prop_assert_eq!(Graph::parse(&g.to_string()).unwrap(), g);
    }
}
