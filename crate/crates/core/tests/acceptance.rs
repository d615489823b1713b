//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p flatsharp --test acceptance`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flatsharp::backforth::{compute_f_infinity, orbit_oracle};
use flatsharp::corpus::{self, SharpInstance, DEFAULT_SEED};
use flatsharp::flat::{
    blowup, check_flat_axioms, element_of, eval_flat, flatten, gen_projection, hausdorff_check, translate, FlatStructure,
};
use flatsharp::groups::{
    automorphism_group, automorphism_group_brute, bireduction_check, code_of, divides_check, exponent, fix, generate,
    group_of_code, induced_flat_action, is_sharp_code, is_subgroup, subgroups, Perm, PermGroup, SubgroupCode,
};
use flatsharp::reconstruct::{
    cmap, hausdorff_oracle, is_surjective_homomorphism, canonical_form, reconstruct_with, roundtrip_check,
    roundtrip_sharp, ChainOrder,
};
use flatsharp::reductions::{
    blind_conjugacy, build_cross_cut, exponent_experiment, graph_to_padded_tree, order_method_conjugacy,
    quotient_coloring, structure_isomorphism, CrossCutSpec, FsSide, Tree,
};
use flatsharp::structures::{eval_formula, Formula};
use flatsharp::tuples;

type Outcome = Result<String, String>;

/// Corpus pairs with `n_max = |M| + 1`, flattened once.
struct Ctx {
    pairs: Vec<SharpInstance>,
    flats: Vec<FlatStructure>,
}

impl Ctx {
    fn new() -> Self {
        let pairs = corpus::sharp_pairs(DEFAULT_SEED, 1).expect("corpus builds");
        let flats = pairs.iter().map(|p| flatten(&p.structure, &p.system).expect("corpus flattens")).collect();
        Ctx { pairs, flats }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    check(start.elapsed() < limit, || format!("took {:.1?}, limit {limit:?}", start.elapsed()))
}

fn f_infinity_oracle(_: &Ctx) -> Outcome {
    let start = Instant::now();
    let mut n = 0;
    for inst in corpus::structures(DEFAULT_SEED).iter().filter(|i| i.structure.size <= 4) {
        let m = &inst.structure;
        let (fast, slow) = (compute_f_infinity(m, 3).map_err(|e| e.to_string())?, orbit_oracle(m, 3).map_err(|e| e.to_string())?);
        check(fast == slow, || format!("{}: partitions differ", inst.name))?;
        n += 1;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{n} structures agree in {:.1?}", start.elapsed()))
}

fn flattening_soundness(ctx: &Ctx) -> Outcome {
    let mut skipped = 0;
    for (p, b) in ctx.pairs.iter().zip(&ctx.flats) {
        let r = check_flat_axioms(b);
        if let Some(f) = r.failure {
            return Err(format!("{}: {f}", p.name));
        }
        skipped += r.skipped.values().sum::<usize>();
    }
    Ok(format!("{} flattenings pass, {skipped} bounded instances skipped", ctx.pairs.len()))
}

fn transfer(_: &Ctx) -> Outcome {
    let mut pairs = Vec::new();
    for inst in corpus::structures(DEFAULT_SEED) {
        let n = (inst.structure.size + 1).max(3);
        for p in corpus::sharp_systems(&inst, n).map_err(|e| e.to_string())? {
            let b = flatten(&p.structure, &p.system).map_err(|e| e.to_string())?;
            pairs.push((p, b));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut checks = 0;
    for i in 0..500 {
        let (p, b) = &pairs[i % pairs.len()];
        let m = &p.structure;
        let arity = rng.gen_range(0..=3);
        let phi = Formula::random(&mut rng, &m.vocab, arity, 3 - arity);
        let flat = translate(&phi, arity).map_err(|e| e.to_string())?;
        for t in tuples::all(m.size, arity) {
            let direct = eval_formula(m, &phi, &t).map_err(|e| e.to_string())?;
            let via = eval_flat(b, &flat, element_of(&p.system, &t)).map_err(|e| e.to_string())?;
            check(direct == via, || format!("{}: {phi:?} at {t:?}", p.name))?;
            checks += 1;
        }
    }
    Ok(format!("500 formulas, {checks} evaluations agree"))
}

fn round_trips(ctx: &Ctx) -> Outcome {
    for (p, b) in ctx.pairs.iter().zip(&ctx.flats) {
        let r = roundtrip_check(b).map_err(|e| format!("{}: {e}", p.name))?;
        check(r.ok, || format!("{}: {:?}", p.name, r.reason))?;
        check(roundtrip_sharp(&p.structure, &p.system).map_err(|e| e.to_string())?, || {
            format!("{}: sharp round trip", p.name)
        })?;
        let r1 = reconstruct_with(b, ChainOrder::Least).map_err(|e| e.to_string())?;
        let r2 = reconstruct_with(b, ChainOrder::Greatest).map_err(|e| e.to_string())?;
        let iso = flatsharp::groups::sharp_isomorphism(&r1.m, &r1.s, &r2.m, &r2.s).map_err(|e| e.to_string())?;
        check(iso.is_some(), || format!("{}: chain orders disagree", p.name))?;
    }
    Ok(format!("{} instances round-trip both ways", ctx.pairs.len()))
}

fn hausdorff(ctx: &Ctx) -> Outcome {
    let mut count = 0;
    for (p, b) in ctx.pairs.iter().zip(&ctx.flats) {
        let h = hausdorff_check(b).map_err(|e| e.to_string())?.hausdorff;
        let finf = compute_f_infinity(&p.structure, p.system.n_max).map_err(|e| e.to_string())?;
        check(h == (finf == p.system), || format!("{}: refinement says {h}", p.name))?;
        check(h == hausdorff_oracle(b).map_err(|e| e.to_string())?, || format!("{}: oracle disagrees", p.name))?;
        let map = cmap(b).map_err(|e| e.to_string())?;
        let c = canonical_form(b).map_err(|e| e.to_string())?;
        check(is_surjective_homomorphism(b, &c, &map), || format!("{}: cmap is not a homomorphism", p.name))?;
        let injective = map.iter().collect::<BTreeSet<_>>().len() == map.len();
        check(injective == h, || format!("{}: cmap injective = {injective}", p.name))?;
        count += usize::from(h);
    }
    Ok(format!("{count} of {} instances Hausdorff; all characterizations agree", ctx.pairs.len()))
}

fn code_round_trips(_: &Ctx) -> Outcome {
    let start = Instant::now();
    let mut n_sub = 0;
    for n in 1..=4 {
        for c in subgroups(&PermGroup::symmetric(n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())? {
            let f = code_of(&c.elements, n, n);
            let back = group_of_code(&f, true).map_err(|e| e.to_string())?;
            check(back == c.elements, || format!("Sym({n}): C_F(C) != C"))?;
            check(is_sharp_code(&f), || format!("Sym({n}): code of a subgroup is not sharp"))?;
            let again = code_of(&back, n, n);
            check(again == f, || format!("Sym({n}): F(C_F) != F"))?;
            n_sub += 1;
        }
    }
    let all: Vec<Perm> = PermGroup::symmetric(3).map_err(|e| e.to_string())?.elements.into_iter().collect();
    for mask in 0u32..64 {
        let subset: BTreeSet<Perm> = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p.clone()).collect();
        let sharp = is_sharp_code(&code_of(&subset, 3, 3));
        check(sharp == is_subgroup(&subset, 3), || format!("subset {mask:#b}: sharp = {sharp}"))?;
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("{n_sub} subgroups and 64 subsets of Sym(3) in {:.1?}", start.elapsed()))
}

fn fix_and_extension(ctx: &Ctx) -> Outcome {
    let mut pairs_checked = 0;
    for p in &ctx.pairs {
        let (m, s) = (&p.structure, &p.system);
        let fixed = fix(m, s).map_err(|e| e.to_string())?;
        let from_code = group_of_code(&SubgroupCode::from_system(s), true).map_err(|e| e.to_string())?;
        check(fixed.elements == from_code, || format!("{}: Fix != C_F", p.name))?;
        check(fixed.elements == p.subgroup.elements, || format!("{}: Fix != H", p.name))?;
        for k in 0..=s.n_max {
            for class in s.members(k) {
                let a = &class[0];
                for b in &class {
                    let ok = fixed.elements.iter().any(|g| g.apply_tuple(a) == *b);
                    check(ok, || format!("{}: ({a:?},{b:?}) extends to no automorphism", p.name))?;
                    pairs_checked += 1;
                }
            }
        }
    }
    Ok(format!("{} instances; {pairs_checked} related pairs extend", ctx.pairs.len()))
}

fn bireduction(_: &Ctx) -> Outcome {
    let mut n = 0;
    for inst in corpus::structures(DEFAULT_SEED).iter().filter(|i| i.structure.size <= 4) {
        let systems = corpus::sharp_systems(inst, inst.structure.size + 1).map_err(|e| e.to_string())?;
        for a in &systems {
            for b in &systems {
                let r = bireduction_check(&inst.structure, &a.system, &b.system).map_err(|e| e.to_string())?;
                check(r.agree, || format!("{} vs {}: {r:?}", a.name, b.name))?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} subgroup pairs agree"))
}

fn induced_action(ctx: &Ctx) -> Outcome {
    for p in &ctx.pairs {
        let r = induced_flat_action(&p.structure, &p.system).map_err(|e| e.to_string())?;
        check(r.homomorphism && r.surjective, || {
            format!("{}: homomorphism {} surjective {}", p.name, r.homomorphism, r.surjective)
        })?;
    }
    Ok(format!("{} instances: action is onto the flat automorphisms", ctx.pairs.len()))
}

fn relabel(t: &Tree, perm: &[usize]) -> Tree {
    let mut parent = vec![None; t.len()];
    for (v, p) in t.parent.iter().enumerate() {
        parent[perm[v]] = p.map(|p| perm[p]);
    }
    Tree::new(parent).expect("relabeling keeps a tree")
}

fn perm_group(t: &Tree) -> PermGroup {
    let gens: Vec<Perm> = t.automorphism_generators().iter().map(|g| g.to_perm(t.len())).collect();
    generate(&gens, t.len()).expect("small tree group")
}

fn fs_pipeline(_: &Ctx) -> Outcome {
    let small: Vec<FsSide> = corpus::small_graphs().iter().map(|g| FsSide::new(g, 3)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for a in &small {
        check(a.order_matches, || format!("{}: order not recovered", a.graph))?;
        for b in &small {
            let r = a.compare(b).map_err(|e| e.to_string())?;
            check(r.agree, || format!("{} vs {}: {r:?}", a.graph, b.graph))?;
            compared += 1;
        }
    }
    for (g, h) in corpus::sampled_graph_pairs(DEFAULT_SEED, 20) {
        let (a, b) = (FsSide::new(&g, 3).map_err(|e| e.to_string())?, FsSide::new(&h, 3).map_err(|e| e.to_string())?);
        check(a.order_matches && b.order_matches, || format!("{g} / {h}: order not recovered"))?;
        let r = a.compare(&b).map_err(|e| e.to_string())?;
        check(r.agree, || format!("{g} vs {h}: {r:?}"))?;
        compared += 1;
    }
    // generated trees of at most 8 nodes, with seeded relabelings
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let one = flatsharp::reductions::Graph::new(1, []).map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for p in 3..=7 {
        let t = graph_to_padded_tree(&one, p).map_err(|e| e.to_string())?.tree;
        let mut perm: Vec<usize> = (0..t.len()).collect();
        perm.shuffle(&mut rng);
        trees.push(relabel(&t, &perm));
        trees.push(t);
    }
    let mut blind_pairs = 0;
    for s in &trees {
        check(flatsharp::reductions::recover_order(s.len(), &s.automorphism_generators()) == s.ancestor_order(), || {
            format!("{:?}: order not recovered", s.parent)
        })?;
        for t in &trees {
            let blind = blind_conjugacy(&perm_group(s), &perm_group(t)).map_err(|e| e.to_string())?.is_some();
            let method = order_method_conjugacy(s.len(), &s.automorphism_generators(), t.len(), &t.automorphism_generators())
                .map_err(|e| e.to_string())?
                .is_some();
            check(blind == method, || format!("{:?} vs {:?}: blind {blind}, method {method}", s.parent, t.parent))?;
            blind_pairs += 1;
        }
    }
    Ok(format!("{compared} graph pairs agree; blind search agrees on {blind_pairs} tree pairs"))
}

fn cross_cut(_: &Ctx) -> Outcome {
    let mut specs = Vec::new();
    for n in 1..=3u32 {
        for mask in 0..1usize << n {
            specs.push((0..n as usize).map(|i| 2 + (mask >> i & 1)).collect::<Vec<_>>());
        }
    }
    for h in &specs {
        let r = exponent_experiment(&CrossCutSpec::atomic(h.clone()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        check(r.exponent_divides, || format!("{h:?}: exponent {} does not divide {}", r.exponent, r.k_factorial))?;
        check(!r.cyclic_divides, || format!("{h:?}: C_{} divides", r.prime))?;
    }
    for (h, order, e) in [(vec![2, 2], 4, 2), (vec![2, 3], 12, 6)] {
        let m = build_cross_cut(&CrossCutSpec::atomic(h.clone()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let brute = automorphism_group_brute(&m).map_err(|e| e.to_string())?;
        check(brute.order() == order && exponent(&brute) == e, || format!("{h:?}: brute force disagrees"))?;
        let fast = automorphism_group(&m).map_err(|e| e.to_string())?;
        check(fast.elements == brute.elements, || format!("{h:?}: automorphism search disagrees"))?;
        let q = 5;
        let cq = generate(&[Perm::new((0..q).map(|i| (i + 1) % q).collect()).unwrap()], q).unwrap();
        check(divides_check(&brute, &cq).map_err(|e| e.to_string())?.is_none(), || format!("{h:?}: C_5 divides"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut positives = 0;
    for h in [vec![2, 2], vec![2, 3]] {
        let cells: usize = h.iter().product();
        for i in 0..20 {
            let m1: Vec<usize> = (0..cells).map(|_| rng.gen_range(1..=2)).collect();
            let m2: Vec<usize> = if i % 2 == 0 {
                // a symmetry of the spec: permute the classes of each relation
                let perms: Vec<Vec<usize>> = h.iter().map(|&k| {
                    let mut p: Vec<usize> = (0..k).collect();
                    p.shuffle(&mut rng);
                    p
                }).collect();
                let spec = CrossCutSpec::atomic(h.clone()).unwrap();
                let mut out = vec![0; cells];
                for (c, &m) in m1.iter().enumerate() {
                    let coords = spec.cell(c);
                    let target = coords.iter().zip(&perms).zip(&h).fold(0, |acc, ((&x, p), &k)| acc * k + p[x]);
                    out[target] = m;
                }
                out
            } else {
                (0..cells).map(|_| rng.gen_range(1..=2)).collect()
            };
            let a = build_cross_cut(&CrossCutSpec::new(h.clone(), m1.clone()).unwrap()).map_err(|e| e.to_string())?;
            let b = build_cross_cut(&CrossCutSpec::new(h.clone(), m2.clone()).unwrap()).map_err(|e| e.to_string())?;
            let iso = structure_isomorphism(&a, &b).is_some();
            let (qa, qb) = (quotient_coloring(&a).map_err(|e| e.to_string())?, quotient_coloring(&b).map_err(|e| e.to_string())?);
            check(iso == structure_isomorphism(&qa, &qb).is_some(), || format!("{h:?}: {m1:?} vs {m2:?}"))?;
            positives += usize::from(iso);
        }
    }
    Ok(format!("{} atomic specs bounded; 40 quotient pairs agree ({positives} isomorphic)", specs.len()))
}

fn blowups(ctx: &Ctx) -> Outcome {
    let (mut witnesses, mut compositions) = (0, 0);
    for (p, b) in ctx.pairs.iter().zip(&ctx.flats) {
        let s = &p.system;
        let nm = b.n_max;
        for ar in 0..=nm {
            // one representative tuple per point
            for class in s.members(ar) {
                let t = class[0].clone();
                let a = element_of(s, &t);
                for n in 0..=nm - ar {
                    for f in tuples::functions(n, ar) {
                        blowup(b, a, &f).map_err(|e| format!("{}: {e}", p.name))?;
                        let gp = gen_projection(b, a, &f).map_err(|e| e.to_string())?;
                        let pulled: Vec<usize> = f.iter().map(|&i| t[i]).collect();
                        check(gp == element_of(s, &pulled), || format!("{}: P^{f:?} of {t:?}", p.name))?;
                        witnesses += 1;
                        for l in 0..=nm.saturating_sub(n.max(ar)) {
                            for g in tuples::functions(l, n) {
                                let fg: Vec<usize> = g.iter().map(|&i| f[i]).collect();
                                let lhs = gen_projection(b, gp, &g).map_err(|e| e.to_string())?;
                                let rhs = gen_projection(b, a, &fg).map_err(|e| e.to_string())?;
                                check(lhs == rhs, || format!("{}: composition at {t:?}, {f:?}, {g:?}", p.name))?;
                                compositions += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{witnesses} unique blowups, {compositions} compositions"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let ctx = Ctx::new();
    let criteria: [(&str, fn(&Ctx) -> Outcome); 12] = [
        ("F-infinity matches the orbit oracle", f_infinity_oracle),
        ("flattenings satisfy the flat axioms", flattening_soundness),
        ("formulas transfer to flattenings", transfer),
        ("reconstruction round trips", round_trips),
        ("Hausdorff characterization", hausdorff),
        ("code round trips and sharpness", code_round_trips),
        ("Fix equals C_F; pairs extend to automorphisms", fix_and_extension),
        ("sharp isomorphism iff conjugate fix groups", bireduction),
        ("induced action is onto", induced_action),
        ("graph to code pipeline", fs_pipeline),
        ("cross-cut exponent bound and quotients", cross_cut),
        ("blowup uniqueness and composition", blowups),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&ctx))).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{:.1?}]", i + 1, t.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{:.1?}]", i + 1, t.elapsed());
            }
        }
    }
    println!("{} of 12 criteria passed in {:.1?}", 12 - failed, start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
