//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use common::Lang;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeindisc::error::Error;
use treeindisc::feq::{build_counterexample, subtree_h, FeqConfig};
use treeindisc::fostructure::{DeltaFormula, Element, Formula, RelStructure, Signature, SplitFormula, VarDecl};
use treeindisc::gen::Gen;
use treeindisc::indisc::{check_based_on, check_indiscernible, check_indiscernible_wrt, IndexShape, ParameterMap};
use treeindisc::modeling::{array_extract, s_extract, str_extract_from_s};
use treeindisc::qftype::{node_code, restriction_preserves_s, similar, IndexLanguage, IndexPoint};
use treeindisc::ramsey_appendix::{
    bound_k, polarized_extract, tree_homogeneous_extract, Coloring, LeveledChains, Selection,
};
use treeindisc::tp_props::{
    adler_reduce, check_ktp, check_ktp1, check_ktp2, check_strong_ntp, check_strong_phi_consistency,
    check_weak_ktp1, consistency_delta, AdlerCase, WitnessSpec,
};
use treeindisc::tree_index::{enumerate_nodes, meet_closure, restrict_tuple, TreeDomain, TreeNode};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn entries(t: &[TreeNode]) -> Vec<Vec<u32>> {
    t.iter().map(|n| n.entries().to_vec()).collect()
}

// 1 ------------------------------------------------------------------------

fn similarity_laws() -> Outcome {
    let d = TreeDomain::open(3, 3).unwrap();
    let nodes = enumerate_nodes(&d);
    let mut all: Vec<Vec<TreeNode>> = Vec::new();
    for t in common::tuples(nodes.len(), 3) {
        all.push(t.iter().map(|&i| nodes[i].clone()).collect());
    }
    let mut classes = 0;
    for (lang, oracle) in [(IndexLanguage::S, Lang::S), (IndexLanguage::Str, Lang::Str)] {
        let mut groups: HashMap<_, Vec<&Vec<TreeNode>>> = HashMap::new();
        for t in &all {
            groups.entry(node_code(t, lang)).or_default().push(t);
        }
        let reps: Vec<&Vec<TreeNode>> = groups.values().map(|g| g[0]).collect();
        for g in groups.values() {
            let r = entries(g[0]);
            for t in g {
                ensure(common::similar_nodes(&r, &entries(t), oracle), || {
                    format!("{lang}: equal codes but oracle differs on {t:?} vs {:?}", g[0])
                })?;
            }
        }
        for (i, a) in reps.iter().enumerate() {
            for b in &reps[i + 1..] {
                ensure(!common::similar_nodes(&entries(a), &entries(b), oracle), || {
                    format!("{lang}: distinct codes but oracle-similar: {a:?} vs {b:?}")
                })?;
            }
        }
        classes += groups.len();
        if lang == IndexLanguage::S {
            for g in groups.values() {
                let r = g[0];
                let cr = meet_closure(r);
                for t in g {
                    ensure(similar(t, r, IndexLanguage::Str), || format!("s-similar not str-similar: {t:?} {r:?}"))?;
                    let ct = meet_closure(t);
                    ensure(
                        similar(&ct, &cr, IndexLanguage::S)
                            && common::similar_nodes(&entries(&ct), &entries(&cr), Lang::S),
                        || format!("closures differ: {t:?} {r:?}"),
                    )?;
                    for n in 0..=d.max_level() {
                        ensure(restriction_preserves_s(t, r, n) == Ok(true), || format!("restriction {n}: {t:?} {r:?}"))?;
                        ensure(
                            common::similar_nodes(&entries(&restrict_tuple(t, n)), &entries(&restrict_tuple(r, n)), Lang::S),
                            || format!("oracle restriction {n}: {t:?} {r:?}"),
                        )?;
                    }
                }
            }
        }
    }
    Ok(format!("{} tuples, {classes} classes in S and str together", all.len()))
}

// 2, 3 --------------------------------------------------------------------

struct Closed {
    m: RelStructure,
    delta: Vec<DeltaFormula>,
    source: ParameterMap,
    output: ParameterMap,
}

fn closed_loop(successes: &mut Vec<Closed>) -> Outcome {
    let (mut ok, mut short) = (0, 0);
    for seed in 0..50u64 {
        let mut g = Gen::new(seed);
        let m = g.structure(8, &[2, 2], 0.5).unwrap();
        let delta = g.delta(&m, 2);
        let a = g.parameter_map(&m, IndexShape::Tree(TreeDomain::open(3, 6).unwrap()), 1).unwrap();
        let target = TreeDomain::open(3, 2).unwrap();
        match s_extract(&m, &a, &delta, 2, &target) {
            Ok(r) => {
                ensure(r.certified(), || format!("seed {seed}: uncertified output"))?;
                ensure(common::indiscernible(&m, &r.output, Lang::S, &delta, 2), || {
                    format!("seed {seed}: oracle finds output not s-indiscernible")
                })?;
                ensure(common::based_on(&m, &r.output, &a, Lang::S, &delta, 2), || {
                    format!("seed {seed}: oracle finds output not s-based on the source")
                })?;
                ok += 1;
                successes.push(Closed { m, delta, source: a, output: r.output });
            }
            Err(Error::InsufficientSource { .. }) => short += 1,
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
    }
    Ok(format!("{ok} certified, {short} insufficient source, 0 certificate failures"))
}

fn anchor_pair() -> Vec<Vec<TreeNode>> {
    vec![vec![TreeNode::root(), TreeNode::from([0])]]
}

fn str_check(m: &RelStructure, c: &ParameterMap, a: &ParameterMap, delta: &[DeltaFormula]) -> Result<(), String> {
    let target = TreeDomain::open(2, 2).unwrap();
    let r = str_extract_from_s(m, c, &anchor_pair(), delta, &target).map_err(|e| e.to_string())?;
    ensure(r.certified(), || "uncertified".into())?;
    let anchors: Vec<Vec<IndexPoint>> =
        anchor_pair().into_iter().map(|t| t.into_iter().map(IndexPoint::Node).collect()).collect();
    let wrt = check_indiscernible_wrt(m, &r.output, IndexLanguage::Str, &anchors, delta).unwrap();
    ensure(wrt.verdict, || "not str-indiscernible w.r.t. the anchor".into())?;
    for src in [c, a] {
        ensure(check_based_on(m, &r.output, src, IndexLanguage::Str, delta, 2).unwrap().verdict, || {
            "not str-based".into()
        })?;
        ensure(common::based_on(m, &r.output, src, Lang::Str, delta, 2), || "oracle: not str-based".into())?;
    }
    Ok(())
}

fn str_pipeline(successes: &[Closed]) -> Outcome {
    for (i, s) in successes.iter().enumerate() {
        str_check(&s.m, &s.output, &s.source, &s.delta).map_err(|e| format!("success {i}: {e}"))?;
    }
    // six-level sources whose parameter depends only on the level
    let d = TreeDomain::open(6, 2).unwrap();
    for seed in 0..5u64 {
        let mut g = Gen::new(100 + seed);
        let m = g.structure(6, &[2], 0.5).unwrap();
        let delta = g.delta(&m, 2);
        let c = ParameterMap::new(&m, IndexShape::Tree(d), |p| vec![p.as_node().unwrap().level() as Element]).unwrap();
        ensure(check_indiscernible(&m, &c, IndexLanguage::S, &delta, 2).unwrap().verdict, || {
            "level-keyed source not s-indiscernible".into()
        })?;
        str_check(&m, &c, &c, &delta).map_err(|e| format!("level-keyed seed {seed}: {e}"))?;
    }
    Ok(format!("{} extracted sources and 5 six-level sources, 0 failures", successes.len()))
}

// 4 ------------------------------------------------------------------------

fn planted_array(seed: u64) -> (RelStructure, Vec<DeltaFormula>, ParameterMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = Signature::new(&["D"], &[("P", &["D"]), ("R", &["D", "D"])]);
    let names = (0..64).map(|i| format!("a{}_{}", i / 8, i % 8)).collect();
    let mut m = RelStructure::new(sig, vec![names]).unwrap();
    let mut rows = [rng.gen_range(0..8u32), rng.gen_range(0..8u32)];
    while rows[0] == rows[1] {
        rows[1] = rng.gen_range(0..8);
    }
    rows.sort();
    let mut block = Vec::new();
    for &r in &rows {
        let mut c = [rng.gen_range(0..8u32), rng.gen_range(0..8u32)];
        while c[0] == c[1] {
            c[1] = rng.gen_range(0..8);
        }
        c.sort();
        block.extend(c.iter().map(|&c| r * 8 + c));
    }
    let planted = |e: u32| block.contains(&e);
    for e in 0..64u32 {
        if planted(e) || rng.gen_bool(0.5) {
            m.insert("P", &[e]).unwrap();
        }
        for f in 0..64u32 {
            let on = if planted(e) && planted(f) {
                e / 8 < f / 8 || (e / 8 == f / 8 && e % 8 < f % 8)
            } else {
                rng.gen_bool(0.5)
            };
            if on {
                m.insert("R", &[e, f]).unwrap();
            }
        }
    }
    let xy = vec![VarDecl::new("x", "D"), VarDecl::new("y", "D")];
    let delta = vec![
        DeltaFormula { vars: xy[..1].to_vec(), formula: Formula::rel("P", &["x"]) },
        DeltaFormula { vars: xy, formula: Formula::rel("R", &["x", "y"]) },
    ];
    let p = ParameterMap::new(&m, IndexShape::Array { rows: 8, cols: 8 }, |q| {
        let c = q.as_cell().unwrap();
        vec![c.row * 8 + c.col]
    })
    .unwrap();
    (m, delta, p)
}

fn array_modeling() -> Outcome {
    let mut slowest = Duration::ZERO;
    for seed in 0..8u64 {
        let (m, delta, a) = planted_array(seed);
        let t = Instant::now();
        let r = array_extract(&m, &a, &delta, 2, 2, 2).map_err(|e| format!("seed {seed}: {e}"))?;
        slowest = slowest.max(t.elapsed());
        ensure(r.certified(), || format!("seed {seed}: uncertified"))?;
        ensure(common::indiscernible(&m, &r.output, Lang::Ar, &delta, 2), || format!("seed {seed}: oracle indisc"))?;
        ensure(common::based_on(&m, &r.output, &a, Lang::Ar, &delta, 2), || format!("seed {seed}: oracle based"))?;
    }
    ensure(slowest < Duration::from_secs(60), || format!("slowest {slowest:?}"))?;
    Ok(format!("8 planted arrays certified, slowest {slowest:.2?}"))
}

// 5 ------------------------------------------------------------------------

fn feq_counterexample() -> Outcome {
    let cfg = FeqConfig::new(4, 2).unwrap();
    let (m, phi, p) = build_counterexample(&cfg, 2, 2).unwrap();
    let spec = |params: &ParameterMap, k| WitnessSpec { formula: phi.clone(), params: params.clone(), k };
    ensure(check_ktp(&m, &spec(&p, 2)).unwrap().verdict, || "counterexample is not 2-TP".into())?;
    let d = *p.shape().tree().unwrap();
    let at = |n: &TreeNode| p.node(n).unwrap().to_vec();
    for leaf in d.level_nodes(d.max_level()) {
        let path: Vec<Vec<Element>> = (0..=leaf.level()).map(|l| at(&leaf.truncate(l))).collect();
        ensure(common::consistent(&m, &phi, &path), || format!("oracle: path to {leaf:?} inconsistent"))?;
    }
    for n in enumerate_nodes(&d).iter().filter(|n| d.is_internal(n)) {
        let kids: Vec<Vec<Element>> = d.children(n).iter().map(at).collect();
        for pair in common::k_subsets(&kids, 2) {
            ensure(!common::consistent(&m, &phi, &pair), || format!("oracle: children of {n:?} consistent"))?;
        }
    }
    let q = subtree_h(&m, &p, 1).unwrap();
    let delta = consistency_delta(&phi, 2);
    ensure(check_based_on(&m, &q, &p, IndexLanguage::Str, &delta, 3).unwrap().verdict, || {
        "stretched copy not str-based".into()
    })?;
    ensure(common::based_on(&m, &q, &p, Lang::Str, &delta, 3), || "oracle: stretched copy not str-based".into())?;
    ensure(check_strong_phi_consistency(&m, &phi, &q, 4).unwrap().verdict, || "not strongly consistent".into())?;
    let tuples: Vec<Vec<Element>> = q.tuples().to_vec();
    for size in 1..=4 {
        for s in common::k_subsets(&tuples, size) {
            ensure(common::consistent(&m, &phi, &s), || format!("oracle: {size}-subset inconsistent"))?;
        }
    }
    for k in 2..=4 {
        ensure(!check_ktp(&m, &spec(&q, k)).unwrap().verdict, || format!("stretched copy is {k}-TP"))?;
    }
    Ok("2-TP source, str-based copy, strongly consistent up to 4, k-TP false for k = 2..4".into())
}

// 6 ------------------------------------------------------------------------

fn adler() -> Outcome {
    // three cells of a row never together, one row may hold two
    let mut three = common::selections(4, 3);
    for r in 0..4u32 {
        for pair in common::k_subsets(&[0u32, 1, 2], 2) {
            let rest: Vec<u32> = (0..4).filter(|&x| x != r).collect();
            let others = common::selections(3, 3);
            for s in others {
                let mut x: Vec<(u32, u32)> = s.iter().map(|&(i, c)| (rest[i as usize], c)).collect();
                x.extend(pair.iter().map(|&c| (r, c)));
                three.push(x);
            }
        }
    }
    // four-column rows, any three cells of each row together
    let four: Vec<Vec<(u32, u32)>> = common::subsets_up_to(4, 3)
        .iter()
        .flat_map(|a| {
            common::subsets_up_to(4, 3).into_iter().map(move |b| {
                a.iter().map(|&c| (0, c)).chain(b.iter().map(|&c| (1, c))).collect::<Vec<_>>()
            })
        })
        .collect();
    let mut notes = Vec::new();
    for (name, rows, cols, sets, k, case) in
        [("3-TP2", 4, 3, three, 3, AdlerCase::RowBlocks), ("4-TP2", 2, 4, four, 4, AdlerCase::PairsConsistent)]
    {
        let (m, phi, p) = common::grid(rows, cols, &sets);
        ensure(common::ktp2(&m, &phi, &p, k), || format!("{name}: fixture is not {k}-TP2"))?;
        let r = adler_reduce(&m, &WitnessSpec { formula: phi, params: p, k }).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.k == 2 && r.report.verdict, || format!("{name}: ended at k = {}", r.k))?;
        ensure(r.steps.first().map(|s| s.case) == Some(case), || format!("{name}: steps {:?}", r.steps))?;
        let recheck = check_ktp2(&m, &WitnessSpec { formula: r.formula.clone(), params: r.params.clone(), k: 2 }).unwrap();
        ensure(recheck.verdict, || format!("{name}: output fails 2-TP2"))?;
        ensure(common::ktp2(&m, &r.formula, &r.params, 2), || format!("{name}: oracle rejects output"))?;
        let IndexShape::Array { rows, cols } = *r.params.shape() else { unreachable!() };
        notes.push(format!("{name} -> 2-TP2 on {rows}x{cols} via {:?}", case));
    }
    Ok(notes.join("; "))
}

// 7 ------------------------------------------------------------------------

fn random_coloring(ground: usize, arity: usize, seed: u64) -> Coloring {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Coloring::from_fn(ground, arity, |_| rng.gen_range(0..2)).unwrap()
}

/// Same chains, and the same order pattern inside each chain.
fn perp_equiv(t: &[usize], u: &[usize], size: usize) -> bool {
    (0..t.len()).all(|i| {
        t[i] / size == u[i] / size
            && (0..t.len()).all(|j| t[i] / size != t[j] / size || t[i].cmp(&t[j]) == u[i].cmp(&u[j]))
    })
}

fn homogeneous_by<T: Clone>(pts: &[T], f: impl Fn(&[T]) -> u32, equiv: impl Fn(&[T], &[T]) -> bool) -> bool {
    let tuples: Vec<Vec<T>> = common::tuples(pts.len(), 2)
        .into_iter()
        .filter(|t| t.len() == 2)
        .map(|t| t.iter().map(|&i| pts[i].clone()).collect())
        .collect();
    tuples.iter().all(|a| tuples.iter().all(|b| !equiv(a, b) || f(a) == f(b)))
}

fn partition_extractors() -> Outcome {
    let chains = LeveledChains::new(vec![6, 6]).unwrap();
    let pos = common::k_subsets(&[0usize, 1, 2, 3, 4, 5], 2);
    let mut found = 0;
    for seed in 0..20u64 {
        let f = random_coloring(12, 2, seed);
        let exists = pos.iter().any(|a| {
            pos.iter().any(|b| {
                let pts: Vec<usize> = a.iter().copied().chain(b.iter().map(|&x| x + 6)).collect();
                homogeneous_by(&pts, |t| f.color(t), |x, y| perp_equiv(x, y, 6))
            })
        });
        match polarized_extract(&chains, &f, 2) {
            Ok(c) => {
                ensure(exists && c.verified, || format!("polarized seed {seed}: oracle has no selection"))?;
                let Selection::Chains(sel) = &c.selection else { return Err("wrong selection kind".into()) };
                let pts: Vec<usize> = sel[0].iter().copied().chain(sel[1].iter().map(|&x| x + 6)).collect();
                ensure(homogeneous_by(&pts, |t| f.color(t), |x, y| perp_equiv(x, y, 6)), || {
                    format!("polarized seed {seed}: oracle rejects {sel:?}")
                })?;
                found += 1;
            }
            Err(Error::InsufficientSource { .. }) => {
                ensure(!exists, || format!("polarized seed {seed}: oracle finds a selection"))?
            }
            Err(e) => return Err(format!("polarized seed {seed}: {e}")),
        }
    }
    let d = TreeDomain::closed(1, 6).unwrap();
    let nodes = enumerate_nodes(&d);
    let index = |n: &TreeNode| nodes.iter().position(|x| x == n).unwrap();
    let kids = common::k_subsets(&(0..6u32).collect::<Vec<_>>(), 2);
    let mut tree_found = 0;
    for seed in 0..20u64 {
        let f = random_coloring(7, 2, 1000 + seed);
        let col = |t: &[TreeNode]| f.color(&t.iter().map(index).collect::<Vec<_>>());
        let sim = |a: &[TreeNode], b: &[TreeNode]| common::similar_nodes(&entries(a), &entries(b), Lang::S);
        let exists = kids.iter().any(|k| {
            let pts: Vec<TreeNode> = std::iter::once(TreeNode::root()).chain(k.iter().map(|&i| TreeNode::from([i]))).collect();
            homogeneous_by(&pts, col, sim)
        });
        match tree_homogeneous_extract(&d, &f, 2) {
            Ok(c) => {
                let Selection::Tree(sel) = &c.selection else { return Err("wrong selection kind".into()) };
                ensure(exists && c.verified && sel.len() == 3 && homogeneous_by(sel, col, sim), || {
                    format!("tree seed {seed}: oracle rejects {sel:?}")
                })?;
                tree_found += 1;
            }
            Err(Error::InsufficientSource { .. }) => {
                ensure(!exists, || format!("tree seed {seed}: oracle finds a subtree"))?
            }
            Err(e) => return Err(format!("tree seed {seed}: {e}")),
        }
    }
    for n in 1..=5 {
        for m in 1..=5 {
            let want = match (n, m) {
                (_, 1) => 0,
                (1, _) => m as u64 - 1,
                _ => bound_k(n - 1, m) + (m * m + m + 4) as u64,
            };
            ensure(bound_k(n, m) == want, || format!("k({n},{m}) = {}", bound_k(n, m)))?;
        }
    }
    Ok(format!("polarized {found}/20 found, tree {tree_found}/20 found, oracle agrees; k(n,m) table exact"))
}

// 8 ------------------------------------------------------------------------

fn random_spec(seed: u64) -> (RelStructure, WitnessSpec) {
    let mut g = Gen::new(5000 + seed);
    let d = TreeDomain::open(3, 3).unwrap();
    if seed.is_multiple_of(3) {
        // sources of the form "below a top node", with a few tuples removed
        let nodes = enumerate_nodes(&d);
        let tops = d.level_nodes(d.max_level());
        let sig = Signature::new(&["B", "N"], &[("Below", &["B", "N"])]);
        let mut m = RelStructure::new(
            sig,
            vec![(0..tops.len()).map(|i| format!("b{i}")).collect(), (0..nodes.len()).map(|i| format!("n{i}")).collect()],
        )
        .unwrap();
        let n0 = tops.len() as Element;
        for (i, t) in tops.iter().enumerate() {
            for (j, n) in nodes.iter().enumerate() {
                if n.is_prefix_of(t) && !g.rng().gen_bool(0.05) {
                    m.insert("Below", &[i as Element, n0 + j as Element]).unwrap();
                }
            }
        }
        let phi = SplitFormula {
            object_vars: vec![VarDecl::new("x", "B")],
            param_vars: vec![VarDecl::new("y", "N")],
            formula: Formula::rel("Below", &["x", "y"]),
        };
        let p = ParameterMap::new(&m, IndexShape::Tree(d), |q| {
            vec![n0 + nodes.iter().position(|n| n == q.as_node().unwrap()).unwrap() as Element]
        })
        .unwrap();
        return (m, WitnessSpec { formula: phi, params: p, k: 2 });
    }
    if seed % 3 == 1 {
        let cfg = FeqConfig::new(4 + (seed as usize / 3) % 2, 2 + (seed as usize / 6) % 2).unwrap();
        let (m, phi, p) = build_counterexample(&cfg, 2, 2).unwrap();
        return (m, WitnessSpec { formula: phi, params: p, k: 2 });
    }
    let m = g.structure(6, &[2], 0.3).unwrap();
    let formula = g.qf_formula(&m, &["x", "y"], 2);
    let phi = SplitFormula { object_vars: vec![VarDecl::new("x", "D")], param_vars: vec![VarDecl::new("y", "D")], formula };
    let p = g.parameter_map(&m, IndexShape::Tree(d), 1).unwrap();
    (m, WitnessSpec { formula: phi, params: p, k: 2 })
}

fn hierarchy() -> Outcome {
    let mut counts = [0usize; 5];
    for seed in 0..30u64 {
        let (m, spec) = random_spec(seed);
        let tp1 = check_ktp1(&m, &spec).unwrap().verdict;
        let weak = check_weak_ktp1(&m, &spec).unwrap().verdict;
        let tp = check_ktp(&m, &spec).unwrap().verdict;
        let strong = check_strong_ntp(&m, &spec, 2).unwrap().verdict;
        ensure(!tp1 || weak, || format!("seed {seed}: TP1 without weak TP1"))?;
        ensure(!weak || tp, || format!("seed {seed}: weak TP1 without TP"))?;
        ensure(!strong || tp, || format!("seed {seed}: strong 2-TP without 2-TP"))?;
        for (c, v) in counts.iter_mut().zip([tp1, weak, tp, strong, true]) {
            *c += v as usize;
        }
    }
    Ok(format!(
        "30 specs: TP1 {}, weak TP1 {}, TP {}, strong TP {}; 0 violations",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

fn main() {
    let mut successes = Vec::new();
    let mut failed = false;
    let mut run = |n: usize, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let out = out.and_then(|s| if el > limit { Err(format!("{s}; took {el:.2?}, limit {limit:?}")) } else { Ok(s) });
        match out {
            Ok(s) => println!("PASS criterion {n}: {s} ({el:.2?})"),
            Err(s) => {
                failed = true;
                println!("FAIL criterion {n}: {s} ({el:.2?})");
            }
        }
    };
    run(1, Duration::from_secs(60), &mut similarity_laws);
    run(2, Duration::from_secs(600), &mut || closed_loop(&mut successes));
    run(3, Duration::from_secs(600), &mut || str_pipeline(&successes));
    run(4, Duration::from_secs(480), &mut array_modeling);
    run(5, Duration::from_secs(60), &mut feq_counterexample);
    run(6, Duration::from_secs(120), &mut adler);
    run(7, Duration::from_secs(300), &mut partition_extractors);
    run(8, Duration::from_secs(600), &mut hierarchy);
    if failed {
        std::process::exit(1);
    }
}
