#![allow(dead_code)]

//! Reference implementations used to cross-check the library: similarity
//! from relation tables over the meet closure, Δ-types through the plain
//! recursive evaluator, and brute-force indiscernibility and basedness.

use std::collections::BTreeMap;

use treeindisc::fostructure::{eval, DeltaFormula, Element, Formula, RelStructure, Signature, SplitFormula, VarDecl};
use treeindisc::indisc::{IndexShape, ParameterMap};
use treeindisc::qftype::IndexPoint;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Lang {
    S,
    Str,
    Ar,
}

fn is_prefix(a: &[u32], b: &[u32]) -> bool {
    a.len() <= b.len() && b[..a.len()] == *a
}

fn meet(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).take_while(|(x, y)| x == y).map(|(x, _)| *x).collect()
}

/// The tuple followed by all its pairwise meets, one term per index pair.
fn terms(t: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = t.to_vec();
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            out.push(meet(&t[i], &t[j]));
        }
    }
    out
}

/// Same quantifier-free type of the tuples in the meet-closed expansion.
pub fn similar_nodes(t: &[Vec<u32>], u: &[Vec<u32>], lang: Lang) -> bool {
    if t.len() != u.len() {
        return false;
    }
    let (a, b) = (terms(t), terms(u));
    let n = a.len();
    for i in 0..n {
        if lang == Lang::S && a[i].len() != b[i].len() {
            return false;
        }
        for j in 0..n {
            let same = |f: &dyn Fn(&[u32], &[u32]) -> bool| f(&a[i], &a[j]) == f(&b[i], &b[j]);
            if !same(&|x, y| x == y) || !same(&|x, y| is_prefix(x, y) && x != y) || !same(&|x, y| x < y) {
                return false;
            }
            if lang == Lang::Str && !same(&|x, y| x.len() < y.len()) {
                return false;
            }
            let (ma, mb) = (meet(&a[i], &a[j]), meet(&b[i], &b[j]));
            for k in 0..n {
                if (ma == a[k]) != (mb == b[k]) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn similar_cells(t: &[(u32, u32)], u: &[(u32, u32)]) -> bool {
    if t.len() != u.len() {
        return false;
    }
    for i in 0..t.len() {
        for j in 0..t.len() {
            let (a, b, c, d) = (t[i], t[j], u[i], u[j]);
            if (a == b) != (c == d) || (a.0 < b.0) != (c.0 < d.0) {
                return false;
            }
            if (a.0 == b.0 && a.1 < b.1) != (c.0 == d.0 && c.1 < d.1) {
                return false;
            }
        }
    }
    true
}

pub fn similar_points(t: &[IndexPoint], u: &[IndexPoint], lang: Lang) -> bool {
    match lang {
        Lang::Ar => {
            let cell = |p: &IndexPoint| p.as_cell().map(|c| (c.row, c.col)).unwrap();
            similar_cells(&t.iter().map(cell).collect::<Vec<_>>(), &u.iter().map(cell).collect::<Vec<_>>())
        }
        _ => {
            let node = |p: &IndexPoint| p.as_node().unwrap().entries().to_vec();
            similar_nodes(&t.iter().map(node).collect::<Vec<_>>(), &u.iter().map(node).collect::<Vec<_>>(), lang)
        }
    }
}

/// Truth values of each Δ-formula under every sort-respecting assignment of
/// its variables to tuple positions.
pub fn delta_type(m: &RelStructure, t: &[Element], delta: &[DeltaFormula]) -> Vec<bool> {
    let mut bits = Vec::new();
    for d in delta {
        let opts: Vec<Vec<usize>> = d
            .vars
            .iter()
            .map(|v| {
                let s = m.signature().sort_index(&v.sort).unwrap();
                (0..t.len()).filter(|&p| m.sort_of(t[p]) == s).collect()
            })
            .collect();
        let mut choices = vec![vec![]];
        for o in &opts {
            choices = choices
                .into_iter()
                .flat_map(|c: Vec<usize>| {
                    o.iter().map(move |&p| {
                        let mut c = c.clone();
                        c.push(p);
                        c
                    })
                })
                .collect();
        }
        if opts.iter().any(Vec::is_empty) {
            continue;
        }
        for c in choices {
            let asg: BTreeMap<String, Element> = d.vars.iter().zip(&c).map(|(v, &p)| (v.name.clone(), t[p])).collect();
            bits.push(eval(m, &d.formula, &asg).unwrap());
        }
    }
    bits
}

/// All index tuples of length 1..=k over `n` points.
pub fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..k {
        layer = layer
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn typed(m: &RelStructure, p: &ParameterMap, idx: &[usize], delta: &[DeltaFormula]) -> (Vec<IndexPoint>, Vec<bool>) {
    let pts: Vec<IndexPoint> = idx.iter().map(|&i| p.points()[i].clone()).collect();
    let elems: Vec<Element> = idx.iter().flat_map(|&i| p.tuples()[i].iter().copied()).collect();
    (pts, delta_type(m, &elems, delta))
}

/// Brute force: similar index tuples have equal Δ-types.
pub fn indiscernible(m: &RelStructure, p: &ParameterMap, lang: Lang, delta: &[DeltaFormula], k: usize) -> bool {
    let all: Vec<_> = tuples(p.points().len(), k).iter().map(|t| typed(m, p, t, delta)).collect();
    let mut reps: Vec<&(Vec<IndexPoint>, Vec<bool>)> = Vec::new();
    for x in &all {
        match reps.iter().find(|r| similar_points(&r.0, &x.0, lang)) {
            Some(r) if r.1 != x.1 => return false,
            Some(_) => {}
            None => reps.push(x),
        }
    }
    true
}

/// Brute force: each tuple of `b` is matched in `a` by a similar index tuple
/// with the same Δ-type.
pub fn based_on(m: &RelStructure, b: &ParameterMap, a: &ParameterMap, lang: Lang, delta: &[DeltaFormula], k: usize) -> bool {
    let src: Vec<_> = tuples(a.points().len(), k).iter().map(|t| typed(m, a, t, delta)).collect();
    tuples(b.points().len(), k).iter().all(|t| {
        let (pts, ty) = typed(m, b, t, delta);
        src.iter().any(|(q, u)| *u == ty && similar_points(q, &pts, lang))
    })
}

/// Sort `Cell` of an r×c grid, sort `X` of the given cell sets, `Has(x, cell)`;
/// returns the structure, `Has(x; y)` and the identity array.
pub fn grid(rows: u32, cols: u32, sets: &[Vec<(u32, u32)>]) -> (RelStructure, SplitFormula, ParameterMap) {
    let sig = Signature::new(&["Cell", "X"], &[("Has", &["X", "Cell"])]);
    let cells: Vec<String> = (0..rows).flat_map(|r| (0..cols).map(move |c| format!("c{r}_{c}"))).collect();
    let xs: Vec<String> = (0..sets.len()).map(|i| format!("x{i}")).collect();
    let mut m = RelStructure::new(sig, vec![cells, xs]).unwrap();
    for (i, s) in sets.iter().enumerate() {
        let x = m.element(&format!("x{i}")).unwrap();
        for (r, c) in s {
            let e = m.element(&format!("c{r}_{c}")).unwrap();
            m.insert("Has", &[x, e]).unwrap();
        }
    }
    let phi = SplitFormula {
        object_vars: vec![VarDecl::new("x", "X")],
        param_vars: vec![VarDecl::new("y", "Cell")],
        formula: Formula::rel("Has", &["x", "y"]),
    };
    let p = ParameterMap::new(&m, IndexShape::Array { rows, cols }, |q| {
        let c = q.as_cell().unwrap();
        vec![m.element(&format!("c{}_{}", c.row, c.col)).unwrap()]
    })
    .unwrap();
    (m, phi, p)
}

pub fn subsets_up_to(n: u32, max: usize) -> Vec<Vec<u32>> {
    (0u32..1 << n).filter(|s| s.count_ones() as usize <= max).map(|s| (0..n).filter(|i| s >> i & 1 == 1).collect()).collect()
}

/// Every way of picking one cell per row.
pub fn selections(rows: u32, cols: u32) -> Vec<Vec<(u32, u32)>> {
    let mut out: Vec<Vec<(u32, u32)>> = vec![vec![]];
    for r in 0..rows {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..cols).map(move |c| {
                    let mut t = s.clone();
                    t.push((r, c));
                    t
                })
            })
            .collect();
    }
    out
}

/// Direct search for an object tuple satisfying every instance.
pub fn consistent(m: &RelStructure, phi: &SplitFormula, params: &[Vec<Element>]) -> bool {
    let sorts: Vec<Vec<Element>> = phi
        .object_vars
        .iter()
        .map(|v| m.universe(m.signature().sort_index(&v.sort).unwrap()).collect())
        .collect();
    let mut objs: Vec<Vec<Element>> = vec![vec![]];
    for s in &sorts {
        objs = objs
            .into_iter()
            .flat_map(|o| {
                s.iter().map(move |&e| {
                    let mut o = o.clone();
                    o.push(e);
                    o
                })
            })
            .collect();
    }
    objs.iter().any(|o| {
        params.iter().all(|p| {
            let mut asg = BTreeMap::new();
            for (v, &e) in phi.object_vars.iter().zip(o) {
                asg.insert(v.name.clone(), e);
            }
            for (v, &e) in phi.param_vars.iter().zip(p) {
                asg.insert(v.name.clone(), e);
            }
            eval(m, &phi.formula, &asg).unwrap()
        })
    })
}

pub fn k_subsets<T: Clone>(xs: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![vec![]];
    }
    if xs.len() < k {
        return vec![];
    }
    let mut out = k_subsets(&xs[1..], k);
    for mut s in k_subsets(&xs[1..], k - 1) {
        s.insert(0, xs[0].clone());
        out.push(s);
    }
    out
}

/// Rows k-inconsistent, every selection consistent, by direct search.
pub fn ktp2(m: &RelStructure, phi: &SplitFormula, p: &ParameterMap, k: usize) -> bool {
    let IndexShape::Array { rows, cols } = *p.shape() else { panic!("array expected") };
    let at = |r: u32, c: u32| p.get(&IndexPoint::Cell(treeindisc::qftype::ArrayCell::new(r, c))).unwrap().to_vec();
    let rows_ok = (0..rows).all(|r| {
        let row: Vec<Vec<Element>> = (0..cols).map(|c| at(r, c)).collect();
        k_subsets(&row, k).iter().all(|s| !consistent(m, phi, s))
    });
    rows_ok
        && selections(rows, cols)
            .iter()
            .all(|s| consistent(m, phi, &s.iter().map(|&(r, c)| at(r, c)).collect::<Vec<_>>()))
}
