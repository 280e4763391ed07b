//! Parameter maps over index structures, indiscernibility, EM-tables and
//! basedness, all relative to a finite Δ and a maximal index arity.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fostructure::{DeltaEvaluator, DeltaFormula, DeltaType, Element, RelStructure};
use crate::qftype::{similarity_code, ArrayCell, IndexLanguage, IndexPoint, SimilarityCode};
use crate::tree_index::{enumerate_nodes, TreeDomain, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexShape {
    Tree(TreeDomain),
    Array { rows: u32, cols: u32 },
}

impl IndexShape {
    /// Points in canonical order: (level, lex) for trees, row-major for arrays.
    pub fn points(&self) -> Vec<IndexPoint> {
        match self {
            IndexShape::Tree(d) => enumerate_nodes(d).into_iter().map(IndexPoint::Node).collect(),
            IndexShape::Array { rows, cols } => (0..*rows)
                .flat_map(|r| (0..*cols).map(move |c| IndexPoint::Cell(ArrayCell::new(r, c))))
                .collect(),
        }
    }

    pub fn contains(&self, p: &IndexPoint) -> bool {
        match (self, p) {
            (IndexShape::Tree(d), IndexPoint::Node(n)) => d.contains(n),
            (IndexShape::Array { rows, cols }, IndexPoint::Cell(c)) => c.row < *rows && c.col < *cols,
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IndexShape::Tree(d) => d.validate(),
            IndexShape::Array { rows, cols } if *rows == 0 || *cols == 0 => {
                Err(invalid("array bounds must be positive"))
            }
            IndexShape::Array { rows, cols } if (*rows as u64) * (*cols as u64) > 1 << 20 => {
                Err(invalid("array too large"))
            }
            IndexShape::Array { .. } => Ok(()),
        }
    }

    pub fn tree(&self) -> Option<&TreeDomain> {
        match self {
            IndexShape::Tree(d) => Some(d),
            IndexShape::Array { .. } => None,
        }
    }

    fn same_kind(&self, other: &IndexShape) -> bool {
        matches!(
            (self, other),
            (IndexShape::Tree(_), IndexShape::Tree(_)) | (IndexShape::Array { .. }, IndexShape::Array { .. })
        )
    }
}

/// A total assignment of equal-length, equally sorted element tuples to the
/// points of an index structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParameterMap {
    shape: IndexShape,
    points: Vec<IndexPoint>,
    tuples: Vec<Vec<Element>>,
    position: HashMap<IndexPoint, usize>,
}

impl ParameterMap {
    pub fn new(m: &RelStructure, shape: IndexShape, f: impl Fn(&IndexPoint) -> Vec<Element>) -> Result<Self> {
        shape.validate()?;
        let points = shape.points();
        let tuples = points.iter().map(f).collect();
        Self::assemble(m, shape, points, tuples)
    }

    /// Builds a map from explicit pairs; every point must be assigned exactly once.
    pub fn from_pairs(m: &RelStructure, shape: IndexShape, pairs: Vec<(IndexPoint, Vec<Element>)>) -> Result<Self> {
        shape.validate()?;
        let points = shape.points();
        let position: HashMap<IndexPoint, usize> =
            points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let mut tuples: Vec<Option<Vec<Element>>> = vec![None; points.len()];
        for (p, t) in pairs {
            let i = *position
                .get(&p)
                .ok_or_else(|| invalid(format!("point {p:?} is outside the index structure")))?;
            if tuples[i].replace(t).is_some() {
                return Err(invalid(format!("point {p:?} assigned twice")));
            }
        }
        let tuples = tuples
            .into_iter()
            .zip(&points)
            .map(|(t, p)| t.ok_or_else(|| invalid(format!("point {p:?} is unassigned"))))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(m, shape, points, tuples)
    }

    fn assemble(m: &RelStructure, shape: IndexShape, points: Vec<IndexPoint>, tuples: Vec<Vec<Element>>) -> Result<Self> {
        let first = &tuples[0];
        for t in &tuples {
            if t.len() != first.len() {
                return Err(invalid("assigned tuples differ in length"));
            }
            for (&e, &f) in t.iter().zip(first) {
                if e as usize >= m.len() || m.sort_of(e) != m.sort_of(f) {
                    return Err(invalid("assigned tuples differ in sorts"));
                }
            }
        }
        let position = points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Ok(ParameterMap { shape, points, tuples, position })
    }

    pub fn shape(&self) -> &IndexShape {
        &self.shape
    }

    pub fn points(&self) -> &[IndexPoint] {
        &self.points
    }

    pub fn tuple_len(&self) -> usize {
        self.tuples[0].len()
    }

    pub fn tuples(&self) -> &[Vec<Element>] {
        &self.tuples
    }

    pub fn index_of(&self, p: &IndexPoint) -> Option<usize> {
        self.position.get(p).copied()
    }

    pub fn get(&self, p: &IndexPoint) -> Option<&[Element]> {
        self.index_of(p).map(|i| self.tuples[i].as_slice())
    }

    pub fn node(&self, n: &TreeNode) -> Option<&[Element]> {
        self.get(&IndexPoint::Node(n.clone()))
    }

    /// `ā_{η̄}`: the concatenation of the tuples at the given point indices.
    pub fn concat(&self, idx: &[usize]) -> Vec<Element> {
        let mut out = Vec::with_capacity(idx.len() * self.tuple_len());
        for &i in idx {
            out.extend_from_slice(&self.tuples[i]);
        }
        out
    }

    /// `b_η := a_{f(η)}` on a new index structure.
    pub fn pull_back(
        &self,
        m: &RelStructure,
        shape: IndexShape,
        f: impl Fn(&IndexPoint) -> IndexPoint,
    ) -> Result<ParameterMap> {
        shape.validate()?;
        let points = shape.points();
        let tuples = points
            .iter()
            .map(|p| {
                let q = f(p);
                self.get(&q)
                    .map(<[Element]>::to_vec)
                    .ok_or_else(|| invalid(format!("image {q:?} is outside the source")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(m, shape, points, tuples)
    }

    pub fn to_json(&self, m: &RelStructure) -> serde_json::Value {
        let assign: Vec<(IndexPoint, Vec<String>)> = self
            .points
            .iter()
            .zip(&self.tuples)
            .map(|(p, t)| (p.clone(), t.iter().map(|&e| m.name(e).to_string()).collect()))
            .collect();
        serde_json::to_value(ParameterMapJson { index: self.shape, assign }).expect("serializable")
    }

    pub fn from_json(m: &RelStructure, v: &serde_json::Value) -> Result<Self> {
        let j: ParameterMapJson =
            serde_json::from_value(v.clone()).map_err(|e| invalid(format!("parameter map: {e}")))?;
        let pairs = j
            .assign
            .into_iter()
            .map(|(p, names)| {
                let ids = names
                    .iter()
                    .map(|n| m.element(n).ok_or_else(|| invalid(format!("unknown element {n:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok((p, ids))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(m, j.index, pairs)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterMapJson {
    index: IndexShape,
    assign: Vec<(IndexPoint, Vec<String>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub index: Vec<IndexPoint>,
    pub elements: Vec<Element>,
    pub delta_type: DeltaType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// The offending tuple.
    pub tuple: Witness,
    /// The tuple with equal code and a different Δ-type, when there is one.
    pub against: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndiscReport {
    pub verdict: bool,
    pub lang: IndexLanguage,
    pub delta_size: usize,
    pub max_arity: usize,
    pub checked_tuples: usize,
    pub counterexample: Option<Counterexample>,
}

/// Calls `f` on every ordered tuple (with repetition) of `0..n` of lengths
/// `1..=max_arity`, shorter first, lexicographically within a length. Stops
/// early when `f` returns false.
pub fn for_each_index_tuple(n: usize, max_arity: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    for k in 1..=max_arity {
        if !for_each_tuple_of_len(n, k, &mut f) {
            return false;
        }
    }
    true
}

pub fn for_each_tuple_of_len(n: usize, k: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if n == 0 {
        return true;
    }
    let mut t = vec![0usize; k];
    'tuples: loop {
        if !f(&t) {
            return false;
        }
        for i in (0..k).rev() {
            t[i] += 1;
            if t[i] < n {
                continue 'tuples;
            }
            t[i] = 0;
        }
        return true;
    }
}

fn check_lang(shape: &IndexShape, lang: IndexLanguage) -> Result<()> {
    if matches!(shape, IndexShape::Array { .. }) && lang != IndexLanguage::Ar {
        return Err(Error::MixedDomains(format!("array index with the {lang} language")));
    }
    Ok(())
}

struct Typer<'a> {
    m: &'a RelStructure,
    p: &'a ParameterMap,
    delta: DeltaEvaluator,
    lang: IndexLanguage,
}

impl<'a> Typer<'a> {
    fn new(m: &'a RelStructure, p: &'a ParameterMap, lang: IndexLanguage, delta: &[DeltaFormula]) -> Result<Self> {
        check_lang(&p.shape, lang)?;
        Ok(Typer { m, p, delta: DeltaEvaluator::new(m, delta)?, lang })
    }

    fn points(&self, idx: &[usize]) -> Vec<IndexPoint> {
        idx.iter().map(|&i| self.p.points[i].clone()).collect()
    }

    fn code(&self, idx: &[usize]) -> SimilarityCode {
        similarity_code(&self.points(idx), self.lang).expect("one index kind")
    }

    fn witness(&self, idx: &[usize]) -> Witness {
        let elements = self.p.concat(idx);
        let delta_type = self.delta.type_of(self.m, &elements);
        Witness { index: self.points(idx), elements, delta_type }
    }

    fn report(&self, max_arity: usize, checked: usize, cx: Option<Counterexample>) -> IndiscReport {
        IndiscReport {
            verdict: cx.is_none(),
            lang: self.lang,
            delta_size: self.delta.len(),
            max_arity,
            checked_tuples: checked,
            counterexample: cx,
        }
    }
}

/// Equal codes force equal Δ-types, for all index tuples up to `max_arity`.
pub fn check_indiscernible(
    m: &RelStructure,
    p: &ParameterMap,
    lang: IndexLanguage,
    delta: &[DeltaFormula],
    max_arity: usize,
) -> Result<IndiscReport> {
    if max_arity == 0 {
        return Err(invalid("max_arity must be at least 1"));
    }
    let typer = Typer::new(m, p, lang, delta)?;
    let mut seen: HashMap<SimilarityCode, Witness> = HashMap::new();
    let mut checked = 0;
    let mut cx = None;
    for_each_index_tuple(p.points.len(), max_arity, |idx| {
        checked += 1;
        let w = typer.witness(idx);
        match seen.entry(typer.code(idx)) {
            std::collections::hash_map::Entry::Occupied(e) => {
                if e.get().delta_type != w.delta_type {
                    cx = Some(Counterexample { tuple: w, against: Some(e.get().clone()) });
                    return false;
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(w);
            }
        }
        true
    });
    Ok(typer.report(max_arity, checked, cx))
}

/// Every tuple similar to some anchor has the anchor's Δ-type.
pub fn check_indiscernible_wrt(
    m: &RelStructure,
    p: &ParameterMap,
    lang: IndexLanguage,
    anchors: &[Vec<IndexPoint>],
    delta: &[DeltaFormula],
) -> Result<IndiscReport> {
    if anchors.is_empty() {
        return Err(invalid("at least one anchor is required"));
    }
    let typer = Typer::new(m, p, lang, delta)?;
    let mut by_arity: HashMap<usize, Vec<(SimilarityCode, Witness)>> = HashMap::new();
    for a in anchors {
        let idx = a
            .iter()
            .map(|q| p.index_of(q).ok_or_else(|| invalid(format!("anchor point {q:?} outside the index"))))
            .collect::<Result<Vec<_>>>()?;
        if idx.is_empty() {
            return Err(invalid("anchors must be nonempty"));
        }
        by_arity.entry(idx.len()).or_default().push((typer.code(&idx), typer.witness(&idx)));
    }
    let mut arities: Vec<usize> = by_arity.keys().copied().collect();
    arities.sort_unstable();
    let mut checked = 0;
    let mut cx = None;
    for k in &arities {
        let list = &by_arity[k];
        let done = for_each_tuple_of_len(p.points.len(), *k, &mut |idx: &[usize]| {
            let code = typer.code(idx);
            for (c, w) in list {
                if *c == code {
                    checked += 1;
                    let v = typer.witness(idx);
                    if v.delta_type != w.delta_type {
                        cx = Some(Counterexample { tuple: v, against: Some(w.clone()) });
                        return false;
                    }
                }
            }
            true
        });
        if !done {
            break;
        }
    }
    Ok(typer.report(*arities.last().unwrap(), checked, cx))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmRow {
    pub code: SimilarityCode,
    pub witness: Vec<IndexPoint>,
    /// Realized Δ-types in order of first appearance; one type iff stable.
    pub types: Vec<DeltaType>,
}

impl EmRow {
    pub fn stable(&self) -> bool {
        self.types.len() == 1
    }
}

/// Finite EM-table: per code, the Δ-types realized by tuples with that code.
/// Read over Boolean combinations of Δ-instances, the EM-type of a code says
/// exactly "the Δ-type is one of these".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EMTable {
    pub lang: IndexLanguage,
    pub delta_size: usize,
    pub max_arity: usize,
    pub rows: Vec<EmRow>,
}

impl EMTable {
    pub fn row(&self, code: &SimilarityCode) -> Option<&EmRow> {
        self.rows.iter().find(|r| r.code == *code)
    }

    pub fn unstable(&self) -> Vec<&SimilarityCode> {
        self.rows.iter().filter(|r| !r.stable()).map(|r| &r.code).collect()
    }

    /// Stable codes with their unique Δ-type.
    pub fn map(&self) -> HashMap<&SimilarityCode, &DeltaType> {
        self.rows.iter().filter(|r| r.stable()).map(|r| (&r.code, &r.types[0])).collect()
    }
}

pub fn em_table(
    m: &RelStructure,
    a: &ParameterMap,
    lang: IndexLanguage,
    delta: &[DeltaFormula],
    max_arity: usize,
) -> Result<EMTable> {
    let typer = Typer::new(m, a, lang, delta)?;
    let mut rows: Vec<EmRow> = Vec::new();
    let mut row_of: HashMap<SimilarityCode, usize> = HashMap::new();
    for_each_index_tuple(a.points.len(), max_arity, |idx| {
        let code = typer.code(idx);
        let ty = typer.delta.type_of(m, &a.concat(idx));
        match row_of.get(&code) {
            Some(&r) => {
                if !rows[r].types.contains(&ty) {
                    rows[r].types.push(ty);
                }
            }
            None => {
                row_of.insert(code.clone(), rows.len());
                rows.push(EmRow { code, witness: typer.points(idx), types: vec![ty] });
            }
        }
        true
    });
    Ok(EMTable { lang, delta_size: typer.delta.len(), max_arity, rows })
}

/// `B ⊨ EM(A)`: each B-tuple's Δ-type is realized in A at its code.
pub fn satisfies_em(m: &RelStructure, b: &ParameterMap, table: &EMTable, delta: &[DeltaFormula]) -> Result<bool> {
    let typer = Typer::new(m, b, table.lang, delta)?;
    let index: HashMap<&SimilarityCode, &EmRow> = table.rows.iter().map(|r| (&r.code, r)).collect();
    Ok(for_each_index_tuple(b.points.len(), table.max_arity, |idx| {
        let code = typer.code(idx);
        let ty = typer.delta.type_of(m, &b.concat(idx));
        index.get(&code).is_some_and(|r| r.types.contains(&ty))
    }))
}

/// Every B-tuple is matched by an A-tuple with the same code and Δ-type.
/// The two maps may live on different index structures of the same kind.
pub fn check_based_on(
    m: &RelStructure,
    b: &ParameterMap,
    a: &ParameterMap,
    lang: IndexLanguage,
    delta: &[DeltaFormula],
    max_arity: usize,
) -> Result<IndiscReport> {
    if !b.shape.same_kind(&a.shape) {
        return Err(Error::MixedDomains("basedness between a tree and an array".into()));
    }
    if b.tuple_len() != a.tuple_len() {
        return Err(invalid("parameter tuples differ in length"));
    }
    let table = em_table(m, a, lang, delta, max_arity)?;
    let index: HashMap<&SimilarityCode, &EmRow> = table.rows.iter().map(|r| (&r.code, r)).collect();
    let typer = Typer::new(m, b, lang, delta)?;
    let mut checked = 0;
    let mut cx = None;
    for_each_index_tuple(b.points.len(), max_arity, |idx| {
        checked += 1;
        let code = typer.code(idx);
        let w = typer.witness(idx);
        if !index.get(&code).is_some_and(|r| r.types.contains(&w.delta_type)) {
            cx = Some(Counterexample { tuple: w, against: None });
            return false;
        }
        true
    });
    Ok(typer.report(max_arity, checked, cx))
}
