//! Finite witness checks for k-TP, k-TP₁, weak k-TP₁, k-TP₂ and strong N-TP,
//! the conjunction reduction from k-TP₂ to TP₂, and the finite dichotomy
//! pipeline. Every "for all μ" is read over the given horizon: all
//! root-to-top paths of the parameter tree, or all selections of the array.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fostructure::{intersect_into, DeltaFormula, Element, Formula, RelStructure, SatCache, SplitFormula, VarDecl};
use crate::indisc::{check_indiscernible, IndexShape, IndiscReport, ParameterMap};
use crate::modeling::{array_extract, s_extract, str_extract_from_s, Strategy};
use crate::qftype::{ArrayCell, IndexLanguage, IndexPoint};
use crate::tree_index::{are_distant_siblings, are_same_level_distant_siblings, TreeDomain, TreeNode};

pub const FAILURE_SAMPLE: usize = 32;
pub const FAMILY_CAP: u64 = 1 << 22;
pub const SELECTION_CAP: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessSpec {
    pub formula: SplitFormula,
    pub params: ParameterMap,
    pub k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Tp,
    Tp1,
    WeakTp1,
    Tp2,
    StrongTp,
    StrongConsistency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// A path (or a family that must be consistent) is inconsistent.
    PathInconsistent,
    /// A family that must be k-inconsistent has a consistent k-subset.
    FamilyConsistent,
    /// A partial column selection is already inconsistent.
    SelectionInconsistent,
    /// A family that must be consistent is not.
    FamilyInconsistent,
    /// The horizon has fewer than k siblings (or columns), so no finite
    /// family can witness the property.
    HorizonTooNarrow,
}

impl FailureReason {
    /// The consistency value that makes this a failure.
    pub fn failing_consistency(self) -> Option<bool> {
        match self {
            FailureReason::FamilyConsistent => Some(true),
            FailureReason::HorizonTooNarrow => None,
            _ => Some(false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub family: Vec<IndexPoint>,
    pub reason: FailureReason,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TPReport {
    pub property: Property,
    pub verdict: bool,
    pub k: usize,
    pub horizon: IndexShape,
    pub checked_families: u64,
    pub failure_count: u64,
    /// The first few failures.
    pub failures: Vec<Failure>,
}

struct Collector<'a> {
    points: &'a [IndexPoint],
    checked: u64,
    count: u64,
    failures: Vec<Failure>,
}

impl<'a> Collector<'a> {
    fn new(points: &'a [IndexPoint]) -> Self {
        Collector { points, checked: 0, count: 0, failures: Vec::new() }
    }

    fn tick(&mut self, n: u64) -> Result<()> {
        self.checked += n;
        if self.checked > FAMILY_CAP {
            return Err(Error::CapExceeded { what: "families".into(), size: self.checked as u128, cap: FAMILY_CAP as u128 });
        }
        Ok(())
    }

    fn fail(&mut self, family: &[usize], reason: FailureReason, multiplicity: u64) {
        self.count += multiplicity;
        if self.failures.len() < FAILURE_SAMPLE {
            self.failures.push(Failure { family: family.iter().map(|&i| self.points[i].clone()).collect(), reason });
        }
    }

    fn report(self, property: Property, k: usize, horizon: IndexShape) -> TPReport {
        TPReport {
            property,
            verdict: self.count == 0,
            k,
            horizon,
            checked_families: self.checked,
            failure_count: self.count,
            failures: self.failures,
        }
    }
}

fn tree_of(p: &ParameterMap) -> Result<TreeDomain> {
    p.shape().tree().copied().ok_or_else(|| invalid("tree parameters required"))
}

fn array_of(p: &ParameterMap) -> Result<(u32, u32)> {
    match p.shape() {
        IndexShape::Array { rows, cols } => Ok((*rows, *cols)),
        IndexShape::Tree(_) => Err(invalid("array parameters required")),
    }
}

fn cache(m: &RelStructure, spec: &WitnessSpec) -> Result<SatCache> {
    if spec.k < 2 {
        return Err(invalid("k must be at least 2"));
    }
    SatCache::new(m, &spec.formula, spec.params.tuples())
}

fn idx(p: &ParameterMap, n: &TreeNode) -> usize {
    p.index_of(&IndexPoint::Node(n.clone())).expect("node in domain")
}

fn check_paths(c: &mut Collector, sat: &SatCache, p: &ParameterMap, d: &TreeDomain) -> Result<()> {
    for top in d.level_nodes(d.max_level()) {
        let path: Vec<usize> = (0..=top.level()).map(|l| idx(p, &top.truncate(l))).collect();
        c.tick(1)?;
        if !sat.consistent(&path) {
            c.fail(&path, FailureReason::PathInconsistent, 1);
        }
    }
    Ok(())
}

/// Every k-subset of `items` must be inconsistent.
fn check_k_inconsistent(c: &mut Collector, sat: &SatCache, items: &[usize], k: usize) -> Result<()> {
    let mut chosen = Vec::with_capacity(k);
    k_subsets(items, k, 0, &mut chosen, &mut |s| {
        c.tick(1)?;
        if sat.consistent(s) {
            c.fail(s, FailureReason::FamilyConsistent, 1);
        }
        Ok(())
    })
}

fn k_subsets(
    items: &[usize],
    k: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if chosen.len() == k {
        return f(chosen);
    }
    for i in from..items.len() {
        if items.len() - i < k - chosen.len() {
            break;
        }
        chosen.push(items[i]);
        k_subsets(items, k, i + 1, chosen, f)?;
        chosen.pop();
    }
    Ok(())
}

/// k-sets of pairwise incomparable nodes, with a filter on complete sets.
fn incomparable_families(
    c: &mut Collector,
    sat: &SatCache,
    nodes: &[TreeNode],
    k: usize,
    keep: impl Fn(&[TreeNode]) -> bool,
) -> Result<()> {
    fn go(
        c: &mut Collector,
        sat: &SatCache,
        nodes: &[TreeNode],
        k: usize,
        keep: &dyn Fn(&[TreeNode]) -> bool,
        from: usize,
        chosen: &mut Vec<usize>,
    ) -> Result<()> {
        if chosen.len() == k {
            let fam: Vec<TreeNode> = chosen.iter().map(|&i| nodes[i].clone()).collect();
            if keep(&fam) {
                c.tick(1)?;
                if sat.consistent(chosen) {
                    c.fail(chosen, FailureReason::FamilyConsistent, 1);
                }
            }
            return Ok(());
        }
        for i in from..nodes.len() {
            if chosen.iter().all(|&j| !nodes[j].comparable(&nodes[i])) {
                chosen.push(i);
                go(c, sat, nodes, k, keep, i + 1, chosen)?;
                chosen.pop();
            }
        }
        Ok(())
    }
    go(c, sat, nodes, k, &keep, 0, &mut Vec::with_capacity(k))
}

#[derive(Clone, Copy)]
enum Families {
    Siblings,
    Incomparable,
    DistantSiblings,
    SameLevelDistant,
}

fn tree_check(m: &RelStructure, spec: &WitnessSpec, property: Property, extra: Families) -> Result<TPReport> {
    let d = tree_of(&spec.params)?;
    let sat = cache(m, spec)?;
    let p = &spec.params;
    let mut c = Collector::new(p.points());
    if (d.branching as usize) < spec.k {
        c.fail(&[], FailureReason::HorizonTooNarrow, 1);
        return Ok(c.report(property, spec.k, *p.shape()));
    }
    check_paths(&mut c, &sat, p, &d)?;
    for parent in p.points().iter().filter_map(IndexPoint::as_node).filter(|n| d.is_internal(n)) {
        let kids: Vec<usize> = d.children(parent).iter().map(|n| idx(p, n)).collect();
        check_k_inconsistent(&mut c, &sat, &kids, spec.k)?;
    }
    // points are in level-lex order, matching `idx`
    let nodes: Vec<TreeNode> = p.points().iter().filter_map(|q| q.as_node().cloned()).collect();
    match extra {
        Families::Siblings => {}
        Families::Incomparable => incomparable_families(&mut c, &sat, &nodes, spec.k, |_| true)?,
        Families::DistantSiblings => incomparable_families(&mut c, &sat, &nodes, spec.k, are_distant_siblings)?,
        Families::SameLevelDistant => {
            incomparable_families(&mut c, &sat, &nodes, spec.k, are_same_level_distant_siblings)?
        }
    }
    Ok(c.report(property, spec.k, *p.shape()))
}

/// Paths consistent and sibling k-sets inconsistent.
pub fn check_ktp(m: &RelStructure, spec: &WitnessSpec) -> Result<TPReport> {
    tree_check(m, spec, Property::Tp, Families::Siblings)
}

/// As `check_ktp`, with pairwise incomparable k-sets inconsistent as well.
pub fn check_ktp1(m: &RelStructure, spec: &WitnessSpec) -> Result<TPReport> {
    tree_check(m, spec, Property::Tp1, Families::Incomparable)
}

/// As `check_ktp`, with distant-sibling k-sets inconsistent as well.
pub fn check_weak_ktp1(m: &RelStructure, spec: &WitnessSpec) -> Result<TPReport> {
    tree_check(m, spec, Property::WeakTp1, Families::DistantSiblings)
}

/// N-TP, with every same-level distant-sibling N-set inconsistent.
pub fn check_strong_ntp(m: &RelStructure, spec: &WitnessSpec, n: usize) -> Result<TPReport> {
    let spec = WitnessSpec { k: n, ..spec.clone() };
    tree_check(m, &spec, Property::StrongTp, Families::SameLevelDistant)
}

fn cell_index(cols: u32, r: u32, c: u32) -> usize {
    (r * cols + c) as usize
}

fn selection_count(rows: u32, cols: u32) -> Result<u128> {
    let n = (cols as u128).checked_pow(rows).filter(|&n| n <= SELECTION_CAP);
    n.ok_or_else(|| Error::CapExceeded {
        what: "column selections".into(),
        size: (cols as u128).checked_pow(rows).unwrap_or(u128::MAX),
        cap: SELECTION_CAP,
    })
}

/// Rows k-inconsistent and every column selection consistent.
pub fn check_ktp2(m: &RelStructure, spec: &WitnessSpec) -> Result<TPReport> {
    let (rows, cols) = array_of(&spec.params)?;
    let sat = cache(m, spec)?;
    let p = &spec.params;
    let mut c = Collector::new(p.points());
    if (cols as usize) < spec.k {
        c.fail(&[], FailureReason::HorizonTooNarrow, 1);
        return Ok(c.report(Property::Tp2, spec.k, *p.shape()));
    }
    selection_count(rows, cols)?;
    for r in 0..rows {
        let row: Vec<usize> = (0..cols).map(|j| cell_index(cols, r, j)).collect();
        check_k_inconsistent(&mut c, &sat, &row, spec.k)?;
    }
    let mut chosen = Vec::with_capacity(rows as usize);
    let mut stack = vec![sat.full()];
    selections(&mut c, &sat, rows, cols, &mut chosen, &mut stack)?;
    Ok(c.report(Property::Tp2, spec.k, *p.shape()))
}

fn selections(
    c: &mut Collector,
    sat: &SatCache,
    rows: u32,
    cols: u32,
    chosen: &mut Vec<usize>,
    stack: &mut Vec<Vec<u64>>,
) -> Result<()> {
    let r = chosen.len() as u32;
    if r == rows {
        return c.tick(1);
    }
    for j in 0..cols {
        let cell = cell_index(cols, r, j);
        let mut acc = stack.last().unwrap().clone();
        chosen.push(cell);
        if intersect_into(&mut acc, sat.set(cell)) {
            stack.push(acc);
            selections(c, sat, rows, cols, chosen, stack)?;
            stack.pop();
        } else {
            // every completion fails
            let rest = (cols as u64).pow(rows - r - 1);
            c.tick(rest)?;
            c.fail(chosen, FailureReason::SelectionInconsistent, rest);
        }
        chosen.pop();
    }
    Ok(())
}

/// Every subset of at most `max_size` distinct instances is consistent.
pub fn check_strong_phi_consistency(
    m: &RelStructure,
    phi: &SplitFormula,
    params: &ParameterMap,
    max_size: usize,
) -> Result<TPReport> {
    if max_size < 2 {
        return Err(invalid("subset size bound must be at least 2"));
    }
    let sat = SatCache::new(m, phi, params.tuples())?;
    let mut c = Collector::new(params.points());
    let all: Vec<usize> = (0..params.points().len()).collect();
    fn go(
        c: &mut Collector,
        sat: &SatCache,
        all: &[usize],
        max: usize,
        from: usize,
        chosen: &mut Vec<usize>,
        acc: Vec<u64>,
    ) -> Result<()> {
        for i in from..all.len() {
            let mut next = acc.clone();
            chosen.push(all[i]);
            c.tick(1)?;
            if intersect_into(&mut next, sat.set(all[i])) {
                if chosen.len() < max {
                    go(c, sat, all, max, i + 1, chosen, next)?;
                }
            } else {
                c.fail(chosen, FailureReason::FamilyInconsistent, 1);
            }
            chosen.pop();
        }
        Ok(())
    }
    go(&mut c, &sat, &all, max_size, 0, &mut Vec::new(), sat.full())?;
    Ok(c.report(Property::StrongConsistency, max_size, *params.shape()))
}

/// Rows of columns of parameter tuples.
pub type ParamArray = Vec<Vec<Vec<Element>>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NBound {
    Bound(usize),
    NoBound,
}

/// For each level with internal nodes, the array whose rows are the nodes of
/// that level and whose columns are their children: `c^i_j := a_{ν_i⌢⟨j⟩}`.
pub fn default_candidate_arrays(params: &ParameterMap) -> Result<Vec<ParamArray>> {
    let d = tree_of(params)?;
    let mut out = Vec::new();
    for level in 0..d.max_level() {
        let rows = d
            .level_nodes(level)
            .iter()
            .map(|nu| d.children(nu).iter().map(|ch| params.node(ch).unwrap().to_vec()).collect())
            .collect();
        out.push(rows);
    }
    Ok(out)
}

/// Least N such that every candidate array with m-inconsistent rows and at
/// least N rows has an inconsistent selection from its first N rows.
pub fn compute_n_bound(m: &RelStructure, phi: &SplitFormula, mcons: usize, arrays: &[ParamArray]) -> Result<NBound> {
    if mcons < 1 {
        return Err(invalid("m must be positive"));
    }
    let mut ids: HashMap<&[Element], usize> = HashMap::new();
    let mut tuples: Vec<Vec<Element>> = Vec::new();
    for t in arrays.iter().flatten().flatten() {
        ids.entry(t.as_slice()).or_insert_with(|| {
            tuples.push(t.clone());
            tuples.len() - 1
        });
    }
    let sat = SatCache::new(m, phi, &tuples)?;
    let id_arrays: Vec<Vec<Vec<usize>>> = arrays
        .iter()
        .map(|a| a.iter().map(|row| row.iter().map(|t| ids[t.as_slice()]).collect()).collect())
        .collect();
    let mut qualifying = Vec::new();
    for a in &id_arrays {
        let mut ok = true;
        for row in a {
            let mut chosen = Vec::new();
            let r = k_subsets(row, mcons, 0, &mut chosen, &mut |s| {
                if sat.consistent(s) {
                    Err(Error::Precondition(String::new()))
                } else {
                    Ok(())
                }
            });
            if r.is_err() {
                ok = false;
                break;
            }
        }
        if ok {
            qualifying.push(a);
        }
    }
    let max_rows = qualifying.iter().map(|a| a.len()).max().unwrap_or(0);
    if qualifying.is_empty() {
        return Ok(NBound::Bound(1));
    }
    'n: for n in 1..=max_rows {
        for a in qualifying.iter().filter(|a| a.len() >= n) {
            selection_count(n as u32, a.iter().take(n).map(Vec::len).max().unwrap_or(0) as u32)?;
            if !has_inconsistent_selection(&sat, &a[..n], sat.full()) {
                continue 'n;
            }
        }
        return Ok(NBound::Bound(n));
    }
    Ok(NBound::NoBound)
}

fn has_inconsistent_selection(sat: &SatCache, rows: &[Vec<usize>], acc: Vec<u64>) -> bool {
    let Some((row, rest)) = rows.split_first() else {
        return false;
    };
    row.iter().any(|&i| {
        let mut next = acc.clone();
        !intersect_into(&mut next, sat.set(i)) || has_inconsistent_selection(sat, rest, next)
    })
}

fn copy_name(name: &str, l: usize) -> String {
    format!("{name}_{l}")
}

/// `⋀_{l<r} φ(x̄; ȳ_l)`, with the parameter variables of copy `l` renamed
/// `{name}_{l}`.
pub fn conjoin_copies(phi: &SplitFormula, r: usize) -> SplitFormula {
    let mut param_vars = Vec::new();
    let mut parts = Vec::new();
    for l in 0..r {
        param_vars.extend(phi.param_vars.iter().map(|v| VarDecl::new(&copy_name(&v.name, l), &v.sort)));
        let ren = |n: &str| phi.param_vars.iter().any(|v| v.name == n).then(|| copy_name(n, l));
        parts.push(phi.formula.rename(&ren));
    }
    SplitFormula { object_vars: phi.object_vars.clone(), param_vars, formula: Formula::and(parts) }
}

/// The formulas `∃x̄ ⋀_{l<r} φ(x̄; ȳ_l)` for `r = 1..=max_r`, in the
/// parameter variables: their truth values are the consistency pattern of a
/// parameter tuple.
pub fn consistency_delta(phi: &SplitFormula, max_r: usize) -> Vec<DeltaFormula> {
    (1..=max_r)
        .map(|r| {
            let conj = conjoin_copies(phi, r);
            let body = phi
                .object_vars
                .iter()
                .rev()
                .fold(conj.formula, |acc, v| Formula::exists(&v.name, &v.sort, acc));
            DeltaFormula { vars: conj.param_vars, formula: body }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdlerCase {
    /// Adjacent column pairs merged; k halves.
    PairsConsistent,
    /// Blocks of n rows merged; k becomes 2.
    RowBlocks,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdlerStep {
    pub case: AdlerCase,
    /// Number of conjuncts introduced by the step.
    pub n: usize,
    pub k_before: usize,
    pub k_after: usize,
    pub rows: u32,
    pub cols: u32,
}

#[derive(Clone, Debug)]
pub struct AdlerResult {
    pub formula: SplitFormula,
    pub params: ParameterMap,
    pub k: usize,
    pub steps: Vec<AdlerStep>,
    pub report: TPReport,
    pub indiscernibility: IndiscReport,
}

/// Reduces an AR-indiscernible k-TP₂ witness to a 2-TP₂ witness of a finite
/// conjunction. The input is certified with `check_ktp2` and with
/// AR-indiscernibility for the consistency of pairs; the output is certified
/// with `check_ktp2` at k = 2.
pub fn adler_reduce(m: &RelStructure, spec: &WitnessSpec) -> Result<AdlerResult> {
    let pre = check_ktp2(m, spec)?;
    if !pre.verdict {
        return Err(Error::Precondition(format!("not a {}-TP2 witness", spec.k)));
    }
    let delta = consistency_delta(&spec.formula, 2);
    let ind = check_indiscernible(m, &spec.params, IndexLanguage::Ar, &delta, 2)?;
    if !ind.verdict {
        return Err(Error::Precondition("parameters are not array-indiscernible".into()));
    }
    let mut phi = spec.formula.clone();
    let mut params = spec.params.clone();
    let mut k = spec.k;
    let mut steps = Vec::new();
    while k > 2 {
        let (rows, cols) = array_of(&params)?;
        let at = |r: u32, c: u32| params.tuples()[cell_index(cols, r, c)].clone();
        let pairs: Vec<Vec<Element>> = (0..rows).flat_map(|r| [at(r, 0), at(r, 1)]).collect();
        let sat = SatCache::new(m, &phi, &pairs)?;
        let prefix_consistent = |n: usize| sat.consistent(&(0..2 * n).collect::<Vec<_>>());
        let (case, n, nr, nc, k_after) = if prefix_consistent(rows as usize) {
            if cols < 4 {
                return Err(Error::Precondition("too few columns to merge pairs".into()));
            }
            (AdlerCase::PairsConsistent, 2, rows, cols / 2, k.div_ceil(2))
        } else {
            let n = (1..=rows as usize).find(|&n| !prefix_consistent(n)).unwrap();
            if n < 2 {
                return Err(Error::Precondition("a single row pair is inconsistent".into()));
            }
            (AdlerCase::RowBlocks, n, rows / n as u32, cols, 2)
        };
        let mut pts = Vec::new();
        for r in 0..nr {
            for c in 0..nc {
                let t: Vec<Element> = match case {
                    AdlerCase::PairsConsistent => [at(r, 2 * c), at(r, 2 * c + 1)].concat(),
                    AdlerCase::RowBlocks => (0..n as u32).flat_map(|l| at(n as u32 * r + l, c)).collect(),
                };
                pts.push((IndexPoint::Cell(ArrayCell::new(r, c)), t));
            }
        }
        params = ParameterMap::from_pairs(m, IndexShape::Array { rows: nr, cols: nc }, pts)?;
        phi = conjoin_copies(&phi, n);
        steps.push(AdlerStep { case, n, k_before: k, k_after, rows: nr, cols: nc });
        k = k_after;
    }
    let out = WitnessSpec { formula: phi, params, k };
    let report = check_ktp2(m, &out)?;
    if !report.verdict {
        return Err(Error::Precondition("reduced array fails the 2-TP2 check".into()));
    }
    Ok(AdlerResult { formula: out.formula, params: out.params, k, steps, report, indiscernibility: ind })
}

fn array_map(m: &RelStructure, a: &ParamArray) -> Result<ParameterMap> {
    let rows = a.len() as u32;
    let cols = a.iter().map(Vec::len).min().unwrap_or(0) as u32;
    let pairs = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| (IndexPoint::Cell(ArrayCell::new(r, c)), a[r as usize][c as usize].clone()))
        .collect();
    ParameterMap::from_pairs(m, IndexShape::Array { rows, cols }, pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Tp2,
    Tp1,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStep {
    pub strategy: Option<Strategy>,
    pub certified: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tp2Evidence {
    /// Tree level whose children array witnesses k-TP₂.
    pub level: usize,
    pub array_report: TPReport,
    pub steps: Vec<AdlerStep>,
    pub conjuncts: usize,
    pub reduced_report: TPReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub route: Route,
    /// Least k with a k-TP verdict.
    pub k: usize,
    pub tp_report: TPReport,
    pub tp2: Option<Tp2Evidence>,
    pub n_bound: Option<NBound>,
    pub strong_ntp: Option<TPReport>,
    pub s_extract: Option<ExtractionStep>,
    pub str_extract: Option<ExtractionStep>,
    pub tp1_report: Option<TPReport>,
    pub notes: Vec<String>,
}

fn step_of<T>(r: &Result<T>, certified: impl Fn(&T) -> (Strategy, bool)) -> ExtractionStep {
    match r {
        Ok(x) => {
            let (s, c) = certified(x);
            ExtractionStep { strategy: Some(s), certified: c, note: None }
        }
        Err(e) => ExtractionStep { strategy: None, certified: false, note: Some(e.to_string()) },
    }
}

/// Finite TP₂-or-TP₁ pipeline over tree parameters. Takes the least k ≤
/// `max_k` with a k-TP verdict, then looks for k-TP₂ evidence in the children
/// arrays of each level; failing that, computes an N-bound over the same
/// arrays, checks strong N-TP, extracts s- and str-indiscernible witnesses and
/// checks N-TP₁ on the result.
pub fn assemble_tp_dichotomy(
    m: &RelStructure,
    phi: &SplitFormula,
    params: &ParameterMap,
    max_k: usize,
) -> Result<DichotomyReport> {
    let d = tree_of(params)?;
    let mut tp = None;
    for k in 2..=max_k.min(d.branching as usize) {
        let r = check_ktp(m, &WitnessSpec { formula: phi.clone(), params: params.clone(), k })?;
        if r.verdict {
            tp = Some((k, r));
            break;
        }
    }
    let Some((k, tp_report)) = tp else {
        return Err(Error::Precondition(format!("no k-TP verdict for k ≤ {max_k}")));
    };
    let mut report = DichotomyReport {
        route: Route::Undetermined,
        k,
        tp_report,
        tp2: None,
        n_bound: None,
        strong_ntp: None,
        s_extract: None,
        str_extract: None,
        tp1_report: None,
        notes: Vec::new(),
    };
    let arrays = default_candidate_arrays(params)?;
    let delta = consistency_delta(phi, 2);
    for (level, a) in arrays.iter().enumerate() {
        if a.len() < 2 {
            continue;
        }
        let spec = WitnessSpec { formula: phi.clone(), params: array_map(m, a)?, k };
        let array_report = check_ktp2(m, &spec)?;
        if !array_report.verdict {
            continue;
        }
        let mut candidate = spec.clone();
        if !check_indiscernible(m, &spec.params, IndexLanguage::Ar, &delta, 2)?.verdict {
            let (rows, cols) = array_of(&spec.params)?;
            match array_extract(m, &spec.params, &delta, 2, rows.min(2), (k as u32).min(cols)) {
                Ok(x) if x.certified() => candidate.params = x.output,
                _ => {
                    report.notes.push(format!("level {level} array witnesses {k}-TP2 but no indiscernible sub-array"));
                    continue;
                }
            }
        }
        match adler_reduce(m, &candidate) {
            Ok(res) => {
                report.tp2 = Some(Tp2Evidence {
                    level,
                    array_report,
                    conjuncts: res.formula.param_vars.len() / phi.param_vars.len().max(1),
                    steps: res.steps,
                    reduced_report: res.report,
                });
                report.route = Route::Tp2;
                return Ok(report);
            }
            Err(e) => report.notes.push(format!("level {level}: {e}")),
        }
    }
    let bound = compute_n_bound(m, phi, k, &arrays)?;
    report.n_bound = Some(bound);
    let NBound::Bound(n) = bound else {
        report.notes.push("no N-bound within the horizon".into());
        return Ok(report);
    };
    let n = n.max(k);
    let spec = WitnessSpec { formula: phi.clone(), params: params.clone(), k: n };
    let strong = check_strong_ntp(m, &spec, n)?;
    let strong_ok = strong.verdict;
    report.strong_ntp = Some(strong);
    if !strong_ok {
        report.notes.push(format!("strong {n}-TP fails at the horizon"));
        return Ok(report);
    }
    let width = (n as u32).min(d.branching);
    let s_target = TreeDomain::open(d.level_count(), width)?;
    let s = s_extract(m, params, &delta, 2, &s_target);
    report.s_extract = Some(step_of(&s, |x| (x.strategy, x.certified())));
    let mut witness = match &s {
        Ok(x) if x.certified() => x.output.clone(),
        _ => params.clone(),
    };
    if let Ok(x) = &s {
        let anchors = vec![vec![TreeNode::root(), TreeNode::new(vec![0])]];
        let str_target = TreeDomain::open(2.min(d.level_count()), width)?;
        let t = str_extract_from_s(m, &x.output, &anchors, &delta, &str_target);
        report.str_extract = Some(step_of(&t, |y| (y.strategy, y.certified())));
        if let Ok(y) = t {
            if y.certified() {
                witness = y.output;
            }
        }
    }
    let tp1 = check_ktp1(m, &WitnessSpec { formula: phi.clone(), params: witness, k: n })?;
    if tp1.verdict {
        report.route = Route::Tp1;
    } else {
        report.notes.push(format!("{n}-TP1 fails on the extracted witness"));
    }
    report.tp1_report = Some(tp1);
    Ok(report)
}
