//! Finite extraction of indiscernible parameters based on a given source:
//! order-indiscernible subsequences, s-indiscernible subtrees, str-indiscernible
//! trees from s-indiscernible ones, and indiscernible sub-arrays.
//!
//! Every result carries two certificates recomputed by [`crate::indisc`]. When
//! the search space at the given size holds no solution the extractor fails
//! with [`Error::InsufficientSource`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fostructure::{DeltaEvaluator, DeltaFormula, DeltaType, Element, RelStructure};
use crate::indisc::{
    check_based_on, check_indiscernible, check_indiscernible_wrt, for_each_index_tuple, IndexShape, IndiscReport,
    ParameterMap,
};
use crate::qftype::{node_code, ArrayCell, IndexLanguage, IndexPoint};
use crate::search::{search, Checks, Memo, DEFAULT_BUDGET};
use crate::tree_index::{enumerate_nodes, is_meet_closed, TreeDomain, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    Order,
    S,
    StrFromS,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Subsequence search over increasing index maps.
    Ordered,
    /// Per-subtree recursion with block-wise order extraction.
    Inductive,
    /// Homogeneous level set followed by a stretching embedding.
    LevelHomogeneous,
    /// Per-row column choice, then a search over rows.
    ColumnsThenRows,
    /// Full search over embeddings of the target.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct ExtractionRequest {
    pub mode: ExtractionMode,
    pub source: ParameterMap,
    pub delta: Vec<DeltaFormula>,
    pub max_arity: usize,
    pub target: IndexShape,
    /// Only used by `StrFromS`.
    pub anchors: Vec<Vec<TreeNode>>,
}

#[derive(Clone, Debug)]
pub struct ExtractionResult {
    pub output: ParameterMap,
    /// Target point and the source point it was read from.
    pub embedding_trace: Vec<(IndexPoint, IndexPoint)>,
    /// Indiscernibility certificate, then basedness certificate.
    pub certificates: [IndiscReport; 2],
    pub strategy: Strategy,
}

impl ExtractionResult {
    pub fn certified(&self) -> bool {
        self.certificates.iter().all(|c| c.verdict)
    }

    pub fn to_json(&self, m: &RelStructure) -> serde_json::Value {
        serde_json::json!({
            "strategy": self.strategy,
            "output": self.output.to_json(m),
            "embedding_trace": self.embedding_trace,
            "certificates": self.certificates,
        })
    }
}

pub fn extract(m: &RelStructure, req: &ExtractionRequest) -> Result<ExtractionResult> {
    match (req.mode, &req.target) {
        (ExtractionMode::S, IndexShape::Tree(t)) => s_extract(m, &req.source, &req.delta, req.max_arity, t),
        (ExtractionMode::StrFromS, IndexShape::Tree(t)) => {
            str_extract_from_s(m, &req.source, &req.anchors, &req.delta, t)
        }
        (ExtractionMode::Array, IndexShape::Array { rows, cols }) => {
            array_extract(m, &req.source, &req.delta, req.max_arity, *rows, *cols)
        }
        (ExtractionMode::Order, IndexShape::Array { rows: 1, cols }) => {
            order_extract_map(m, &req.source, &req.delta, req.max_arity, *cols as usize)
        }
        _ => Err(invalid("target shape does not fit the extraction mode")),
    }
}

/// Upper estimate for the source size guaranteeing a homogeneous set of size
/// `target` for colorings of `arity`-sets with `colors` colors, from the
/// stepping-up bounds `R_1 = c(t-1)+1`, `R_r ≤ c^(R_{r-1}^(r-1))`. Saturates.
pub fn ramsey_estimate(arity: usize, target: usize, colors: usize) -> u64 {
    let c = colors.max(2) as u64;
    let mut r = c.saturating_mul(target.saturating_sub(1) as u64).saturating_add(1);
    for k in 2..=arity.max(1) {
        let exp = sat_pow(r, (k - 1) as u64);
        r = sat_pow(c, exp);
    }
    r
}

fn sat_pow(base: u64, exp: u64) -> u64 {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc == u64::MAX || base <= 1 {
            break;
        }
    }
    acc
}

fn increasing_candidates(pos: usize, img: &[usize], n_source: usize, n_target: usize) -> Vec<usize> {
    let lo = if pos == 0 { 0 } else { img[pos - 1] + 1 };
    let hi = (n_source + pos + 1).saturating_sub(n_target);
    (lo..hi).collect()
}

/// Indices of an order-indiscernible subsequence of length `target_len`
/// (w.r.t. Δ, tuples up to `max_arity`); the first in lexicographic order.
pub fn order_extract(
    m: &RelStructure,
    seq: &[Vec<Element>],
    delta: &[DeltaFormula],
    max_arity: usize,
    target_len: usize,
) -> Result<Vec<usize>> {
    if max_arity == 0 {
        return Err(invalid("max_arity must be at least 1"));
    }
    if target_len == 0 {
        return Ok(Vec::new());
    }
    let ev = DeltaEvaluator::new(m, delta)?;
    let mut memo = Memo::new(|t: &[usize]| {
        let els: Vec<Element> = t.iter().flat_map(|&i| seq[i].iter().copied()).collect();
        ev.type_of(m, &els)
    });
    let checks = Checks::by_order(target_len, max_arity);
    let found = search(
        &checks,
        |pos, img| increasing_candidates(pos, img, seq.len(), target_len),
        |_, t| memo.get(t),
        DEFAULT_BUDGET,
    )?;
    found.ok_or_else(|| Error::InsufficientSource {
        required_estimate: ramsey_estimate(max_arity, target_len, memo.distinct_values()),
        detail: format!("no order-indiscernible subsequence of length {target_len} among {}", seq.len()),
    })
}

fn order_extract_map(
    m: &RelStructure,
    src: &ParameterMap,
    delta: &[DeltaFormula],
    max_arity: usize,
    len: usize,
) -> Result<ExtractionResult> {
    match src.shape() {
        IndexShape::Array { rows: 1, .. } => {}
        _ => return Err(invalid("order extraction reads a one-row array")),
    }
    let picked = order_extract(m, src.tuples(), delta, max_arity, len)?;
    let shape = IndexShape::Array { rows: 1, cols: len as u32 };
    let trace: Vec<(IndexPoint, IndexPoint)> = picked
        .iter()
        .enumerate()
        .map(|(j, &i)| (IndexPoint::Cell(ArrayCell::new(0, j as u32)), src.points()[i].clone()))
        .collect();
    finish(m, src, shape, trace, IndexLanguage::Ar, delta, max_arity, None, Strategy::Ordered)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    m: &RelStructure,
    src: &ParameterMap,
    shape: IndexShape,
    trace: Vec<(IndexPoint, IndexPoint)>,
    lang: IndexLanguage,
    delta: &[DeltaFormula],
    max_arity: usize,
    anchors: Option<&[Vec<IndexPoint>]>,
    strategy: Strategy,
) -> Result<ExtractionResult> {
    let lookup: HashMap<IndexPoint, IndexPoint> = trace.iter().cloned().collect();
    let output = src.pull_back(m, shape, |p| lookup[p].clone())?;
    let indisc = match anchors {
        Some(a) => check_indiscernible_wrt(m, &output, lang, a, delta)?,
        None => check_indiscernible(m, &output, lang, delta, max_arity)?,
    };
    let based = check_based_on(m, &output, src, lang, delta, max_arity)?;
    Ok(ExtractionResult { output, embedding_trace: trace, certificates: [indisc, based], strategy })
}

struct TreeSource<'a> {
    m: &'a RelStructure,
    a: &'a ParameterMap,
    dom: TreeDomain,
    ev: DeltaEvaluator,
    max_arity: usize,
}

impl TreeSource<'_> {
    fn idx(&self, n: &TreeNode) -> usize {
        self.a.index_of(&IndexPoint::Node(n.clone())).expect("node in source")
    }

    fn node(&self, i: usize) -> &TreeNode {
        self.a.points()[i].as_node().expect("tree source")
    }

    fn type_of(&self, idx: &[usize]) -> DeltaType {
        self.ev.type_of(self.m, &self.a.concat(idx))
    }
}

/// An s-indiscernible tree on `target` that is s-based on `a`, w.r.t. Δ and
/// index tuples up to `max_arity`.
pub fn s_extract(
    m: &RelStructure,
    a: &ParameterMap,
    delta: &[DeltaFormula],
    max_arity: usize,
    target: &TreeDomain,
) -> Result<ExtractionResult> {
    let dom = *a.shape().tree().ok_or_else(|| invalid("s-extraction needs a tree source"))?;
    target.validate()?;
    if max_arity == 0 {
        return Err(invalid("max_arity must be at least 1"));
    }
    if target.level_count() > dom.level_count() {
        return Err(invalid("target has more levels than the source"));
    }
    let ctx = TreeSource { m, a, dom, ev: DeltaEvaluator::new(m, delta)?, max_arity };
    let tnodes = enumerate_nodes(target);
    let shape = IndexShape::Tree(*target);
    let trace_of = |img: &[usize]| -> Vec<(IndexPoint, IndexPoint)> {
        tnodes
            .iter()
            .zip(img)
            .map(|(t, &s)| (IndexPoint::Node(t.clone()), a.points()[s].clone()))
            .collect()
    };

    if target.branching <= dom.branching {
        if let Some(img) = inductive(&ctx, &TreeNode::root(), target.level_count(), target.branching, &[])? {
            let r = finish(m, a, shape, trace_of(&img), IndexLanguage::S, delta, max_arity, None, Strategy::Inductive)?;
            if r.certified() {
                return Ok(r);
            }
        }
    }

    let pos: HashMap<&TreeNode, usize> = tnodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let parent: Vec<Option<usize>> = tnodes.iter().map(|n| n.parent().map(|p| pos[&p])).collect();
    let checks = Checks::by_code(&shape.points(), IndexLanguage::S, max_arity)?;
    let mut memo = Memo::new(|t: &[usize]| ctx.type_of(t));
    let (b, bt) = (dom.branching, target.branching);
    let found = search(
        &checks,
        |i, img| {
            let Some(p) = parent[i] else {
                return vec![ctx.idx(&TreeNode::root())];
            };
            let j = *tnodes[i].entries().last().unwrap();
            let base = ctx.node(img[p]).clone();
            let lo = if j == 0 { 0 } else { ctx.node(img[i - 1]).entries().last().unwrap() + 1 };
            let hi = (b + j + 1).saturating_sub(bt);
            (lo..hi).map(|x| ctx.idx(&base.child(x))).collect()
        },
        |_, t| memo.get(t),
        DEFAULT_BUDGET,
    )?;
    match found {
        Some(img) => finish(m, a, shape, trace_of(&img), IndexLanguage::S, delta, max_arity, None, Strategy::Exhaustive),
        None => Err(Error::InsufficientSource {
            required_estimate: ramsey_estimate(max_arity, bt as usize, memo.distinct_values())
                .saturating_mul(target.level_count() as u64),
            detail: format!("no s-indiscernible copy of {target} inside {dom}"),
        }),
    }
}

/// Nodes of the source subtree below `r` at levels used by the target.
fn subtree_points(ctx: &TreeSource, r: &TreeNode, max_level: usize, out: &mut Vec<usize>) {
    out.push(ctx.idx(r));
    if r.level() < max_level {
        for c in ctx.dom.children(r) {
            subtree_points(ctx, &c, max_level, out);
        }
    }
}

/// The recursion mirrors the proof of the s-modeling theorem. Below `r`, each
/// child block is extracted so as to be indiscernible over everything else
/// that may still appear in the output (the side set, `r`, earlier chosen
/// blocks and later whole subtrees); then `bt` blocks are chosen so that the
/// block sequence is order-indiscernible over the side set and `r`, using the
/// natural bijections between blocks. Returns images in (level, lex) order of
/// the relative target tree of `h` levels.
fn inductive(ctx: &TreeSource, r: &TreeNode, h: usize, bt: u32, side: &[usize]) -> Result<Option<Vec<usize>>> {
    if h == 1 {
        return Ok(Some(vec![ctx.idx(r)]));
    }
    let children = ctx.dom.children(r);
    if children.len() < bt as usize {
        return Ok(None);
    }
    let top = r.level() + h - 1;
    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(children.len());
    for (mi, c) in children.iter().enumerate() {
        let mut side_m = side.to_vec();
        side_m.push(ctx.idx(r));
        for b in &blocks {
            side_m.extend_from_slice(b);
        }
        for later in &children[mi + 1..] {
            subtree_points(ctx, later, top, &mut side_m);
        }
        match inductive(ctx, c, h - 1, bt, &side_m)? {
            Some(b) => blocks.push(b),
            None => return Ok(None),
        }
    }

    let mut side_all = side.to_vec();
    side_all.push(ctx.idx(r));
    let block_color = |sel: &[usize]| -> Vec<DeltaType> {
        let mut pts = side_all.clone();
        let mut slot = vec![usize::MAX; side_all.len()];
        for (q, &bi) in sel.iter().enumerate() {
            pts.extend_from_slice(&blocks[bi]);
            slot.extend(std::iter::repeat_n(q, blocks[bi].len()));
        }
        let mut out = Vec::new();
        for_each_index_tuple(pts.len(), ctx.max_arity, |t| {
            let mut touched = vec![false; sel.len()];
            for &i in t {
                if slot[i] != usize::MAX {
                    touched[slot[i]] = true;
                }
            }
            if touched.iter().all(|&x| x) {
                let idx: Vec<usize> = t.iter().map(|&i| pts[i]).collect();
                out.push(ctx.type_of(&idx));
            }
            true
        });
        out
    };
    let mut memo = Memo::new(|t: &[usize]| {
        let mut s = t.to_vec();
        s.sort_unstable();
        s.dedup();
        block_color(&s)
    });
    let checks = Checks::by_order(bt as usize, ctx.max_arity);
    let n = children.len();
    let Some(sel) = search(
        &checks,
        |pos, img| increasing_candidates(pos, img, n, bt as usize),
        |_, t| memo.get(t),
        DEFAULT_BUDGET,
    )?
    else {
        return Ok(None);
    };

    let sub = TreeDomain::open(h - 1, bt)?;
    let sub_pos: HashMap<TreeNode, usize> =
        enumerate_nodes(&sub).into_iter().enumerate().map(|(i, n)| (n, i)).collect();
    let rel = TreeDomain::open(h, bt)?;
    let img = enumerate_nodes(&rel)
        .into_iter()
        .map(|eta| {
            if eta.level() == 0 {
                ctx.idx(r)
            } else {
                let j = eta.entries()[0] as usize;
                let rho = TreeNode::new(eta.entries()[1..].to_vec());
                blocks[sel[j]][sub_pos[&rho]]
            }
        })
        .collect();
    Ok(Some(img))
}

/// Distinct levels of a node tuple, ascending.
fn level_set(t: &[TreeNode]) -> Vec<usize> {
    let mut ls: Vec<usize> = t.iter().map(TreeNode::level).collect();
    ls.sort_unstable();
    ls.dedup();
    ls
}

/// A tuple of source nodes str-similar to `anchor` whose level set is `levels`
/// (the anchor's own levels sent monotonically onto `levels`).
fn realize(anchor: &[TreeNode], levels: &[usize], src: &TreeDomain) -> Option<Vec<TreeNode>> {
    let own = level_set(anchor);
    let mut order: Vec<usize> = (0..anchor.len()).collect();
    order.sort_by_key(|&i| (anchor[i].level(), anchor[i].clone()));
    let permuted: Vec<TreeNode> = order.iter().map(|&i| anchor[i].clone()).collect();
    let target_level: Vec<usize> = permuted
        .iter()
        .map(|n| levels[own.binary_search(&n.level()).unwrap()])
        .collect();
    let mut chosen: Vec<TreeNode> = Vec::new();
    fn go(
        k: usize,
        permuted: &[TreeNode],
        target_level: &[usize],
        src: &TreeDomain,
        chosen: &mut Vec<TreeNode>,
    ) -> bool {
        if k == permuted.len() {
            return true;
        }
        let want = node_code(&permuted[..=k], IndexLanguage::Str);
        // an equal node already chosen is the only candidate when the anchor repeats
        if let Some(j) = permuted[..k].iter().position(|x| *x == permuted[k]) {
            let c = chosen[j].clone();
            chosen.push(c);
            if node_code(chosen, IndexLanguage::Str) == want && go(k + 1, permuted, target_level, src, chosen) {
                return true;
            }
            chosen.pop();
            return false;
        }
        for cand in src.level_nodes(target_level[k]) {
            chosen.push(cand);
            if node_code(chosen, IndexLanguage::Str) == want && go(k + 1, permuted, target_level, src, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if !go(0, &permuted, &target_level, src, &mut chosen) {
        return None;
    }
    let mut out = vec![TreeNode::root(); anchor.len()];
    for (slot, &i) in order.iter().enumerate() {
        out[i] = chosen[slot].clone();
    }
    Some(out)
}

/// The embedding `f(⟨⟩) = 0^{H_0}`, `f(η⌢⟨j⟩) = f(η)⌢⟨j⟩⌢0^{H_{ℓ+1}-H_ℓ-1}`,
/// a str-embedding whose image occupies exactly the levels `h`.
pub fn stretch_embedding(eta: &TreeNode, h: &[usize]) -> TreeNode {
    let mut out = TreeNode::root().pad_zeroes(h[0]);
    for (l, &j) in eta.entries().iter().enumerate() {
        out = out.child(j).pad_zeroes(h[l + 1] - h[l] - 1);
    }
    out
}

/// From s-indiscernible `c`, a tree on `target` that is str-indiscernible with
/// respect to the anchors and Δ, and str-based on `c`.
///
/// Each anchor `η̄_i` occupies `k_i` levels. A `k_i`-set of source levels gets
/// the Δ-type of any tuple str-similar to `η̄_i` on exactly those levels (well
/// defined by s-indiscernibility); a level set homogeneous for all anchors is
/// then searched and the target stretched onto it.
pub fn str_extract_from_s(
    m: &RelStructure,
    c: &ParameterMap,
    anchors: &[Vec<TreeNode>],
    delta: &[DeltaFormula],
    target: &TreeDomain,
) -> Result<ExtractionResult> {
    let dom = *c.shape().tree().ok_or_else(|| invalid("str-extraction needs a tree source"))?;
    target.validate()?;
    if anchors.is_empty() || anchors.iter().any(Vec::is_empty) {
        return Err(invalid("at least one nonempty anchor is required"));
    }
    for a in anchors {
        if !is_meet_closed(a) {
            return Err(invalid(format!("anchor {a:?} is not meet-closed")));
        }
        if !a.iter().all(|n| target.contains(n)) {
            return Err(invalid(format!("anchor {a:?} lies outside the target")));
        }
    }
    if target.branching > dom.branching {
        return Err(invalid("target branching exceeds the source branching"));
    }
    let max_arity = anchors.iter().map(Vec::len).max().unwrap();
    if !check_indiscernible(m, c, IndexLanguage::S, delta, max_arity)?.verdict {
        return Err(Error::NotSIndiscernible);
    }
    let levels_needed = target.level_count();
    let source_levels = dom.level_count();
    let ev = DeltaEvaluator::new(m, delta)?;
    let mut checks = Checks::new(levels_needed);
    for (i, a) in anchors.iter().enumerate() {
        let k = level_set(a).len();
        push_subsets(&mut checks, levels_needed, k, i as u32);
    }
    let mut color: HashMap<(u32, Vec<usize>), Option<DeltaType>> = HashMap::new();
    let mut ids: HashMap<Option<DeltaType>, u32> = HashMap::new();
    let found = search(
        &checks,
        |pos, img| increasing_candidates(pos, img, source_levels, levels_needed),
        |class, t| {
            let key = (class, t.to_vec());
            let ty = color
                .entry(key)
                .or_insert_with(|| {
                    realize(&anchors[class as usize], t, &dom).map(|nu| {
                        let idx: Vec<usize> =
                            nu.iter().map(|n| c.index_of(&IndexPoint::Node(n.clone())).unwrap()).collect();
                        ev.type_of(m, &c.concat(&idx))
                    })
                })
                .clone();
            let next = ids.len() as u32;
            *ids.entry(ty).or_insert(next)
        },
        DEFAULT_BUDGET,
    )?;
    let Some(h) = found else {
        let k = anchors.iter().map(|a| level_set(a).len()).max().unwrap();
        return Err(Error::InsufficientSource {
            required_estimate: ramsey_estimate(k, levels_needed, ids.len()),
            detail: format!("no homogeneous set of {levels_needed} levels among {source_levels}"),
        });
    };
    let trace: Vec<(IndexPoint, IndexPoint)> = enumerate_nodes(target)
        .into_iter()
        .map(|eta| {
            let f = stretch_embedding(&eta, &h);
            (IndexPoint::Node(eta), IndexPoint::Node(f))
        })
        .collect();
    let anchor_points: Vec<Vec<IndexPoint>> =
        anchors.iter().map(|a| a.iter().cloned().map(IndexPoint::Node).collect()).collect();
    finish(
        m,
        c,
        IndexShape::Tree(*target),
        trace,
        IndexLanguage::Str,
        delta,
        max_arity,
        Some(&anchor_points),
        Strategy::LevelHomogeneous,
    )
}

fn push_subsets(checks: &mut Checks, n: usize, k: usize, class: u32) {
    fn go(checks: &mut Checks, n: usize, k: usize, class: u32, start: usize, cur: &mut Vec<usize>) {
        if cur.len() == k {
            checks.push(cur.clone(), class);
            return;
        }
        for i in start..n {
            cur.push(i);
            go(checks, n, k, class, i + 1, cur);
            cur.pop();
        }
    }
    if k <= n {
        go(checks, n, k, class, 0, &mut Vec::new());
    }
}

/// The comb `η_i⌢⟨j+1⟩ ↦ (i, j)` with `η_i = 0^{2i}`: an L_ar-embedding of
/// part of a tree into the array (nodes read by level and lex order).
pub fn array_comb_map(rows: u32, cols: u32) -> Vec<(TreeNode, ArrayCell)> {
    let mut out = Vec::new();
    for i in 0..rows {
        let eta = TreeNode::root().pad_zeroes(2 * i as usize);
        for j in 0..cols {
            out.push((eta.child(j + 1), ArrayCell::new(i, j)));
        }
    }
    out
}

/// An AR-indiscernible `rows × cols` array, array-based on `a`.
pub fn array_extract(
    m: &RelStructure,
    a: &ParameterMap,
    delta: &[DeltaFormula],
    max_arity: usize,
    rows: u32,
    cols: u32,
) -> Result<ExtractionResult> {
    let IndexShape::Array { rows: sr, cols: sc } = *a.shape() else {
        return Err(invalid("array extraction needs an array source"));
    };
    if max_arity == 0 {
        return Err(invalid("max_arity must be at least 1"));
    }
    let shape = IndexShape::Array { rows, cols };
    shape.validate()?;
    if rows > sr || cols > sc {
        return Err(Error::InsufficientSource {
            required_estimate: 0,
            detail: format!("target {rows}x{cols} exceeds source {sr}x{sc}"),
        });
    }
    let ev = DeltaEvaluator::new(m, delta)?;
    let cell_idx = |r: u32, c: u32| (r * sc + c) as usize;
    let tpts = shape.points();
    let checks = Checks::by_code(&tpts, IndexLanguage::Ar, max_arity)?;
    let mut memo = Memo::new(|t: &[usize]| ev.type_of(m, &a.concat(t)));
    let trace_of = |img: &[usize]| -> Vec<(IndexPoint, IndexPoint)> {
        tpts.iter().cloned().zip(img.iter().map(|&s| a.points()[s].clone())).collect()
    };
    let cell_of = |s: usize| ArrayCell::new(s as u32 / sc, s as u32 % sc);

    // per row, an order-indiscernible choice of columns
    let mut per_row: Vec<Option<Vec<u32>>> = Vec::with_capacity(sr as usize);
    for r in 0..sr {
        let seq: Vec<Vec<Element>> = (0..sc).map(|c| a.tuples()[cell_idx(r, c)].clone()).collect();
        per_row.push(match order_extract(m, &seq, delta, max_arity, cols as usize) {
            Ok(cs) => Some(cs.into_iter().map(|c| c as u32).collect()),
            Err(Error::InsufficientSource { .. }) => None,
            Err(e) => return Err(e),
        });
    }
    let found = search(
        &checks,
        |pos, img| {
            let (i, j) = (pos as u32 / cols, pos as u32 % cols);
            if j == 0 {
                let lo = if i == 0 { 0 } else { cell_of(img[pos - 1]).row + 1 };
                (lo..sr)
                    .filter_map(|r| per_row[r as usize].as_ref().map(|cs| cell_idx(r, cs[0])))
                    .collect()
            } else {
                let r = cell_of(img[pos - 1]).row;
                vec![cell_idx(r, per_row[r as usize].as_ref().unwrap()[j as usize])]
            }
        },
        |_, t| memo.get(t),
        DEFAULT_BUDGET,
    )?;
    if let Some(img) = found {
        let r = finish(m, a, shape, trace_of(&img), IndexLanguage::Ar, delta, max_arity, None, Strategy::ColumnsThenRows)?;
        if r.certified() {
            return Ok(r);
        }
    }

    let found = search(
        &checks,
        |pos, img| {
            let (i, j) = (pos as u32 / cols, pos as u32 % cols);
            if j == 0 {
                let lo = if i == 0 { 0 } else { cell_of(img[pos - 1]).row + 1 };
                let hi = sr + i + 1 - rows;
                (lo..hi).flat_map(|r| (0..=sc - cols).map(move |c| cell_idx(r, c))).collect()
            } else {
                let prev = cell_of(img[pos - 1]);
                let hi = sc + j + 1 - cols;
                (prev.col + 1..hi).map(|c| cell_idx(prev.row, c)).collect()
            }
        },
        |_, t| memo.get(t),
        DEFAULT_BUDGET,
    )?;
    match found {
        Some(img) => finish(m, a, shape, trace_of(&img), IndexLanguage::Ar, delta, max_arity, None, Strategy::Exhaustive),
        None => Err(Error::InsufficientSource {
            required_estimate: ramsey_estimate(max_arity, (rows * cols) as usize, memo.distinct_values()),
            detail: format!("no indiscernible {rows}x{cols} sub-array in {sr}x{sc}"),
        }),
    }
}
