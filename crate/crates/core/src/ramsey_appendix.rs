//! Finite versions of the two partition theorems behind the tree modeling
//! results: homogeneity for ⊥-classes over a disjoint union of chains, and
//! homogeneity for s-classes over `^{n≥}λ`.
//!
//! Both extractors first follow the constructive outline of the infinitary
//! proof (j-homogenization level by level for chains; level functions for
//! m = 1 and the `+_B` recursion for m > 1 on trees), then fall back to an
//! exhaustive search. Whatever is returned is re-checked exhaustively.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::indisc::for_each_index_tuple;
use crate::qftype::{node_code, IndexLanguage, IndexPoint, SimilarityCode};
use crate::search::{order_pattern, search, Checks, Interner, DEFAULT_BUDGET};
use crate::tree_index::{enumerate_nodes, TreeDomain, TreeNode};

/// Disjoint chains `X_0, X_1, ..` with elements numbered consecutively: chain
/// `i` holds the ids `offset(i)..offset(i) + size(i)` in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeveledChains {
    sizes: Vec<usize>,
    #[serde(skip)]
    offsets: Vec<usize>,
}

impl LeveledChains {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(invalid("chains must be nonempty"));
        }
        let offsets = sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        Ok(LeveledChains { sizes, offsets })
    }

    pub fn chain_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn id(&self, chain: usize, pos: usize) -> usize {
        self.offsets[chain] + pos
    }

    pub fn chain(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }

    /// `ℓ(η)` and the position of `η` in its chain.
    pub fn locate(&self, e: usize) -> Result<(usize, usize)> {
        if e >= self.total() {
            return Err(invalid(format!("element {e} is not in the chains")));
        }
        let c = self.offsets.partition_point(|&o| o <= e) - 1;
        Ok((c, e - self.offsets[c]))
    }
}

/// Chain of each coordinate, and its dense rank among the coordinates in the
/// same chain. Equal codes are exactly ⊥-equivalence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PerpCode {
    pub chains: Vec<usize>,
    pub ranks: Vec<u8>,
}

pub fn perp_code(t: &[usize], chains: &LeveledChains) -> Result<PerpCode> {
    let loc = t.iter().map(|&e| chains.locate(e)).collect::<Result<Vec<_>>>()?;
    let ranks = loc
        .iter()
        .map(|&(c, p)| {
            let mut same: Vec<usize> = loc.iter().filter(|x| x.0 == c).map(|x| x.1).collect();
            same.sort_unstable();
            same.dedup();
            same.binary_search(&p).unwrap() as u8
        })
        .collect();
    Ok(PerpCode { chains: loc.iter().map(|x| x.0).collect(), ranks })
}

fn levels_of(t: &[usize], chains: &LeveledChains) -> Result<Vec<usize>> {
    t.iter().map(|&e| chains.locate(e).map(|x| x.0)).collect()
}

/// `N_β(η̄)`: the number of occupied levels at or above β.
pub fn n_beta(t: &[usize], beta: usize, chains: &LeveledChains) -> Result<usize> {
    let mut lev = levels_of(t, chains)?;
    lev.sort_unstable();
    lev.dedup();
    Ok(lev.iter().filter(|&&l| l >= beta).count())
}

/// `η̄ ≈_α ν̄`: ⊥-equivalent, α occupied, and equal off level α.
pub fn approx_alpha(t: &[usize], u: &[usize], alpha: usize, chains: &LeveledChains) -> Result<bool> {
    if t.len() != u.len() || perp_code(t, chains)? != perp_code(u, chains)? {
        return Ok(false);
    }
    let lev = levels_of(t, chains)?;
    Ok(lev.contains(&alpha) && (0..t.len()).all(|i| lev[i] == alpha || t[i] == u[i]))
}

/// `η̄ ≈_(α,k) ν̄`: ⊥-equivalent, α occupied, equal below α, and at most k
/// occupied levels from α up.
pub fn approx_alpha_k(t: &[usize], u: &[usize], alpha: usize, k: usize, chains: &LeveledChains) -> Result<bool> {
    if t.len() != u.len() || perp_code(t, chains)? != perp_code(u, chains)? {
        return Ok(false);
    }
    let lev = levels_of(t, chains)?;
    Ok(lev.contains(&alpha)
        && (0..t.len()).all(|i| lev[i] >= alpha || t[i] == u[i])
        && n_beta(t, alpha, chains)? <= k)
}

pub const COLORING_CAP: usize = 1 << 24;

/// A total coloring of the `arity`-tuples of a ground set `0..ground`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    arity: usize,
    ground: usize,
    colors: u32,
    table: Vec<u32>,
}

impl Coloring {
    pub fn from_fn(ground: usize, arity: usize, mut f: impl FnMut(&[usize]) -> u32) -> Result<Self> {
        if arity == 0 || ground == 0 {
            return Err(invalid("arity and ground must be positive"));
        }
        let size = ground
            .checked_pow(arity as u32)
            .filter(|&s| s <= COLORING_CAP)
            .ok_or_else(|| Error::CapExceeded { what: "coloring table".into(), size: u128::MAX, cap: COLORING_CAP as u128 })?;
        let mut table = Vec::with_capacity(size);
        let mut t = vec![0; arity];
        for code in 0..size {
            let mut c = code;
            for slot in t.iter_mut().rev() {
                *slot = c % ground;
                c /= ground;
            }
            table.push(f(&t));
        }
        let colors = table.iter().max().map_or(0, |&m| m + 1);
        Ok(Coloring { arity, ground, colors, table })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn colors(&self) -> u32 {
        self.colors
    }

    pub fn color(&self, t: &[usize]) -> u32 {
        let i = t.iter().fold(0, |acc, &x| acc * self.ground + x);
        self.table[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogStrategy {
    /// j-homogenization over the chains.
    JHomogenization,
    /// m = 1: refinement by level functions.
    LevelFunctions,
    /// m > 1: recursion on the height through `+_B`.
    PlusB,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Chosen positions within each chain.
    Chains(Vec<Vec<usize>>),
    /// The chosen subtree.
    Tree(Vec<TreeNode>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomogeneousCertificate {
    pub selection: Selection,
    pub strategy: HomogStrategy,
    /// Proof-mirroring attempts that did not produce a verified selection.
    pub fallbacks: Vec<HomogStrategy>,
    pub verified: bool,
    pub checked_tuples: usize,
    pub classes: usize,
}

/// `ℶ_k(base)`, saturating at `u64::MAX`.
pub fn beth(k: usize, base: u64) -> u64 {
    let mut x = base;
    for _ in 0..k {
        x = if x >= 64 { u64::MAX } else { 1u64 << x };
    }
    x
}

/// The bookkeeping function of the tree partition theorem.
pub fn bound_k(n: usize, m: usize) -> u64 {
    if n == 0 || m <= 1 {
        return 0;
    }
    if n == 1 {
        return m as u64 - 1;
    }
    let m2 = m as u64;
    bound_k(n - 1, m) + m2 * m2 + m2 + 4
}

/// Over chains: equal ⊥-codes ⇒ equal colors, on all tuples from the union.
pub fn verify_polarized(chains: &LeveledChains, f: &Coloring, sel: &[Vec<usize>]) -> Result<(bool, usize, usize)> {
    let ids: Vec<usize> =
        sel.iter().enumerate().flat_map(|(c, ps)| ps.iter().map(move |&p| (c, p))).map(|(c, p)| chains.id(c, p)).collect();
    let mut seen: HashMap<PerpCode, u32> = HashMap::new();
    let mut count = 0;
    let mut err = None;
    let ok = for_each_index_tuple(ids.len(), f.arity(), |idx| {
        if idx.len() < f.arity() {
            return true;
        }
        let t: Vec<usize> = idx.iter().map(|&i| ids[i]).collect();
        count += 1;
        let code = match perp_code(&t, chains) {
            Ok(c) => c,
            Err(e) => {
                err = Some(e);
                return false;
            }
        };
        let col = f.color(&t);
        *seen.entry(code).or_insert(col) == col
    });
    match err {
        Some(e) => Err(e),
        None => Ok((ok, count, seen.len())),
    }
}

/// Over a tree: equal s-codes ⇒ equal colors, on all m-tuples from `nodes`.
pub fn verify_tree(domain: &TreeDomain, f: &Coloring, nodes: &[TreeNode]) -> Result<(bool, usize, usize)> {
    let all = enumerate_nodes(domain);
    let pos: HashMap<&TreeNode, usize> = all.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let ids = nodes
        .iter()
        .map(|n| pos.get(n).copied().ok_or_else(|| invalid(format!("node {n:?} outside the domain"))))
        .collect::<Result<Vec<_>>>()?;
    let mut seen: HashMap<SimilarityCode, u32> = HashMap::new();
    let mut count = 0;
    let ok = for_each_index_tuple(ids.len(), f.arity(), |idx| {
        if idx.len() < f.arity() {
            return true;
        }
        count += 1;
        let t: Vec<TreeNode> = idx.iter().map(|&i| nodes[i].clone()).collect();
        let col = f.color(&idx.iter().map(|&i| ids[i]).collect::<Vec<_>>());
        *seen.entry(node_code(&t, IndexLanguage::S)).or_insert(col) == col
    });
    Ok((ok, count, seen.len()))
}

fn increasing_within(lo: usize, len: usize, want: usize, pos: usize) -> Vec<usize> {
    (lo..=len.saturating_sub(want - pos)).collect()
}

/// `Z ⊆ cands` of the given size such that ≈_α-equivalent tuples over
/// `fixed ∪ Z` agree, where the tuples vary only at level α.
fn homogeneous_at_level(f: &Coloring, cands: &[usize], fixed: &[usize], size: usize) -> Result<Option<Vec<usize>>> {
    let n = f.arity();
    let mut checks = Checks::new(size);
    let mut contexts: Interner<(Vec<bool>, Vec<usize>, Vec<u8>)> = Interner::default();
    let mut shape_of: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
    for mask in 1u32..(1 << n) {
        let at: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let r = at.iter().filter(|&&b| b).count();
        for_each_index_tuple(fixed.len().max(1), n - r, |others| {
            if others.len() != n - r || (n > r && fixed.is_empty()) {
                return true;
            }
            let others: Vec<usize> = others.iter().map(|&i| fixed[i]).collect();
            for_each_tuple(size, r, |u| {
                let key = (at.clone(), others.clone(), order_pattern(u));
                let id = contexts.id(key);
                if id as usize == shape_of.len() {
                    shape_of.push((at.clone(), others.clone()));
                }
                checks.push(u.to_vec(), id);
            });
            true
        });
    }
    let full = |class: u32, src: &[usize]| -> u32 {
        let (at, others) = &shape_of[class as usize];
        let (mut a, mut o) = (src.iter(), others.iter());
        let t: Vec<usize> = at.iter().map(|&b| if b { cands[*a.next().unwrap()] } else { *o.next().unwrap() }).collect();
        f.color(&t)
    };
    let found = search(
        &checks,
        |pos, img| increasing_within(if pos == 0 { 0 } else { img[pos - 1] + 1 }, cands.len(), size, pos),
        full,
        DEFAULT_BUDGET / 10,
    )?;
    Ok(found.map(|z| z.into_iter().map(|i| cands[i]).collect()))
}

fn for_each_tuple(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    crate::indisc::for_each_tuple_of_len(n, k, &mut |t: &[usize]| {
        f(t);
        true
    });
}

fn mirror_polarized(chains: &LeveledChains, f: &Coloring, sizes: &[usize]) -> Result<Option<Vec<Vec<usize>>>> {
    let n = f.arity();
    let mut x: Vec<Vec<usize>> = (0..chains.chain_count()).map(|i| chains.chain(i).collect()).collect();
    for j in 0..n {
        let mut next: Vec<Vec<usize>> = Vec::new();
        for alpha in 0..x.len() {
            let mut fixed: Vec<usize> = next.iter().flatten().copied().collect();
            for s in &x[alpha + 1..] {
                fixed.extend(s.iter().take(n));
            }
            let want = sizes[alpha];
            let mut found = None;
            // keep as much room as possible for the later stages
            let top = if j + 1 == n { want } else { x[alpha].len() };
            for size in (want..=top).rev() {
                match homogeneous_at_level(f, &x[alpha], &fixed, size) {
                    Ok(Some(z)) => {
                        found = Some(z);
                        break;
                    }
                    Ok(None) | Err(Error::SearchBudgetExceeded(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            match found {
                Some(z) => next.push(z),
                None => return Ok(None),
            }
        }
        x = next;
    }
    Ok(Some(x.iter().map(|s| s.iter().map(|&e| chains.locate(e).unwrap().1).collect()).collect()))
}

fn exhaustive_polarized(chains: &LeveledChains, f: &Coloring, sizes: &[usize]) -> Result<Option<Vec<Vec<usize>>>> {
    let target = LeveledChains::new(sizes.to_vec())?;
    let mut checks = Checks::new(target.total());
    let mut ids = Interner::default();
    let mut err = None;
    for_each_index_tuple(target.total(), f.arity(), |t| {
        if t.len() < f.arity() {
            return true;
        }
        match perp_code(t, &target) {
            Ok(c) => checks.push(t.to_vec(), ids.id(c)),
            Err(e) => {
                err = Some(e);
                return false;
            }
        }
        true
    });
    if let Some(e) = err {
        return Err(e);
    }
    let found = search(
        &checks,
        |pos, img| {
            let (c, p) = target.locate(pos).unwrap();
            let lo = if p == 0 { chains.chain(c).start } else { img[pos - 1] + 1 };
            let hi = chains.chain(c).end - (sizes[c] - p);
            (lo..=hi).collect()
        },
        |_, src| f.color(src),
        DEFAULT_BUDGET,
    )?;
    Ok(found.map(|img| {
        (0..target.chain_count())
            .map(|c| target.chain(c).map(|i| chains.locate(img[i]).unwrap().1).collect())
            .collect()
    }))
}

fn polarized_sized(chains: &LeveledChains, f: &Coloring, sizes: &[usize]) -> Result<HomogeneousCertificate> {
    if f.ground() != chains.total() {
        return Err(invalid("coloring ground does not match the chains"));
    }
    if sizes.iter().zip(chains.sizes()).any(|(&s, &have)| s == 0 || s > have) {
        return Err(Error::InsufficientSource {
            required_estimate: beth(f.arity() * (f.arity() + 1), f.colors() as u64).saturating_add(1),
            detail: "a chain is smaller than the target".into(),
        });
    }
    let mut fallbacks = Vec::new();
    let mut attempts: Vec<(HomogStrategy, Option<Vec<Vec<usize>>>)> = Vec::new();
    if let Some(sel) = mirror_polarized(chains, f, sizes)? {
        attempts.push((HomogStrategy::JHomogenization, Some(sel)));
    } else {
        fallbacks.push(HomogStrategy::JHomogenization);
    }
    for (strategy, sel) in attempts {
        let sel = sel.unwrap();
        let (ok, checked, classes) = verify_polarized(chains, f, &sel)?;
        if ok {
            return Ok(HomogeneousCertificate {
                selection: Selection::Chains(sel),
                strategy,
                fallbacks,
                verified: true,
                checked_tuples: checked,
                classes,
            });
        }
        fallbacks.push(strategy);
    }
    match exhaustive_polarized(chains, f, sizes)? {
        Some(sel) => {
            let (ok, checked, classes) = verify_polarized(chains, f, &sel)?;
            Ok(HomogeneousCertificate {
                selection: Selection::Chains(sel),
                strategy: HomogStrategy::Exhaustive,
                fallbacks,
                verified: ok,
                checked_tuples: checked,
                classes,
            })
        }
        None => Err(Error::InsufficientSource {
            required_estimate: beth(f.arity() * (f.arity() + 1), f.colors() as u64).saturating_add(1),
            detail: format!("no ⊥-homogeneous selection of sizes {sizes:?}"),
        }),
    }
}

/// `Y_i ⊆ X_i` of the target size on every chain, with ⊥-equivalent tuples
/// of the union colored alike.
pub fn polarized_extract(chains: &LeveledChains, f: &Coloring, target: usize) -> Result<HomogeneousCertificate> {
    polarized_sized(chains, f, &vec![target; chains.chain_count()])
}

/// `η̄ +_B β̄`: coordinates in B at level n take one more entry.
pub fn plus_b(t: &[TreeNode], betas: &[u32], b: &[usize], n: usize) -> Result<Vec<TreeNode>> {
    if betas.len() != t.len() {
        return Err(invalid("one branch index per coordinate"));
    }
    if let Some(&i) = b.iter().find(|&&i| i >= t.len()) {
        return Err(invalid(format!("index {i} outside the tuple")));
    }
    if t.iter().any(|x| x.level() > n) {
        return Err(invalid(format!("coordinates must lie at levels ≤ {n}")));
    }
    Ok(t.iter()
        .enumerate()
        .map(|(i, x)| if b.contains(&i) && x.level() == n { x.child(betas[i]) } else { x.clone() })
        .collect())
}

struct TreeCtx<'a> {
    domain: TreeDomain,
    nodes: Vec<TreeNode>,
    pos: HashMap<TreeNode, usize>,
    f: &'a Coloring,
}

impl<'a> TreeCtx<'a> {
    fn new(domain: TreeDomain, f: &'a Coloring) -> Self {
        let nodes = enumerate_nodes(&domain);
        let pos = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        TreeCtx { domain, nodes, pos, f }
    }

    fn color(&self, t: &[TreeNode]) -> u32 {
        self.f.color(&t.iter().map(|n| self.pos[n]).collect::<Vec<_>>())
    }
}

fn level_functions(ctx: &TreeCtx, target: u32) -> Option<Vec<TreeNode>> {
    let d = &ctx.domain;
    let n = d.max_level();
    let mut keep: Vec<bool> = vec![true; ctx.nodes.len()];
    let inside = |keep: &[bool], x: &TreeNode| keep[ctx.pos[x]];
    for j in (1..=n).rev() {
        for eta in d.level_nodes(j - 1) {
            if !inside(&keep, &eta) {
                continue;
            }
            let kids: Vec<TreeNode> = d.children(&eta).into_iter().filter(|k| inside(&keep, k)).collect();
            // 𝒢_κ(α) via the first kept descendant at each level α ≥ j
            let mut groups: Vec<(Vec<u32>, Vec<TreeNode>)> = Vec::new();
            for k in &kids {
                let mut xi = k.clone();
                let mut g = vec![ctx.color(std::slice::from_ref(&xi))];
                while xi.level() < n {
                    xi = d.children(&xi).into_iter().find(|c| inside(&keep, c))?;
                    g.push(ctx.color(std::slice::from_ref(&xi)));
                }
                match groups.iter_mut().find(|(h, _)| *h == g) {
                    Some((_, ks)) => ks.push(k.clone()),
                    None => groups.push((g, vec![k.clone()])),
                }
            }
            let chosen = groups.into_iter().find(|(_, ks)| ks.len() >= target as usize)?.1;
            let chosen = &chosen[..target as usize];
            for k in &kids {
                if !chosen.contains(k) {
                    for (i, x) in ctx.nodes.iter().enumerate() {
                        if k.is_prefix_of(x) {
                            keep[i] = false;
                        }
                    }
                }
            }
        }
    }
    Some(ctx.nodes.iter().zip(&keep).filter(|(_, &k)| k).map(|(x, _)| x.clone()).collect())
}

fn subsets(m: usize) -> Vec<Vec<usize>> {
    (0u32..1 << m).map(|mask| (0..m).filter(|&i| mask >> i & 1 == 1).collect()).collect()
}

fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_tuple(n, k, |t| out.push(t.to_vec()));
    out
}

/// The `+_B` recursion: homogenize the levels below the top for the induced
/// coloring, then homogenize the top level as chains over the children of
/// the level-(height-1) nodes.
fn plus_b_recursion(ctx: &TreeCtx, target: u32) -> Result<Option<Vec<TreeNode>>> {
    let d = &ctx.domain;
    let n = d.max_level();
    let m = ctx.f.arity();
    if n == 0 {
        return Ok(Some(vec![TreeNode::root()]));
    }
    let lambda = d.branching;
    let bs = subsets(m);
    let betas = all_tuples(lambda as usize, m);
    let sub = TreeDomain::closed(n - 1, lambda)?;
    let sub_nodes = enumerate_nodes(&sub);
    let mut ids: Interner<Vec<u32>> = Interner::default();
    let g = Coloring::from_fn(sub_nodes.len(), m, |t| {
        let eta: Vec<TreeNode> = t.iter().map(|&i| sub_nodes[i].clone()).collect();
        let mut v = Vec::with_capacity(bs.len() * betas.len());
        for b in &bs {
            for beta in &betas {
                let beta: Vec<u32> = beta.iter().map(|&x| x as u32).collect();
                v.push(ctx.color(&plus_b(&eta, &beta, b, n - 1).unwrap()));
            }
        }
        ids.id(v)
    })?;
    let sub_ctx = TreeCtx::new(sub, &g);
    let i0 = match homogenize_tree(&sub_ctx, target) {
        Ok((sel, _, _)) => sel,
        Err(Error::InsufficientSource { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let tops: Vec<TreeNode> = i0.iter().filter(|x| x.level() == n - 1).cloned().collect();
    let chains = LeveledChains::new(vec![lambda as usize; tops.len()])?;
    let member = |e: usize| {
        let (c, p) = chains.locate(e).unwrap();
        tops[c].child(p as u32)
    };
    let i0_tuples = all_tuples(i0.len(), m);
    let mut hid: Interner<Vec<u32>> = Interner::default();
    let h = Coloring::from_fn(chains.total(), m, |t| {
        let beta: Vec<u32> = t.iter().map(|&e| *member(e).entries().last().unwrap()).collect();
        let mut v = Vec::with_capacity(bs.len() * i0_tuples.len());
        for b in &bs {
            for u in &i0_tuples {
                let eta: Vec<TreeNode> = u.iter().map(|&i| i0[i].clone()).collect();
                v.push(ctx.color(&plus_b(&eta, &beta, b, n - 1).unwrap()));
            }
        }
        hid.id(v)
    })?;
    // one spare element on the last chain lies lex-above everything kept
    let mut sizes = vec![target as usize; tops.len()];
    *sizes.last_mut().unwrap() += 1;
    if sizes.last().copied().unwrap() > lambda as usize {
        return Ok(None);
    }
    let cert = match polarized_sized(&chains, &h, &sizes) {
        Ok(c) => c,
        Err(Error::InsufficientSource { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let Selection::Chains(ys) = cert.selection else { unreachable!() };
    let mut out = i0;
    for (c, ps) in ys.iter().enumerate() {
        for &p in &ps[..target as usize] {
            out.push(tops[c].child(p as u32));
        }
    }
    out.sort_by(|a, b| (a.level(), a).cmp(&(b.level(), b)));
    Ok(Some(out))
}

fn exhaustive_tree(ctx: &TreeCtx, target: u32) -> Result<Option<Vec<TreeNode>>> {
    let d = &ctx.domain;
    let t = TreeDomain::closed(d.max_level(), target)?;
    let tnodes = enumerate_nodes(&t);
    let tpos: HashMap<&TreeNode, usize> = tnodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let points: Vec<IndexPoint> = tnodes.iter().cloned().map(IndexPoint::Node).collect();
    let mut checks = Checks::new(points.len());
    let mut ids = Interner::default();
    let m = ctx.f.arity();
    for_each_tuple(points.len(), m, |u| {
        let nodes: Vec<TreeNode> = u.iter().map(|&i| tnodes[i].clone()).collect();
        checks.push(u.to_vec(), ids.id(node_code(&nodes, IndexLanguage::S)));
    });
    let found = search(
        &checks,
        |pos, img| {
            let x = &tnodes[pos];
            let Some(parent) = x.parent() else { return vec![ctx.pos[&TreeNode::root()]] };
            let last = *x.entries().last().unwrap();
            let lo = if last == 0 {
                0
            } else {
                let prev = parent.child(last - 1);
                *ctx.nodes[img[tpos[&prev]]].entries().last().unwrap() + 1
            };
            let hi = d.branching - (target - last);
            let p = &ctx.nodes[img[tpos[&parent]]];
            (lo..=hi).map(|b| ctx.pos[&p.child(b)]).collect()
        },
        |_, src| ctx.f.color(src),
        DEFAULT_BUDGET,
    )?;
    Ok(found.map(|img| img.into_iter().map(|i| ctx.nodes[i].clone()).collect()))
}

fn homogenize_tree(ctx: &TreeCtx, target: u32) -> Result<(Vec<TreeNode>, HomogStrategy, Vec<HomogStrategy>)> {
    let mut fallbacks = Vec::new();
    let mirror = if ctx.f.arity() == 1 {
        (HomogStrategy::LevelFunctions, level_functions(ctx, target))
    } else {
        (HomogStrategy::PlusB, plus_b_recursion(ctx, target)?)
    };
    if let (s, Some(sel)) = mirror {
        if verify_tree(&ctx.domain, ctx.f, &sel)?.0 {
            return Ok((sel, s, fallbacks));
        }
        fallbacks.push(s);
    } else {
        fallbacks.push(mirror.0);
    }
    match exhaustive_tree(ctx, target)? {
        Some(sel) => Ok((sel, HomogStrategy::Exhaustive, fallbacks)),
        None => Err(Error::InsufficientSource {
            required_estimate: beth(bound_k(ctx.domain.max_level(), ctx.f.arity()) as usize, ctx.f.colors() as u64)
                .saturating_add(1),
            detail: format!("no s-homogeneous subtree of branching {target}"),
        }),
    }
}

/// An s-homogeneous subtree of the closed tree `domain` containing the root,
/// occupying every level, with exactly `target` children at each internal
/// node. The coloring is on m-tuples of nodes numbered in level-lex order.
pub fn tree_homogeneous_extract(domain: &TreeDomain, f: &Coloring, target: u32) -> Result<HomogeneousCertificate> {
    if !domain.closed_top {
        return Err(invalid("tree homogenization works on closed trees"));
    }
    if f.ground() != domain.node_count() {
        return Err(invalid("coloring ground does not match the tree"));
    }
    if target == 0 || target > domain.branching {
        return Err(Error::InsufficientSource {
            required_estimate: beth(bound_k(domain.max_level(), f.arity()) as usize, f.colors() as u64)
                .saturating_add(1),
            detail: format!("branching {} is below the target {target}", domain.branching),
        });
    }
    let ctx = TreeCtx::new(*domain, f);
    let (sel, strategy, fallbacks) = homogenize_tree(&ctx, target)?;
    let (ok, checked, classes) = verify_tree(domain, f, &sel)?;
    Ok(HomogeneousCertificate {
        selection: Selection::Tree(sel),
        strategy,
        fallbacks,
        verified: ok,
        checked_tuples: checked,
        classes,
    })
}
