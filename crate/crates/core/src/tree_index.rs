//! Finite trees `^{h>}b` and `^{h≥}b` with meet, lexicographic order,
//! meet-closure and the sibling relations.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A node of a finite tree: a finite sequence of branch indices.
///
/// The derived `Ord` is the lexicographic order of the tree: a proper initial
/// segment comes first, otherwise the first differing entry decides.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct TreeNode(Vec<u32>);

impl TreeNode {
    pub fn new(seq: Vec<u32>) -> Self {
        TreeNode(seq)
    }

    pub fn root() -> Self {
        TreeNode(Vec::new())
    }

    /// Length of the sequence, i.e. the level of the node.
    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn child(&self, branch: u32) -> TreeNode {
        let mut seq = self.0.clone();
        seq.push(branch);
        TreeNode(seq)
    }

    pub fn parent(&self) -> Option<TreeNode> {
        if self.0.is_empty() {
            None
        } else {
            Some(TreeNode(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// `self ⊴ other`: `self` is an initial segment of `other` (possibly equal).
    pub fn is_prefix_of(&self, other: &TreeNode) -> bool {
        other.0.starts_with(&self.0)
    }

    /// `self ◁ other`: proper initial segment.
    pub fn is_proper_prefix_of(&self, other: &TreeNode) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    pub fn comparable(&self, other: &TreeNode) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// The length-`n` prefix, or the node itself when it is no longer than `n`.
    pub fn truncate(&self, n: usize) -> TreeNode {
        if self.0.len() <= n {
            self.clone()
        } else {
            TreeNode(self.0[..n].to_vec())
        }
    }

    /// Appends `extra` zeroes.
    pub fn pad_zeroes(&self, extra: usize) -> TreeNode {
        let mut seq = self.0.clone();
        seq.extend(std::iter::repeat_n(0, extra));
        TreeNode(seq)
    }
}

impl fmt::Debug for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "⟩")
    }
}

impl From<Vec<u32>> for TreeNode {
    fn from(v: Vec<u32>) -> Self {
        TreeNode(v)
    }
}

impl<const N: usize> From<[u32; N]> for TreeNode {
    fn from(v: [u32; N]) -> Self {
        TreeNode(v.to_vec())
    }
}

/// An ordered finite tuple of nodes of one domain.
pub type NodeTuple = Vec<TreeNode>;

/// The finite tree `^{h>}b` (`closed_top = false`, levels `0..h`) or
/// `^{h≥}b` (`closed_top = true`, levels `0..=h`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDomain {
    pub height: usize,
    pub branching: u32,
    pub closed_top: bool,
}

/// Domains above this many nodes are refused.
pub const MAX_DOMAIN_NODES: u128 = 1 << 20;

impl TreeDomain {
    pub fn new(height: usize, branching: u32, closed_top: bool) -> Result<Self> {
        let d = TreeDomain { height, branching, closed_top };
        d.validate()?;
        Ok(d)
    }

    /// `^{h>}b`.
    pub fn open(height: usize, branching: u32) -> Result<Self> {
        Self::new(height, branching, false)
    }

    /// `^{h≥}b`.
    pub fn closed(height: usize, branching: u32) -> Result<Self> {
        Self::new(height, branching, true)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branching == 0 {
            return Err(invalid("tree branching must be at least 1"));
        }
        if !self.closed_top && self.height == 0 {
            return Err(invalid("the open tree of height 0 is empty"));
        }
        let count = self.node_count_u128();
        if count > MAX_DOMAIN_NODES {
            return Err(Error::CapExceeded {
                what: "tree domain".into(),
                size: count,
                cap: MAX_DOMAIN_NODES,
            });
        }
        Ok(())
    }

    /// Number of levels present.
    pub fn level_count(&self) -> usize {
        if self.closed_top {
            self.height + 1
        } else {
            self.height
        }
    }

    pub fn max_level(&self) -> usize {
        self.level_count() - 1
    }

    fn node_count_u128(&self) -> u128 {
        let b = self.branching as u128;
        let mut total: u128 = 0;
        let mut width: u128 = 1;
        for _ in 0..self.level_count() {
            total = total.saturating_add(width);
            width = width.saturating_mul(b);
        }
        total
    }

    /// `Σ branching^i` over the included levels.
    pub fn node_count(&self) -> usize {
        self.node_count_u128() as usize
    }

    pub fn contains(&self, node: &TreeNode) -> bool {
        node.level() < self.level_count() && node.entries().iter().all(|&x| x < self.branching)
    }

    pub fn is_internal(&self, node: &TreeNode) -> bool {
        self.contains(node) && node.level() < self.max_level()
    }

    /// Children of `node` inside the domain, in lexicographic order.
    pub fn children(&self, node: &TreeNode) -> Vec<TreeNode> {
        if !self.is_internal(node) {
            return Vec::new();
        }
        (0..self.branching).map(|i| node.child(i)).collect()
    }

    /// All nodes of one level, in lexicographic order.
    pub fn level_nodes(&self, level: usize) -> Vec<TreeNode> {
        let mut out = vec![TreeNode::root()];
        for _ in 0..level {
            out = out
                .iter()
                .flat_map(|n| (0..self.branching).map(move |i| n.child(i)))
                .collect();
        }
        out
    }

    /// Maximal nodes (the top level).
    pub fn leaves(&self) -> Vec<TreeNode> {
        self.level_nodes(self.max_level())
    }
}

impl fmt::Display for TreeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = if self.closed_top { "≥" } else { ">" };
        write!(f, "^{{{}{}}}{}", self.height, rel, self.branching)
    }
}

/// All nodes sorted by (level, lex).
pub fn enumerate_nodes(d: &TreeDomain) -> Vec<TreeNode> {
    let mut out = Vec::with_capacity(d.node_count());
    for level in 0..d.level_count() {
        out.extend(d.level_nodes(level));
    }
    out
}

/// Longest common initial segment.
pub fn meet(a: &TreeNode, b: &TreeNode) -> TreeNode {
    let common = a
        .entries()
        .iter()
        .zip(b.entries())
        .take_while(|(x, y)| x == y)
        .count();
    TreeNode(a.entries()[..common].to_vec())
}

/// Length of the meet without building it.
pub fn meet_level(a: &TreeNode, b: &TreeNode) -> usize {
    a.entries()
        .iter()
        .zip(b.entries())
        .take_while(|(x, y)| x == y)
        .count()
}

/// The lexicographic order `<_lex`.
pub fn lex_cmp(a: &TreeNode, b: &TreeNode) -> Ordering {
    a.cmp(b)
}

pub fn is_meet_closed(t: &[TreeNode]) -> bool {
    t.iter()
        .all(|a| t.iter().all(|b| t.contains(&meet(a, b))))
}

/// Smallest superset of `t` closed under pairwise meets: the original nodes
/// first in their original order, then the new meets in lexicographic order.
///
/// In a tree the set of pairwise meets of the originals is already closed.
pub fn meet_closure(t: &[TreeNode]) -> NodeTuple {
    let mut extra: Vec<TreeNode> = Vec::new();
    for (i, a) in t.iter().enumerate() {
        for b in &t[i + 1..] {
            let m = meet(a, b);
            if !t.contains(&m) && !extra.contains(&m) {
                extra.push(m);
            }
        }
    }
    extra.sort();
    let mut out = t.to_vec();
    out.extend(extra);
    out
}

/// Per-node truncation to level `n`.
pub fn restrict_tuple(t: &[TreeNode], n: usize) -> NodeTuple {
    t.iter().map(|x| x.truncate(n)).collect()
}

/// Strongest sibling relation holding of a family of nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kinship {
    Siblings,
    SameLevelDistantSiblings,
    DistantSiblings,
    None,
}

/// Classifies a family of at least two nodes.
///
/// Distant siblings extend distinct children `ν⌢⟨t_i⟩` of one node `ν`; such a
/// `ν` must be the meet of the whole family. Siblings are checked first since
/// they are also same-level distant siblings.
pub fn kinship(t: &[TreeNode]) -> Result<Kinship> {
    if t.len() < 2 {
        return Err(Error::TooFewNodes(t.len()));
    }
    let base = t
        .iter()
        .skip(1)
        .fold(t[0].level(), |acc, x| acc.min(meet_level(&t[0], x)));
    let mut branches = Vec::with_capacity(t.len());
    for x in t {
        if x.level() <= base {
            return Ok(Kinship::None);
        }
        branches.push(x.entries()[base]);
    }
    let mut sorted = branches.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != branches.len() {
        return Ok(Kinship::None);
    }
    let same_level = t.iter().all(|x| x.level() == t[0].level());
    Ok(if same_level && t[0].level() == base + 1 {
        Kinship::Siblings
    } else if same_level {
        Kinship::SameLevelDistantSiblings
    } else {
        Kinship::DistantSiblings
    })
}

pub fn are_siblings(t: &[TreeNode]) -> bool {
    matches!(kinship(t), Ok(Kinship::Siblings))
}

pub fn are_distant_siblings(t: &[TreeNode]) -> bool {
    matches!(
        kinship(t),
        Ok(Kinship::Siblings | Kinship::SameLevelDistantSiblings | Kinship::DistantSiblings)
    )
}

pub fn are_same_level_distant_siblings(t: &[TreeNode]) -> bool {
    matches!(
        kinship(t),
        Ok(Kinship::Siblings | Kinship::SameLevelDistantSiblings)
    )
}

pub fn pairwise_incomparable(t: &[TreeNode]) -> bool {
    t.iter()
        .enumerate()
        .all(|(i, a)| t[i + 1..].iter().all(|b| !a.comparable(b)))
}
