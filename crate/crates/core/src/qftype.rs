//! Quantifier-free types of index tuples and the similarity relations
//! `~_s`, `~_str`, `~_ar`.
//!
//! A code lists every atomic relation satisfied by the meet-closure of a tuple,
//! by position. Because the closure enumeration is canonical (originals, then
//! new meets in lex order), equal codes mean the two closures are isomorphic
//! under the position-matching bijection.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree_index::{meet, meet_closure, restrict_tuple, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndexLanguage {
    /// `{⊴, ∧, <_lex, (P_α)}`
    #[serde(alias = "s")]
    S,
    /// `{⊴, ∧, <_lex, <_len}`
    #[serde(alias = "str", alias = "STR")]
    Str,
    /// `{<_len, <_2}`
    #[serde(alias = "ar", alias = "AR")]
    Ar,
}

impl fmt::Display for IndexLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexLanguage::S => "s",
            IndexLanguage::Str => "str",
            IndexLanguage::Ar => "ar",
        })
    }
}

impl std::str::FromStr for IndexLanguage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s" => Ok(IndexLanguage::S),
            "str" => Ok(IndexLanguage::Str),
            "ar" => Ok(IndexLanguage::Ar),
            other => Err(Error::InvalidInput(format!("unknown index language {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArrayCell {
    pub row: u32,
    pub col: u32,
}

impl ArrayCell {
    pub fn new(row: u32, col: u32) -> Self {
        ArrayCell { row, col }
    }
}

/// A point of an index structure: a tree node or a cell of a rows×cols array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexPoint {
    Node(TreeNode),
    Cell(ArrayCell),
}

impl From<TreeNode> for IndexPoint {
    fn from(n: TreeNode) -> Self {
        IndexPoint::Node(n)
    }
}

impl From<ArrayCell> for IndexPoint {
    fn from(c: ArrayCell) -> Self {
        IndexPoint::Cell(c)
    }
}

impl IndexPoint {
    pub fn as_node(&self) -> Option<&TreeNode> {
        match self {
            IndexPoint::Node(n) => Some(n),
            IndexPoint::Cell(_) => None,
        }
    }

    pub fn as_cell(&self) -> Option<ArrayCell> {
        match self {
            IndexPoint::Cell(c) => Some(*c),
            IndexPoint::Node(_) => None,
        }
    }
}

/// One satisfied atomic formula, by closure positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    /// `c_i = c_j`, `i < j`
    Eq(u16, u16),
    /// `c_i ◁ c_j`
    Prefix(u16, u16),
    /// `c_i ∧ c_j = c_k` with `k` the first such position, `i < j`
    Meet(u16, u16, u16),
    /// `c_i <_lex c_j`
    Lex(u16, u16),
    /// `c_i <_len c_j`
    LenLt(u16, u16),
    /// `P_α(c_i)`
    Level(u16, u32),
    /// `c_i <_2 c_j`: same row (level), smaller column (lex)
    Lt2(u16, u16),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimilarityCode {
    pub lang: IndexLanguage,
    pub arity: usize,
    pub closure_size: usize,
    pub atoms: Vec<Atom>,
}

fn pos(i: usize) -> u16 {
    u16::try_from(i).expect("tuple too long for a similarity code")
}

/// Code of a node tuple. Under `Ar` a node is read as the cell
/// (level, lex position): `<_len` compares levels and `<_2` is lex order
/// within a level.
pub fn node_code(t: &[TreeNode], lang: IndexLanguage) -> SimilarityCode {
    if lang == IndexLanguage::Ar {
        return ar_code(t.len(), |i, j| {
            let (a, b) = (&t[i], &t[j]);
            (a == b, a.level() < b.level(), a.level() == b.level() && a < b)
        });
    }
    let c = meet_closure(t);
    let n = c.len();
    let mut atoms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (&c[i], &c[j]);
            if i < j {
                if a == b {
                    atoms.push(Atom::Eq(pos(i), pos(j)));
                }
                let m = meet(a, b);
                let k = c.iter().position(|x| *x == m).expect("closure contains meets");
                atoms.push(Atom::Meet(pos(i), pos(j), pos(k)));
            }
            if a.is_proper_prefix_of(b) {
                atoms.push(Atom::Prefix(pos(i), pos(j)));
            }
            if a < b {
                atoms.push(Atom::Lex(pos(i), pos(j)));
            }
            if lang == IndexLanguage::Str && a.level() < b.level() {
                atoms.push(Atom::LenLt(pos(i), pos(j)));
            }
        }
        if lang == IndexLanguage::S {
            atoms.push(Atom::Level(pos(i), c[i].level() as u32));
        }
    }
    atoms.sort_unstable();
    SimilarityCode { lang, arity: t.len(), closure_size: n, atoms }
}

pub fn cell_code(t: &[ArrayCell]) -> SimilarityCode {
    ar_code(t.len(), |i, j| {
        let (a, b) = (t[i], t[j]);
        (a == b, a.row < b.row, a.row == b.row && a.col < b.col)
    })
}

fn ar_code(n: usize, rel: impl Fn(usize, usize) -> (bool, bool, bool)) -> SimilarityCode {
    let mut atoms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (eq, len_lt, lt2) = rel(i, j);
            if eq && i < j {
                atoms.push(Atom::Eq(pos(i), pos(j)));
            }
            if len_lt {
                atoms.push(Atom::LenLt(pos(i), pos(j)));
            }
            if lt2 {
                atoms.push(Atom::Lt2(pos(i), pos(j)));
            }
        }
    }
    atoms.sort_unstable();
    SimilarityCode { lang: IndexLanguage::Ar, arity: n, closure_size: n, atoms }
}

/// Code of a tuple of index points, which must all be of one kind.
pub fn similarity_code(t: &[IndexPoint], lang: IndexLanguage) -> Result<SimilarityCode> {
    if let Some(nodes) = t.iter().map(|p| p.as_node().cloned()).collect::<Option<Vec<_>>>() {
        return Ok(node_code(&nodes, lang));
    }
    if let Some(cells) = t.iter().map(|p| p.as_cell()).collect::<Option<Vec<_>>>() {
        if lang != IndexLanguage::Ar {
            return Err(Error::MixedDomains(format!(
                "array cells carry only the ar language, got {lang}"
            )));
        }
        return Ok(cell_code(&cells));
    }
    Err(Error::MixedDomains("tuple mixes tree nodes and array cells".into()))
}

pub fn similar(t1: &[TreeNode], t2: &[TreeNode], lang: IndexLanguage) -> bool {
    t1.len() == t2.len() && node_code(t1, lang) == node_code(t2, lang)
}

pub fn similar_points(t1: &[IndexPoint], t2: &[IndexPoint], lang: IndexLanguage) -> Result<bool> {
    if t1.len() != t2.len() {
        return Ok(false);
    }
    Ok(similarity_code(t1, lang)? == similarity_code(t2, lang)?)
}

/// For `t1 ~_s t2`, whether `t1↾n ~_s t2↾n`. Always true; kept as a test hook.
pub fn restriction_preserves_s(t1: &[TreeNode], t2: &[TreeNode], n: usize) -> Result<bool> {
    if !similar(t1, t2, IndexLanguage::S) {
        return Err(Error::Precondition("tuples are not s-similar".into()));
    }
    Ok(similar(
        &restrict_tuple(t1, n),
        &restrict_tuple(t2, n),
        IndexLanguage::S,
    ))
}

/// Whether a finite map preserves and reflects every atomic relation of `lang`.
/// The map is given as its graph; sources and targets may be of different kinds
/// only under `Ar`.
pub fn check_embedding(map: &[(IndexPoint, IndexPoint)], lang: IndexLanguage) -> Result<bool> {
    let src: Vec<IndexPoint> = map.iter().map(|(a, _)| a.clone()).collect();
    let dst: Vec<IndexPoint> = map.iter().map(|(_, b)| b.clone()).collect();
    let (cs, cd) = (similarity_code(&src, lang)?, similarity_code(&dst, lang)?);
    Ok(cs.closure_size == cd.closure_size && cs.atoms == cd.atoms)
}

/// Convenience form of [`check_embedding`] for node-to-node maps.
pub fn check_node_embedding(map: &[(TreeNode, TreeNode)], lang: IndexLanguage) -> bool {
    let src: Vec<TreeNode> = map.iter().map(|(a, _)| a.clone()).collect();
    let dst: Vec<TreeNode> = map.iter().map(|(_, b)| b.clone()).collect();
    node_code(&src, lang) == node_code(&dst, lang)
}
