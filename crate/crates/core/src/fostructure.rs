//! Finite multi-sorted relational structures, first-order formulas over them,
//! Δ-types and consistency (simultaneous satisfiability inside the structure).

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Elements are global ids; the elements of one sort form a contiguous range.
pub type Element = u32;

pub const DEFAULT_UNIVERSE_CAP: usize = 512;

/// Dense relation tables are used up to this many cells.
const DENSE_TABLE_CAP: usize = 1 << 26;

/// Refuse to enumerate more object assignments than this in one search.
pub const ASSIGNMENT_CAP: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDecl {
    pub name: String,
    pub sorts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signature {
    pub sorts: Vec<String>,
    pub relations: Vec<RelationDecl>,
}

impl Signature {
    pub fn new(sorts: &[&str], relations: &[(&str, &[&str])]) -> Self {
        Signature {
            sorts: sorts.iter().map(|s| s.to_string()).collect(),
            relations: relations
                .iter()
                .map(|(n, ss)| RelationDecl {
                    name: n.to_string(),
                    sorts: ss.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        }
    }

    pub fn sort_index(&self, sort: &str) -> Option<usize> {
        self.sorts.iter().position(|s| s == sort)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.sorts {
            if !seen.insert(s.as_str()) {
                return Err(invalid(format!("duplicate sort {s:?}")));
            }
        }
        let mut seen = HashSet::new();
        for r in &self.relations {
            if !seen.insert(r.name.as_str()) {
                return Err(invalid(format!("duplicate relation {:?}", r.name)));
            }
            for s in &r.sorts {
                if self.sort_index(s).is_none() {
                    return Err(invalid(format!("relation {:?} uses unknown sort {s:?}", r.name)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Table {
    Dense { radix: Vec<(u32, u32)>, bits: Vec<u64> },
    Sparse(HashSet<Vec<Element>>),
}

impl Table {
    fn contains(&self, t: &[Element]) -> bool {
        match self {
            Table::Dense { radix, bits } => {
                let mut idx = 0usize;
                for (&e, &(base, size)) in t.iter().zip(radix) {
                    idx = idx * size as usize + (e - base) as usize;
                }
                bits[idx >> 6] >> (idx & 63) & 1 == 1
            }
            Table::Sparse(set) => set.contains(t),
        }
    }

    fn insert(&mut self, t: &[Element]) {
        match self {
            Table::Dense { radix, bits } => {
                let mut idx = 0usize;
                for (&e, &(base, size)) in t.iter().zip(radix.iter()) {
                    idx = idx * size as usize + (e - base) as usize;
                }
                bits[idx >> 6] |= 1 << (idx & 63);
            }
            Table::Sparse(set) => {
                set.insert(t.to_vec());
            }
        }
    }
}

/// A finite structure. Universes are fixed at construction; relation tuples can
/// be added until the structure is shared.
#[derive(Clone, Debug)]
pub struct RelStructure {
    signature: Signature,
    names: Vec<String>,
    sort_of: Vec<u32>,
    offsets: Vec<u32>,
    by_name: HashMap<String, Element>,
    rel_sorts: Vec<Vec<usize>>,
    tables: Vec<Table>,
    tuples: Vec<Vec<Vec<Element>>>,
}

impl RelStructure {
    /// Universes are given per sort in signature order.
    pub fn new(signature: Signature, universes: Vec<Vec<String>>) -> Result<Self> {
        Self::with_cap(signature, universes, DEFAULT_UNIVERSE_CAP)
    }

    pub fn with_cap(signature: Signature, universes: Vec<Vec<String>>, cap: usize) -> Result<Self> {
        signature.validate()?;
        if universes.len() != signature.sorts.len() {
            return Err(invalid("one universe per sort is required"));
        }
        let total: usize = universes.iter().map(Vec::len).sum();
        if total > cap {
            return Err(Error::CapExceeded {
                what: "universe".into(),
                size: total as u128,
                cap: cap as u128,
            });
        }
        let mut names = Vec::with_capacity(total);
        let mut sort_of = Vec::with_capacity(total);
        let mut offsets = vec![0u32];
        let mut by_name = HashMap::new();
        for (s, u) in universes.into_iter().enumerate() {
            if u.is_empty() {
                return Err(invalid(format!("universe of sort {:?} is empty", signature.sorts[s])));
            }
            for name in u {
                let id = names.len() as Element;
                if by_name.insert(name.clone(), id).is_some() {
                    return Err(invalid(format!("duplicate element name {name:?}")));
                }
                names.push(name);
                sort_of.push(s as u32);
            }
            offsets.push(names.len() as u32);
        }
        let rel_sorts: Vec<Vec<usize>> = signature
            .relations
            .iter()
            .map(|r| r.sorts.iter().map(|s| signature.sort_index(s).unwrap()).collect())
            .collect();
        let tables = rel_sorts
            .iter()
            .map(|ss| {
                let radix: Vec<(u32, u32)> = ss
                    .iter()
                    .map(|&s| (offsets[s], offsets[s + 1] - offsets[s]))
                    .collect();
                let cells = radix
                    .iter()
                    .try_fold(1usize, |acc, &(_, n)| acc.checked_mul(n as usize));
                match cells {
                    Some(c) if c <= DENSE_TABLE_CAP => Table::Dense {
                        radix,
                        bits: vec![0; c.div_ceil(64).max(1)],
                    },
                    _ => Table::Sparse(HashSet::new()),
                }
            })
            .collect();
        let tuples = vec![Vec::new(); signature.relations.len()];
        Ok(RelStructure { signature, names, sort_of, offsets, by_name, rel_sorts, tables, tuples })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn element(&self, name: &str) -> Option<Element> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, e: Element) -> &str {
        &self.names[e as usize]
    }

    pub fn sort_of(&self, e: Element) -> usize {
        self.sort_of[e as usize] as usize
    }

    pub fn universe(&self, sort: usize) -> std::ops::Range<Element> {
        self.offsets[sort]..self.offsets[sort + 1]
    }

    pub fn universe_of(&self, sort: &str) -> Result<std::ops::Range<Element>> {
        let s = self
            .signature
            .sort_index(sort)
            .ok_or_else(|| invalid(format!("unknown sort {sort:?}")))?;
        Ok(self.universe(s))
    }

    pub fn elements_of(&self, sort: &str) -> Result<Vec<Element>> {
        Ok(self.universe_of(sort)?.collect())
    }

    pub fn insert(&mut self, rel: &str, tuple: &[Element]) -> Result<()> {
        let r = self
            .signature
            .relation_index(rel)
            .ok_or_else(|| invalid(format!("unknown relation {rel:?}")))?;
        let sorts = &self.rel_sorts[r];
        if tuple.len() != sorts.len() {
            return Err(invalid(format!("relation {rel:?} has arity {}", sorts.len())));
        }
        for (&e, &s) in tuple.iter().zip(sorts) {
            if e as usize >= self.names.len() || self.sort_of(e) != s {
                return Err(invalid(format!("tuple for {rel:?} violates its sort profile")));
            }
        }
        if !self.tables[r].contains(tuple) {
            self.tables[r].insert(tuple);
            self.tuples[r].push(tuple.to_vec());
        }
        Ok(())
    }

    pub fn holds(&self, rel: usize, tuple: &[Element]) -> bool {
        self.tables[rel].contains(tuple)
    }

    pub fn holds_named(&self, rel: &str, tuple: &[Element]) -> bool {
        match self.signature.relation_index(rel) {
            Some(r) => tuple.len() == self.rel_sorts[r].len() && self.holds(r, tuple),
            None => false,
        }
    }

    pub fn relation_tuples(&self, rel: &str) -> Option<&[Vec<Element>]> {
        self.signature.relation_index(rel).map(|r| self.tuples[r].as_slice())
    }

    fn to_json(&self) -> StructureJson {
        let universes = self
            .signature
            .sorts
            .iter()
            .enumerate()
            .map(|(s, name)| {
                let els = self.universe(s).map(|e| self.names[e as usize].clone()).collect();
                (name.clone(), els)
            })
            .collect();
        let relations = self
            .signature
            .relations
            .iter()
            .enumerate()
            .map(|(r, decl)| {
                let mut ts: Vec<Vec<String>> = self.tuples[r]
                    .iter()
                    .map(|t| t.iter().map(|&e| self.names[e as usize].clone()).collect())
                    .collect();
                ts.sort();
                (decl.name.clone(), ts)
            })
            .collect();
        StructureJson { signature: self.signature.clone(), universes, relations }
    }

    fn from_json(j: StructureJson) -> Result<Self> {
        let mut universes = Vec::new();
        for s in &j.signature.sorts {
            universes.push(
                j.universes
                    .get(s)
                    .cloned()
                    .ok_or_else(|| invalid(format!("no universe for sort {s:?}")))?,
            );
        }
        if j.universes.len() != j.signature.sorts.len() {
            return Err(invalid("universes name an undeclared sort"));
        }
        let mut m = RelStructure::new(j.signature, universes)?;
        for (rel, ts) in &j.relations {
            for t in ts {
                let ids = t
                    .iter()
                    .map(|n| m.element(n).ok_or_else(|| invalid(format!("unknown element {n:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                m.insert(rel, &ids)?;
            }
        }
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureJson {
    signature: Signature,
    universes: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Vec<String>>>,
}

impl Serialize for RelStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RelStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = StructureJson::deserialize(d)?;
        RelStructure::from_json(j).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Formula {
    True,
    False,
    Rel { name: String, args: Vec<String> },
    Eq { left: String, right: String },
    Not { arg: Box<Formula> },
    And { args: Vec<Formula> },
    Or { args: Vec<Formula> },
    Implies { left: Box<Formula>, right: Box<Formula> },
    Exists { var: String, sort: String, body: Box<Formula> },
    Forall { var: String, sort: String, body: Box<Formula> },
}

impl Formula {
    pub fn rel(name: &str, args: &[&str]) -> Self {
        Formula::Rel { name: name.into(), args: args.iter().map(|a| a.to_string()).collect() }
    }

    pub fn eq(left: &str, right: &str) -> Self {
        Formula::Eq { left: left.into(), right: right.into() }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(arg: Formula) -> Self {
        Formula::Not { arg: Box::new(arg) }
    }

    pub fn and(args: Vec<Formula>) -> Self {
        Formula::And { args }
    }

    pub fn or(args: Vec<Formula>) -> Self {
        Formula::Or { args }
    }

    pub fn implies(left: Formula, right: Formula) -> Self {
        Formula::Implies { left: Box::new(left), right: Box::new(right) }
    }

    pub fn exists(var: &str, sort: &str, body: Formula) -> Self {
        Formula::Exists { var: var.into(), sort: sort.into(), body: Box::new(body) }
    }

    pub fn forall(var: &str, sort: &str, body: Formula) -> Self {
        Formula::Forall { var: var.into(), sort: sort.into(), body: Box::new(body) }
    }

    /// Renames free occurrences of variables.
    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> Formula {
        self.rename_inner(f, &mut Vec::new())
    }

    fn rename_inner(&self, f: &impl Fn(&str) -> Option<String>, bound: &mut Vec<String>) -> Formula {
        let r = |v: &String, bound: &Vec<String>| {
            if bound.contains(v) {
                v.clone()
            } else {
                f(v).unwrap_or_else(|| v.clone())
            }
        };
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Rel { name, args } => Formula::Rel {
                name: name.clone(),
                args: args.iter().map(|a| r(a, bound)).collect(),
            },
            Formula::Eq { left, right } => Formula::Eq { left: r(left, bound), right: r(right, bound) },
            Formula::Not { arg } => Formula::not(arg.rename_inner(f, bound)),
            Formula::And { args } => Formula::and(args.iter().map(|a| a.rename_inner(f, bound)).collect()),
            Formula::Or { args } => Formula::or(args.iter().map(|a| a.rename_inner(f, bound)).collect()),
            Formula::Implies { left, right } => {
                Formula::implies(left.rename_inner(f, bound), right.rename_inner(f, bound))
            }
            Formula::Exists { var, sort, body } | Formula::Forall { var, sort, body } => {
                bound.push(var.clone());
                let b = body.rename_inner(f, bound);
                bound.pop();
                if matches!(self, Formula::Exists { .. }) {
                    Formula::exists(var, sort, b)
                } else {
                    Formula::forall(var, sort, b)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarDecl {
    pub name: String,
    pub sort: String,
}

impl VarDecl {
    pub fn new(name: &str, sort: &str) -> Self {
        VarDecl { name: name.into(), sort: sort.into() }
    }
}

/// `φ(x̄; ȳ)`: object variables `x̄` and parameter variables `ȳ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFormula {
    pub object_vars: Vec<VarDecl>,
    pub param_vars: Vec<VarDecl>,
    pub formula: Formula,
}

/// A member of a finite set Δ, with its free variables in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaFormula {
    pub vars: Vec<VarDecl>,
    pub formula: Formula,
}

#[derive(Clone, Debug)]
enum Node {
    True,
    False,
    Rel(usize, Vec<usize>),
    Eq(usize, usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Exists(usize, usize, Box<Node>),
    Forall(usize, usize, Box<Node>),
}

/// A formula resolved against a structure: variables become slots, free
/// variables first in declaration order.
#[derive(Clone, Debug)]
pub struct Compiled {
    root: Node,
    slots: usize,
    free_sorts: Vec<usize>,
}

impl Compiled {
    pub fn new(m: &RelStructure, formula: &Formula, free: &[VarDecl]) -> Result<Self> {
        let sig = m.signature();
        let mut scope: Vec<(String, usize, usize)> = Vec::new();
        let mut free_sorts = Vec::new();
        for (i, v) in free.iter().enumerate() {
            let s = sig
                .sort_index(&v.sort)
                .ok_or_else(|| Error::IllFormed(format!("unknown sort {:?}", v.sort)))?;
            if scope.iter().any(|(n, _, _)| *n == v.name) {
                return Err(Error::IllFormed(format!("variable {:?} declared twice", v.name)));
            }
            scope.push((v.name.clone(), i, s));
            free_sorts.push(s);
        }
        let mut slots = free.len();
        let root = compile_node(sig, formula, &mut scope, &mut slots)?;
        Ok(Compiled { root, slots, free_sorts })
    }

    pub fn free_sorts(&self) -> &[usize] {
        &self.free_sorts
    }

    /// `values` must hold one element per free variable, well-sorted.
    pub fn eval(&self, m: &RelStructure, values: &[Element]) -> bool {
        let mut slots = vec![0; self.slots];
        slots[..values.len()].copy_from_slice(values);
        eval_node(m, &self.root, &mut slots)
    }

    fn eval_in(&self, m: &RelStructure, slots: &mut [Element]) -> bool {
        eval_node(m, &self.root, slots)
    }

    fn slot_count(&self) -> usize {
        self.slots
    }
}

fn lookup(scope: &[(String, usize, usize)], name: &str) -> Result<(usize, usize)> {
    scope
        .iter()
        .rev()
        .find(|(n, _, _)| n == name)
        .map(|&(_, slot, sort)| (slot, sort))
        .ok_or_else(|| Error::IllFormed(format!("unbound variable {name:?}")))
}

fn compile_node(
    sig: &Signature,
    f: &Formula,
    scope: &mut Vec<(String, usize, usize)>,
    slots: &mut usize,
) -> Result<Node> {
    Ok(match f {
        Formula::True => Node::True,
        Formula::False => Node::False,
        Formula::Rel { name, args } => {
            let r = sig
                .relation_index(name)
                .ok_or_else(|| Error::IllFormed(format!("unknown relation {name:?}")))?;
            let decl = &sig.relations[r];
            if decl.sorts.len() != args.len() {
                return Err(Error::IllFormed(format!(
                    "relation {name:?} takes {} arguments",
                    decl.sorts.len()
                )));
            }
            let mut idx = Vec::with_capacity(args.len());
            for (a, s) in args.iter().zip(&decl.sorts) {
                let (slot, sort) = lookup(scope, a)?;
                if sig.sorts[sort] != *s {
                    return Err(Error::IllFormed(format!(
                        "argument {a:?} of {name:?} has sort {} not {s}",
                        sig.sorts[sort]
                    )));
                }
                idx.push(slot);
            }
            Node::Rel(r, idx)
        }
        Formula::Eq { left, right } => {
            let (l, ls) = lookup(scope, left)?;
            let (r, rs) = lookup(scope, right)?;
            if ls != rs {
                return Err(Error::IllFormed(format!("{left:?} = {right:?} compares different sorts")));
            }
            Node::Eq(l, r)
        }
        Formula::Not { arg } => Node::Not(Box::new(compile_node(sig, arg, scope, slots)?)),
        Formula::And { args } => Node::And(
            args.iter().map(|a| compile_node(sig, a, scope, slots)).collect::<Result<_>>()?,
        ),
        Formula::Or { args } => Node::Or(
            args.iter().map(|a| compile_node(sig, a, scope, slots)).collect::<Result<_>>()?,
        ),
        Formula::Implies { left, right } => Node::Implies(
            Box::new(compile_node(sig, left, scope, slots)?),
            Box::new(compile_node(sig, right, scope, slots)?),
        ),
        Formula::Exists { var, sort, body } | Formula::Forall { var, sort, body } => {
            let s = sig
                .sort_index(sort)
                .ok_or_else(|| Error::IllFormed(format!("unknown sort {sort:?}")))?;
            let slot = *slots;
            *slots += 1;
            scope.push((var.clone(), slot, s));
            let b = compile_node(sig, body, scope, slots);
            scope.pop();
            let b = Box::new(b?);
            if matches!(f, Formula::Exists { .. }) {
                Node::Exists(slot, s, b)
            } else {
                Node::Forall(slot, s, b)
            }
        }
    })
}

fn eval_node(m: &RelStructure, n: &Node, slots: &mut [Element]) -> bool {
    match n {
        Node::True => true,
        Node::False => false,
        Node::Rel(r, idx) => {
            let mut buf = [0u32; 8];
            if idx.len() <= 8 {
                for (b, &i) in buf.iter_mut().zip(idx) {
                    *b = slots[i];
                }
                m.holds(*r, &buf[..idx.len()])
            } else {
                let t: Vec<Element> = idx.iter().map(|&i| slots[i]).collect();
                m.holds(*r, &t)
            }
        }
        Node::Eq(a, b) => slots[*a] == slots[*b],
        Node::Not(a) => !eval_node(m, a, slots),
        Node::And(args) => args.iter().all(|a| eval_node(m, a, slots)),
        Node::Or(args) => args.iter().any(|a| eval_node(m, a, slots)),
        Node::Implies(a, b) => !eval_node(m, a, slots) || eval_node(m, b, slots),
        Node::Exists(slot, s, body) => {
            for e in m.universe(*s) {
                slots[*slot] = e;
                if eval_node(m, body, slots) {
                    return true;
                }
            }
            false
        }
        Node::Forall(slot, s, body) => {
            for e in m.universe(*s) {
                slots[*slot] = e;
                if !eval_node(m, body, slots) {
                    return false;
                }
            }
            true
        }
    }
}

/// Truth of `φ` under an assignment of its free variables; sorts are read off
/// the assigned elements.
pub fn eval(m: &RelStructure, phi: &Formula, asg: &BTreeMap<String, Element>) -> Result<bool> {
    let mut free = Vec::new();
    let mut values = Vec::new();
    for (name, &e) in asg {
        if e as usize >= m.len() {
            return Err(invalid(format!("element id {e} out of range")));
        }
        free.push(VarDecl::new(name, &m.signature().sorts[m.sort_of(e)]));
        values.push(e);
    }
    let c = Compiled::new(m, phi, &free)?;
    Ok(c.eval(m, &values))
}

/// Truth vector over (formula, arrangement), where an arrangement sends the
/// formula's variables to positions of the tuple with matching sorts.
/// Arrangements are enumerated lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeltaType {
    pub bits: Vec<bool>,
}

/// Compiled Δ, reusable across many tuples.
#[derive(Clone, Debug)]
pub struct DeltaEvaluator {
    formulas: Vec<Compiled>,
}

impl DeltaEvaluator {
    pub fn new(m: &RelStructure, delta: &[DeltaFormula]) -> Result<Self> {
        let formulas = delta
            .iter()
            .map(|d| Compiled::new(m, &d.formula, &d.vars))
            .collect::<Result<_>>()?;
        Ok(DeltaEvaluator { formulas })
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn type_of(&self, m: &RelStructure, t: &[Element]) -> DeltaType {
        let mut bits = Vec::new();
        for f in &self.formulas {
            let k = f.free_sorts.len();
            let mut slots = vec![0; f.slot_count()];
            let candidates: Vec<Vec<usize>> = f
                .free_sorts
                .iter()
                .map(|&s| (0..t.len()).filter(|&p| m.sort_of(t[p]) == s).collect())
                .collect();
            if candidates.iter().any(Vec::is_empty) {
                continue;
            }
            let mut choice = vec![0usize; k];
            'arrangements: loop {
                for v in 0..k {
                    slots[v] = t[candidates[v][choice[v]]];
                }
                bits.push(f.eval_in(m, &mut slots));
                for v in (0..k).rev() {
                    choice[v] += 1;
                    if choice[v] < candidates[v].len() {
                        continue 'arrangements;
                    }
                    choice[v] = 0;
                }
                break;
            }
        }
        DeltaType { bits }
    }
}

pub fn delta_type(m: &RelStructure, t: &[Element], delta: &[DeltaFormula]) -> Result<DeltaType> {
    if let Some(&e) = t.iter().find(|&&e| e as usize >= m.len()) {
        return Err(invalid(format!("element id {e} out of range")));
    }
    Ok(DeltaEvaluator::new(m, delta)?.type_of(m, t))
}

/// Compiled `φ(x̄; ȳ)` for repeated instance checks.
#[derive(Clone, Debug)]
pub struct Instance {
    compiled: Compiled,
    objects: usize,
    params: Vec<usize>,
}

impl Instance {
    pub fn new(m: &RelStructure, phi: &SplitFormula) -> Result<Self> {
        let mut free = phi.object_vars.clone();
        free.extend(phi.param_vars.iter().cloned());
        let compiled = Compiled::new(m, &phi.formula, &free)?;
        let objects = phi.object_vars.len();
        let params = compiled.free_sorts[objects..].to_vec();
        Ok(Instance { compiled, objects, params })
    }

    pub fn check_params(&self, m: &RelStructure, p: &[Element]) -> Result<()> {
        if p.len() != self.params.len() {
            return Err(invalid(format!(
                "parameter tuple of length {} for {} parameter variables",
                p.len(),
                self.params.len()
            )));
        }
        for (&e, &s) in p.iter().zip(&self.params) {
            if e as usize >= m.len() || m.sort_of(e) != s {
                return Err(invalid("parameter tuple is ill-sorted"));
            }
        }
        Ok(())
    }

    /// Size of the space of object assignments.
    pub fn object_space(&self, m: &RelStructure) -> u128 {
        self.compiled.free_sorts[..self.objects]
            .iter()
            .map(|&s| m.universe(s).len() as u128)
            .product()
    }

    /// Calls `f` on each object assignment with the slots prepared; stops when
    /// `f` returns true and reports whether it did.
    fn any_assignment(
        &self,
        m: &RelStructure,
        mut f: impl FnMut(&mut [Element]) -> bool,
    ) -> bool {
        let sorts = &self.compiled.free_sorts[..self.objects];
        let mut slots = vec![0; self.compiled.slot_count()];
        let ranges: Vec<_> = sorts.iter().map(|&s| m.universe(s)).collect();
        for (i, r) in ranges.iter().enumerate() {
            slots[i] = r.start;
        }
        loop {
            if f(&mut slots) {
                return true;
            }
            let mut i = self.objects;
            loop {
                if i == 0 {
                    return false;
                }
                i -= 1;
                slots[i] += 1;
                if slots[i] < ranges[i].end {
                    break;
                }
                slots[i] = ranges[i].start;
            }
        }
    }

    fn holds_at(&self, m: &RelStructure, slots: &mut [Element], p: &[Element]) -> bool {
        slots[self.objects..self.objects + p.len()].copy_from_slice(p);
        self.compiled.eval_in(m, slots)
    }
}

/// Whether some object assignment satisfies every instance `φ(x̄; p)`.
/// Exhaustive over the finite universes.
pub fn consistent(m: &RelStructure, phi: &SplitFormula, params: &[Vec<Element>]) -> Result<bool> {
    let inst = Instance::new(m, phi)?;
    for p in params {
        inst.check_params(m, p)?;
    }
    let space = inst.object_space(m);
    if space > ASSIGNMENT_CAP {
        return Err(Error::CapExceeded { what: "object assignments".into(), size: space, cap: ASSIGNMENT_CAP });
    }
    Ok(inst.any_assignment(m, |slots| params.iter().all(|p| inst.holds_at(m, slots, p))))
}

/// Satisfying sets of many instances as bitsets over the object space, so that
/// consistency of a family is a bitwise intersection.
#[derive(Clone, Debug)]
pub struct SatCache {
    words: usize,
    sets: Vec<Vec<u64>>,
}

impl SatCache {
    pub fn new(m: &RelStructure, phi: &SplitFormula, params: &[Vec<Element>]) -> Result<Self> {
        let inst = Instance::new(m, phi)?;
        for p in params {
            inst.check_params(m, p)?;
        }
        let space = inst.object_space(m);
        if space > ASSIGNMENT_CAP {
            return Err(Error::CapExceeded { what: "object assignments".into(), size: space, cap: ASSIGNMENT_CAP });
        }
        let words = (space as usize).div_ceil(64).max(1);
        let mut sets = vec![vec![0u64; words]; params.len()];
        let mut idx = 0usize;
        inst.any_assignment(m, |slots| {
            for (set, p) in sets.iter_mut().zip(params) {
                if inst.holds_at(m, slots, p) {
                    set[idx >> 6] |= 1 << (idx & 63);
                }
            }
            idx += 1;
            false
        });
        Ok(SatCache { words, sets })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Consistency of the instances with the given indices.
    pub fn consistent(&self, family: &[usize]) -> bool {
        if family.is_empty() {
            return true;
        }
        (0..self.words).any(|w| family.iter().fold(!0u64, |acc, &i| acc & self.sets[i][w]) != 0)
    }

    /// Running intersection, for incremental family checks.
    pub fn set(&self, i: usize) -> &[u64] {
        &self.sets[i]
    }

    pub fn full(&self) -> Vec<u64> {
        vec![!0u64; self.words]
    }
}

pub fn intersect_into(acc: &mut [u64], other: &[u64]) -> bool {
    let mut any = false;
    for (a, b) in acc.iter_mut().zip(other) {
        *a &= b;
        any |= *a != 0;
    }
    any
}
