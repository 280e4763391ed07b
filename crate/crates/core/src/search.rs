//! Depth-first search for a map from target index points into a source under
//! which tuples of equal class receive equal values. Every extractor in the
//! crate is an instance: the caller fixes the candidates (which encode the kind
//! of embedding) and the value of a source tuple (a Δ-type id or a color).

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::indisc::for_each_index_tuple;
use crate::qftype::{similarity_code, IndexLanguage, IndexPoint};

/// Target tuples grouped by their last-assigned position.
#[derive(Clone, Debug, Default)]
pub struct Checks {
    per_pos: Vec<Vec<(Vec<usize>, u32)>>,
    classes: usize,
}

impl Checks {
    pub fn new(n: usize) -> Self {
        Checks { per_pos: vec![Vec::new(); n], classes: 0 }
    }

    pub fn push(&mut self, tuple: Vec<usize>, class: u32) {
        let last = *tuple.iter().max().expect("nonempty tuple");
        self.classes = self.classes.max(class as usize + 1);
        self.per_pos[last].push((tuple, class));
    }

    pub fn tuple_count(&self) -> usize {
        self.per_pos.iter().map(Vec::len).sum()
    }

    /// Every tuple up to `max_arity` over the points, classed by similarity code.
    pub fn by_code(points: &[IndexPoint], lang: IndexLanguage, max_arity: usize) -> Result<Self> {
        let mut checks = Checks::new(points.len());
        let mut ids = Interner::default();
        let mut err = None;
        for_each_index_tuple(points.len(), max_arity, |t| {
            let pts: Vec<IndexPoint> = t.iter().map(|&i| points[i].clone()).collect();
            match similarity_code(&pts, lang) {
                Ok(c) => {
                    checks.push(t.to_vec(), ids.id(c));
                    true
                }
                Err(e) => {
                    err = Some(e);
                    false
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(checks),
        }
    }

    /// Tuples over a linear order `0..n`, classed by order pattern.
    pub fn by_order(n: usize, max_arity: usize) -> Self {
        let mut checks = Checks::new(n);
        let mut ids = Interner::default();
        for_each_index_tuple(n, max_arity, |t| {
            checks.push(t.to_vec(), ids.id(order_pattern(t)));
            true
        });
        checks
    }
}

/// Dense ranks of the entries: equal entries share a rank.
pub fn order_pattern(t: &[usize]) -> Vec<u8> {
    let mut sorted = t.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    t.iter().map(|x| sorted.binary_search(x).unwrap() as u8).collect()
}

#[derive(Clone, Debug)]
pub struct Interner<K> {
    map: HashMap<K, u32>,
}

impl<K> Default for Interner<K> {
    fn default() -> Self {
        Interner { map: HashMap::new() }
    }
}

impl<K: Hash + Eq> Interner<K> {
    pub fn id(&mut self, k: K) -> u32 {
        let next = self.map.len() as u32;
        *self.map.entry(k).or_insert(next)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub const DEFAULT_BUDGET: u64 = 50_000_000;

struct Dfs<'a, C, V> {
    checks: &'a Checks,
    candidates: C,
    value: V,
    image: Vec<usize>,
    class_value: Vec<Option<u32>>,
    steps: u64,
    budget: u64,
}

impl<C, V> Dfs<'_, C, V>
where
    C: FnMut(usize, &[usize]) -> Vec<usize>,
    V: FnMut(u32, &[usize]) -> u32,
{
    fn go(&mut self, pos: usize) -> Result<bool> {
        if pos == self.checks.per_pos.len() {
            return Ok(true);
        }
        let cands = (self.candidates)(pos, &self.image);
        let mut buf = Vec::new();
        for c in cands {
            self.steps += 1;
            if self.steps > self.budget {
                return Err(Error::SearchBudgetExceeded(self.budget));
            }
            self.image.push(c);
            let mut set_here: Vec<u32> = Vec::new();
            let mut ok = true;
            for (t, class) in &self.checks.per_pos[pos] {
                buf.clear();
                buf.extend(t.iter().map(|&i| self.image[i]));
                let v = (self.value)(*class, &buf);
                match self.class_value[*class as usize] {
                    Some(w) if w != v => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        self.class_value[*class as usize] = Some(v);
                        set_here.push(*class);
                    }
                }
            }
            if ok && self.go(pos + 1)? {
                return Ok(true);
            }
            for class in set_here {
                self.class_value[class as usize] = None;
            }
            self.image.pop();
        }
        Ok(false)
    }
}

/// First map (in candidate order) under which every class is constant.
/// `candidates(pos, image)` lists the allowed images of `pos` given the images
/// of `0..pos`; `value` sees the class and the source tuple.
pub fn search(
    checks: &Checks,
    candidates: impl FnMut(usize, &[usize]) -> Vec<usize>,
    value: impl FnMut(u32, &[usize]) -> u32,
    budget: u64,
) -> Result<Option<Vec<usize>>> {
    let mut dfs = Dfs {
        checks,
        candidates,
        value,
        image: Vec::with_capacity(checks.per_pos.len()),
        class_value: vec![None; checks.classes],
        steps: 0,
        budget,
    };
    if dfs.go(0)? {
        Ok(Some(dfs.image))
    } else {
        Ok(None)
    }
}

/// Memoizes an expensive value function of source tuples.
pub struct Memo<K, F> {
    cache: HashMap<Vec<usize>, u32>,
    interner: Interner<K>,
    f: F,
}

impl<K: Hash + Eq, F: FnMut(&[usize]) -> K> Memo<K, F> {
    pub fn new(f: F) -> Self {
        Memo { cache: HashMap::new(), interner: Interner::default(), f }
    }

    pub fn get(&mut self, t: &[usize]) -> u32 {
        if let Some(&v) = self.cache.get(t) {
            return v;
        }
        let k = (self.f)(t);
        let v = self.interner.id(k);
        self.cache.insert(t.to_vec(), v);
        v
    }

    pub fn distinct_values(&self) -> usize {
        self.interner.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_monochromatic_triangle() {
        // 2-colour the pairs of 0..6 by parity of i+j; a triple with pairwise
        // even sums exists (all evens)
        let checks = Checks::by_order(3, 2);
        let color = |_: u32, t: &[usize]| -> u32 {
            if t.len() == 2 && t[0] != t[1] {
                ((t[0] + t[1]) % 2) as u32
            } else {
                7
            }
        };
        let found = search(
            &checks,
            |pos, img| {
                let lo = if pos == 0 { 0 } else { img[pos - 1] + 1 };
                (lo..6).collect()
            },
            color,
            1000,
        )
        .unwrap()
        .unwrap();
        assert_eq!(found, vec![0, 2, 4]);
    }

    fn increasing(pos: usize, img: &[usize]) -> Vec<usize> {
        let lo = if pos == 0 { 0 } else { img[pos - 1] + 1 };
        (lo..10).collect()
    }

    #[test]
    fn budget_is_enforced() {
        let checks = Checks::by_order(4, 1);
        // singletons must share a value but every image differs
        let r = search(&checks, increasing, |_, t| t[0] as u32, 5);
        assert!(matches!(r, Err(Error::SearchBudgetExceeded(5))));
    }

    #[test]
    fn patterns() {
        assert_eq!(order_pattern(&[5, 2, 5]), vec![1, 0, 1]);
        assert_eq!(order_pattern(&[0, 1]), order_pattern(&[3, 9]));
    }
}
