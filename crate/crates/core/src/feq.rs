//! Finite function models of independent parameterized equivalence relations,
//! and the tree of parameters that witnesses 2-TP while a stretched copy has
//! every finite non-sibling conjunction consistent.
//!
//! Sort `Q` holds `c0, c1, ..`; sort `P` holds all functions `Q → classes`,
//! named `p` followed by the values in coordinate order. `E(x, y, z)` holds
//! iff `x(z) = y(z)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fostructure::{Element, Formula, RelStructure, Signature, SplitFormula, VarDecl, DEFAULT_UNIVERSE_CAP};
use crate::indisc::{IndexShape, ParameterMap};
use crate::qftype::IndexPoint;
use crate::tree_index::{enumerate_nodes, TreeDomain, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeqConfig {
    pub q: usize,
    pub classes: usize,
}

impl FeqConfig {
    pub fn new(q: usize, classes: usize) -> Result<Self> {
        let cfg = FeqConfig { q, classes };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 || self.classes < 2 {
            return Err(invalid("need q ≥ 1 and at least 2 classes"));
        }
        let size = (self.classes as u128).checked_pow(self.q as u32).unwrap_or(u128::MAX);
        if size + self.q as u128 > DEFAULT_UNIVERSE_CAP as u128 {
            return Err(Error::CapExceeded {
                what: "function model".into(),
                size: size + self.q as u128,
                cap: DEFAULT_UNIVERSE_CAP as u128,
            });
        }
        Ok(())
    }

    pub fn p_size(&self) -> usize {
        self.classes.pow(self.q as u32)
    }
}

/// Function `index` in base `classes`, most significant coordinate first.
fn values(cfg: &FeqConfig, mut index: usize) -> Vec<usize> {
    let mut v = vec![0; cfg.q];
    for slot in v.iter_mut().rev() {
        *slot = index % cfg.classes;
        index /= cfg.classes;
    }
    v
}

fn p_name(v: &[usize]) -> String {
    let sep = if v.iter().any(|&x| x >= 10) { "_" } else { "" };
    let parts: Vec<String> = v.iter().map(usize::to_string).collect();
    format!("p{}", parts.join(sep))
}

pub fn build_feq_model(cfg: &FeqConfig) -> Result<RelStructure> {
    cfg.validate()?;
    let sig = Signature::new(&["P", "Q"], &[("E", &["P", "P", "Q"])]);
    let funcs: Vec<Vec<usize>> = (0..cfg.p_size()).map(|i| values(cfg, i)).collect();
    let ps = funcs.iter().map(|v| p_name(v)).collect();
    let qs = (0..cfg.q).map(|i| format!("c{i}")).collect();
    let mut m = RelStructure::new(sig, vec![ps, qs])?;
    let q0 = m.universe(1).start;
    for (x, vx) in funcs.iter().enumerate() {
        for (y, vy) in funcs.iter().enumerate() {
            for z in 0..cfg.q {
                if vx[z] == vy[z] {
                    m.insert("E", &[x as Element, y as Element, q0 + z as Element])?;
                }
            }
        }
    }
    Ok(m)
}

/// `φ(x; y, z) = E(x, y, z)`.
pub fn feq_formula() -> SplitFormula {
    SplitFormula {
        object_vars: vec![VarDecl::new("x", "P")],
        param_vars: vec![VarDecl::new("y", "P"), VarDecl::new("z", "Q")],
        formula: Formula::rel("E", &["x", "y", "z"]),
    }
}

fn p_element(m: &RelStructure, v: &[usize]) -> Element {
    m.element(&p_name(v)).expect("function in model")
}

/// `a_{ν⌢⟨i⟩} = (d_{ν⌢⟨i⟩}, c_ν)` and `a_⟨⟩ = (d_⟨⟩, c)` on the closed tree of
/// the given depth. Internal nodes take `c0, c1, ..` in level-lex order and the
/// root pair takes the next one; `d_⟨⟩` is the zero function and `d_{ν⌢⟨i⟩}`
/// is zero except at `c_ν`, where it is `i`.
pub fn build_counterexample(
    cfg: &FeqConfig,
    depth: usize,
    branching: u32,
) -> Result<(RelStructure, SplitFormula, ParameterMap)> {
    let m = build_feq_model(cfg)?;
    let d = TreeDomain::closed(depth, branching)?;
    let internal: Vec<TreeNode> = enumerate_nodes(&d).into_iter().filter(|n| d.is_internal(n)).collect();
    if cfg.q < internal.len() + 1 {
        return Err(Error::Precondition(format!(
            "q = {} but {} internal nodes and the root need distinct parameters",
            cfg.q,
            internal.len()
        )));
    }
    if cfg.classes < branching as usize {
        return Err(Error::Precondition(format!("{} classes for branching {branching}", cfg.classes)));
    }
    let q0 = m.universe(1).start;
    let coord = |n: &TreeNode| internal.iter().position(|x| x == n).expect("internal node");
    let p = ParameterMap::new(&m, IndexShape::Tree(d), |pt| {
        let n = pt.as_node().expect("tree point");
        let mut v = vec![0; cfg.q];
        match n.parent() {
            None => vec![p_element(&m, &v), q0 + internal.len() as Element],
            Some(nu) => {
                let c = coord(&nu);
                v[c] = *n.entries().last().unwrap() as usize;
                vec![p_element(&m, &v), q0 + c as Element]
            }
        }
    })?;
    Ok((m, feq_formula(), p))
}

/// `h(⟨⟩) = ⟨⟩`, `h(η⌢⟨i⟩) = h(η)⌢⟨i⟩⌢⟨0⟩`.
pub fn h_map(eta: &TreeNode) -> TreeNode {
    let mut out = Vec::with_capacity(2 * eta.level());
    for &i in eta.entries() {
        out.push(i);
        out.push(0);
    }
    TreeNode::new(out)
}

/// `a'_η := a_{h(η)}` on the closed tree of the given depth and the source's
/// branching.
pub fn subtree_h(m: &RelStructure, source: &ParameterMap, depth: usize) -> Result<ParameterMap> {
    let d = source.shape().tree().copied().ok_or_else(|| invalid("tree parameters required"))?;
    if d.max_level() < 2 * depth {
        return Err(invalid(format!(
            "depth shortfall: source reaches level {}, target depth {depth} needs {}",
            d.max_level(),
            2 * depth
        )));
    }
    let target = TreeDomain::closed(depth, d.branching)?;
    source.pull_back(m, IndexShape::Tree(target), |p| IndexPoint::Node(h_map(p.as_node().expect("tree point"))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fostructure::consistent;
    use crate::tp_props::{check_ktp, check_strong_phi_consistency, WitnessSpec};

    #[test]
    fn single_coordinate() {
        let m = build_feq_model(&FeqConfig::new(1, 2).unwrap()).unwrap();
        assert_eq!(m.elements_of("P").unwrap().len(), 2);
        let c = m.element("c0").unwrap();
        let (a, b) = (m.element("p0").unwrap(), m.element("p1").unwrap());
        assert!(m.holds_named("E", &[a, a, c]));
        assert!(!m.holds_named("E", &[a, b, c]));
    }

    #[test]
    fn class_sizes() {
        let cfg = FeqConfig::new(3, 3).unwrap();
        let m = build_feq_model(&cfg).unwrap();
        for z in m.elements_of("Q").unwrap() {
            for x in m.elements_of("P").unwrap() {
                let size = m.elements_of("P").unwrap().iter().filter(|&&y| m.holds_named("E", &[x, y, z])).count();
                assert_eq!(size, 9);
            }
        }
    }

    #[test]
    fn independence_for_three_parameters() {
        let cfg = FeqConfig::new(3, 2).unwrap();
        let m = build_feq_model(&cfg).unwrap();
        let ps = m.elements_of("P").unwrap();
        let qs = m.elements_of("Q").unwrap();
        for &b0 in &ps {
            for &b1 in &ps {
                for &b2 in &ps {
                    let ok = ps.iter().any(|&a| {
                        m.holds_named("E", &[a, b0, qs[0]])
                            && m.holds_named("E", &[a, b1, qs[1]])
                            && m.holds_named("E", &[a, b2, qs[2]])
                    });
                    assert!(ok);
                }
            }
        }
    }

    #[test]
    fn cap() {
        assert!(matches!(FeqConfig::new(10, 2), Err(Error::CapExceeded { .. })));
        assert!(FeqConfig::new(1, 1).is_err());
    }

    #[test]
    fn h_unrolls() {
        assert_eq!(h_map(&TreeNode::root()), TreeNode::root());
        assert_eq!(h_map(&TreeNode::from([1])), TreeNode::from([1, 0]));
        assert_eq!(h_map(&TreeNode::from([1, 2])), TreeNode::from([1, 0, 2, 0]));
    }

    #[test]
    fn counterexample_has_2tp() {
        let cfg = FeqConfig::new(4, 2).unwrap();
        let (m, phi, p) = build_counterexample(&cfg, 2, 2).unwrap();
        let r = check_ktp(&m, &WitnessSpec { formula: phi.clone(), params: p.clone(), k: 2 }).unwrap();
        assert!(r.verdict, "{r:?}");
        // siblings ⟨0⟩, ⟨1⟩ clash on c0
        let s = check_strong_phi_consistency(&m, &phi, &p, 2).unwrap();
        assert!(!s.verdict);
        let pair: Vec<Vec<Element>> = [[0u32], [1]].iter().map(|n| p.node(&TreeNode::from(*n)).unwrap().to_vec()).collect();
        assert!(!consistent(&m, &phi, &pair).unwrap());
        assert!(matches!(build_counterexample(&FeqConfig::new(3, 2).unwrap(), 2, 2), Err(Error::Precondition(_))));
    }

    // children arrays: rows clash pairwise, selections use distinct coordinates
    #[test]
    fn children_arrays_have_no_bound() {
        use crate::tp_props::{compute_n_bound, default_candidate_arrays, NBound};
        let (m, phi, p) = build_counterexample(&FeqConfig::new(4, 2).unwrap(), 2, 2).unwrap();
        let arrays = default_candidate_arrays(&p).unwrap();
        assert_eq!(compute_n_bound(&m, &phi, 2, &arrays).unwrap(), NBound::NoBound);
    }

    #[test]
    fn stretched_copy() {
        let cfg = FeqConfig::new(4, 2).unwrap();
        let (m, phi, p) = build_counterexample(&cfg, 2, 2).unwrap();
        let q = subtree_h(&m, &p, 1).unwrap();
        assert!(check_strong_phi_consistency(&m, &phi, &q, 4).unwrap().verdict);
        assert!(subtree_h(&m, &p, 2).is_err());
    }
}
