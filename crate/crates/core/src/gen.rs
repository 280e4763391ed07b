//! Seeded generators for random structures, Δ-sets and parameter maps, used by
//! tests, benches and the `gen` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fostructure::{DeltaFormula, Element, Formula, RelStructure, Signature, VarDecl};
use crate::indisc::{IndexShape, ParameterMap};

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One sort `D` with elements `e0..`, and relations `R0..` of the given
    /// arities, each tuple present with probability `density`.
    pub fn structure(&mut self, elements: usize, arities: &[usize], density: f64) -> Result<RelStructure> {
        let rels: Vec<(String, Vec<&str>)> =
            arities.iter().enumerate().map(|(i, &k)| (format!("R{i}"), vec!["D"; k])).collect();
        let decl: Vec<(&str, &[&str])> = rels.iter().map(|(n, s)| (n.as_str(), s.as_slice())).collect();
        let sig = Signature::new(&["D"], &decl);
        let names = (0..elements).map(|i| format!("e{i}")).collect();
        let mut m = RelStructure::new(sig, vec![names])?;
        for (name, sorts) in &rels {
            let k = sorts.len();
            let total = elements.pow(k as u32);
            for code in 0..total {
                if self.rng.gen_bool(density) {
                    let mut t = Vec::with_capacity(k);
                    let mut c = code;
                    for _ in 0..k {
                        t.push((c % elements) as Element);
                        c /= elements;
                    }
                    t.reverse();
                    m.insert(name, &t)?;
                }
            }
        }
        Ok(m)
    }

    /// A random quantifier-free formula over `vars`, of the given depth.
    pub fn qf_formula(&mut self, m: &RelStructure, vars: &[&str], depth: usize) -> Formula {
        let rels = &m.signature().relations;
        if depth == 0 || self.rng.gen_bool(0.3) {
            if rels.is_empty() || self.rng.gen_bool(0.15) {
                let a = vars.choose(&mut self.rng).unwrap();
                let b = vars.choose(&mut self.rng).unwrap();
                return Formula::eq(a, b);
            }
            let r = rels.choose(&mut self.rng).unwrap();
            let args: Vec<&str> = (0..r.sorts.len()).map(|_| *vars.choose(&mut self.rng).unwrap()).collect();
            return Formula::rel(&r.name, &args);
        }
        match self.rng.gen_range(0..3) {
            0 => Formula::not(self.qf_formula(m, vars, depth - 1)),
            1 => Formula::and(vec![self.qf_formula(m, vars, depth - 1), self.qf_formula(m, vars, depth - 1)]),
            _ => Formula::or(vec![self.qf_formula(m, vars, depth - 1), self.qf_formula(m, vars, depth - 1)]),
        }
    }

    /// `size` formulas in the variables `x, y` of sort `D`.
    pub fn delta(&mut self, m: &RelStructure, size: usize) -> Vec<DeltaFormula> {
        (0..size)
            .map(|_| DeltaFormula {
                vars: vec![VarDecl::new("x", "D"), VarDecl::new("y", "D")],
                formula: self.qf_formula(m, &["x", "y"], 2),
            })
            .collect()
    }

    /// Uniformly random tuples of sort `D` elements.
    pub fn parameter_map(&mut self, m: &RelStructure, shape: IndexShape, tuple_len: usize) -> Result<ParameterMap> {
        let n = m.len() as Element;
        let points = shape.points();
        let tuples: Vec<Vec<Element>> =
            points.iter().map(|_| (0..tuple_len).map(|_| self.rng.gen_range(0..n)).collect()).collect();
        ParameterMap::from_pairs(m, shape, points.into_iter().zip(tuples).collect())
    }
}
