//! Seeded inputs shared by the benchmarks.

use treeindisc::gen::Gen;
use treeindisc::prelude::*;
use treeindisc::ramsey_appendix::Coloring;

pub struct Workload {
    pub m: RelStructure,
    pub delta: Vec<DeltaFormula>,
    pub params: ParameterMap,
}

/// Random 8-element structure with two binary relations and a parameter map
/// on `^{height>}branching`.
pub fn tree_workload(seed: u64, height: usize, branching: u32) -> Workload {
    let mut g = Gen::new(seed);
    let m = g.structure(8, &[2, 2], 0.5).expect("structure");
    let delta = g.delta(&m, 2);
    let d = TreeDomain::open(height, branching).expect("domain");
    let params = g.parameter_map(&m, IndexShape::Tree(d), 1).expect("parameters");
    Workload { m, delta, params }
}

pub fn random_coloring(ground: usize, arity: usize, seed: u64) -> Coloring {
    let mut g = Gen::new(seed);
    Coloring::from_fn(ground, arity, |_| rand::Rng::gen_range(g.rng(), 0..2)).expect("coloring")
}
