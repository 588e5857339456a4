//! Seeded fixtures shared by the benchmarks.

use mincap_core::gridworld::cell_name;
use mincap_core::{gen_grid, ConsumptionMdp, CostGraph, GridSpec, StateId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A generated grid with its target and initial states.
pub struct GridFixture {
    pub spec: GridSpec,
    pub model: ConsumptionMdp,
    pub targets: Vec<StateId>,
    pub initials: Vec<StateId>,
}

pub fn grid(size: u32, targets: usize, initials: usize, seed: u64) -> GridFixture {
    let spec = GridSpec::random_instance(size, targets, initials, seed, true).expect("instance fits the grid");
    let model = gen_grid(&spec).expect("valid grid");
    let ids = |cells: &[(u32, u32)]| cells.iter().map(|&c| model.state(&cell_name(c)).unwrap()).collect::<Vec<_>>();
    let (targets, initials) = (ids(&spec.target_cells), ids(&spec.initial_cells));
    GridFixture { spec, model, targets, initials }
}

/// Complete graph on `n` vertices with integer costs in `1..=max_cost`.
pub fn complete_graph(n: usize, max_cost: u32, seed: u64) -> CostGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut g = CostGraph::new(&names).unwrap();
    for u in 0..n {
        for v in 0..n {
            g.set_edge(u, v, rng.random_range(1..=max_cost) as f64);
        }
    }
    g
}

/// Routing-shaped graph: `targets` vertices then `initials`, with no edges
/// between initials.
pub fn routing_graph(targets: usize, initials: usize, max_cost: u32, seed: u64) -> (CostGraph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> =
        (0..targets).map(|i| format!("t{i}")).chain((0..initials).map(|i| format!("i{i}"))).collect();
    let mut g = CostGraph::new(&names).unwrap();
    for u in 0..names.len() {
        for v in 0..names.len() {
            if u < targets || v < targets {
                g.set_edge(u, v, rng.random_range(1..=max_cost) as f64);
            }
        }
    }
    (g, (targets..targets + initials).collect())
}
