mod support;

use mincap_core::cmdp::next_level;
use mincap_core::costgraph::{build_bipartite, scc_decompose};
use mincap_core::gridworld::{cell_name, grid_description};
use mincap_core::planner::{build_routing_graph, build_target_graph, plan_cycle, walk_legs};
use mincap_core::{
    capacity_upper_bound, feasible, gen_grid, min_cap, min_cost_scc_decomposition, min_cost_scc_matching,
    resource_levels, simulate, validate_cmdp, ActionId, CostGraph, GridSpec, Path, ResourceLevel, SearchMode,
    SimulationConfig, StateId,
};
use proptest::prelude::*;
use rand::Rng;
use support::*;

/// A random model and a random action sequence through it.
fn random_path(seed: u64, len: usize) -> (mincap_core::ConsumptionMdp, Path) {
    let mut rng = rng(seed);
    let m = random_model(&mut rng, &ModelShape { max_cons: 4, ..ModelShape::tiny() });
    let mut s = StateId(rng.random_range(0..m.num_states()));
    let (mut states, mut actions) = (vec![s], Vec::new());
    for _ in 0..len {
        let a = ActionId(rng.random_range(0..m.num_actions()));
        let succ = &m.row(s, a).successors;
        s = succ[rng.random_range(0..succ.len())].0;
        actions.push(a);
        states.push(s);
    }
    (m, Path::new(states, actions).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn trace_of_prefix_is_prefix_of_trace(seed in any::<u64>(), len in 0usize..30, cut in 1usize..31, cap in 0u32..12) {
        let (m, path) = random_path(seed, len);
        let full = resource_levels(&m, cap, &path).unwrap();
        let k = cut.min(path.len());
        let part = resource_levels(&m, cap, &path.prefix(k)).unwrap();
        prop_assert_eq!(&full.levels[..k], &part.levels[..]);
    }

    #[test]
    fn more_capacity_never_lowers_a_level(seed in any::<u64>(), len in 0usize..30, cap in 0u32..12, extra in 0u32..6) {
        let (m, path) = random_path(seed, len);
        let lo = resource_levels(&m, cap, &path).unwrap();
        let hi = resource_levels(&m, cap + extra, &path).unwrap();
        for (a, b) in lo.levels.iter().zip(&hi.levels) {
            if let Some(x) = a.value() {
                prop_assert!(b.value().is_some_and(|y| y >= x));
            }
        }
        if lo.is_safe() {
            prop_assert!(hi.is_safe());
        }
    }

    #[test]
    fn depletion_is_absorbing(seed in any::<u64>(), len in 0usize..30, cap in 0u32..6) {
        let (m, path) = random_path(seed, len);
        let t = resource_levels(&m, cap, &path).unwrap();
        if let Some(k) = t.levels.iter().position(|l| *l == ResourceLevel::Depleted) {
            prop_assert!(t.levels[k..].iter().all(|l| *l == ResourceLevel::Depleted));
        }
        let s = StateId(0);
        prop_assert_eq!(next_level(&m, cap, s, ResourceLevel::Depleted, ActionId(0)), ResourceLevel::Depleted);
    }

    #[test]
    fn feasibility_is_monotone_in_capacity(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = random_model(&mut rng, &ModelShape::tiny());
        let ub = capacity_upper_bound(&m);
        for s in m.states() {
            for t in m.states() {
                let row: Vec<bool> = (0..=ub + 2).map(|c| feasible(&m, c, s, t).unwrap()).collect();
                prop_assert!(row.windows(2).all(|w| !w[0] || w[1]));
            }
        }
    }

    #[test]
    fn upper_bound_is_never_too_small(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = random_model(&mut rng, &ModelShape { states: 5, max_cons: 3, ..ModelShape::tiny() });
        let ub = capacity_upper_bound(&m);
        for s in m.states() {
            for t in m.states() {
                prop_assert_eq!(feasible(&m, ub, s, t).unwrap(), feasible(&m, 2 * ub, s, t).unwrap());
            }
        }
    }

    #[test]
    fn min_cap_sits_on_the_feasibility_boundary(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = random_model(&mut rng, &ModelShape { states: 5, ..ModelShape::tiny() });
        for s in m.states() {
            for t in m.states() {
                let r = min_cap(&m, s, t).unwrap();
                match r.value {
                    Some(c) => {
                        prop_assert!(feasible(&m, c, s, t).unwrap());
                        if c > 0 {
                            prop_assert!(!feasible(&m, c - 1, s, t).unwrap());
                        }
                        prop_assert!(witness_is_valid(&m, r.witness.as_ref().unwrap(), c, s.0, t.0));
                    }
                    None => {
                        prop_assert!(r.witness.is_none());
                        prop_assert!(!feasible(&m, capacity_upper_bound(&m), s, t).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn witnesses_never_deplete_in_simulation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = random_model(&mut rng, &ModelShape::tiny());
        let (s, t) = (StateId(rng.random_range(0..m.num_states())), StateId(rng.random_range(0..m.num_states())));
        let r = min_cap(&m, s, t).unwrap();
        if let Some(c) = r.value {
            let cfg = SimulationConfig { runs: 200, horizon: 50, seed };
            let stats = simulate(&m, r.witness.as_ref().unwrap(), s, c, &[t], cfg).unwrap();
            prop_assert_eq!(stats.depletion_count, 0);
            let again = simulate(&m, r.witness.as_ref().unwrap(), s, c, &[t], cfg).unwrap();
            prop_assert_eq!(stats, again);
        }
    }

    #[test]
    fn removing_edges_never_merges_components(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = rng(seed);
        let mut g = random_cost_graph(&mut rng, n, 3, 0.3);
        let mut count = scc_decompose(&g).len();
        while g.num_edges() > 0 {
            let edges: Vec<(usize, usize, f64)> = g.edges().collect();
            let (u, v, _) = edges[rng.random_range(0..edges.len())];
            g.remove_edge(u, v);
            let next = scc_decompose(&g).len();
            prop_assert!(next >= count);
            count = next;
        }
        prop_assert_eq!(count, n);
    }

    #[test]
    fn threshold_subgraphs_are_nested(seed in any::<u64>(), n in 1usize..7, c1 in 0u32..8, c2 in 0u32..8) {
        let mut rng = rng(seed);
        let g = random_cost_graph(&mut rng, n, 7, 0.3);
        if let Some(top) = g.cmax() {
            prop_assert_eq!(g.threshold_subgraph(top), g.clone());
        }
        let (lo, hi) = (c1.min(c2) as f64, c1.max(c2) as f64);
        let (a, b) = (g.threshold_subgraph(lo), g.threshold_subgraph(hi));
        prop_assert!(a.edges().all(|(u, v, c)| b.cost(u, v) == Some(c) && c <= lo));
        prop_assert_eq!(a.num_vertices(), n);
    }

    #[test]
    fn bipartite_graph_ignores_edges_between_initials(seed in any::<u64>(), t in 1usize..5, i in 2usize..4) {
        let mut rng = rng(seed);
        let (g, initials) = random_matching_graph(&mut rng, t, i, 4);
        let h = g.threshold_subgraph(rng.random_range(1..=4) as f64);
        let others: Vec<usize> = (0..t).collect();
        let plain = build_bipartite(&h, &initials, &others).unwrap();
        let mut noisy = h.clone();
        noisy.set_edge(initials[0], initials[1], 1.0);
        prop_assert_eq!(build_bipartite(&noisy, &initials, &others).unwrap(), plain);
    }

    #[test]
    fn decomposition_threshold_is_tight(seed in any::<u64>(), n in 2usize..9, agents in 1usize..4) {
        let mut rng = rng(seed);
        let g = random_cost_graph(&mut rng, n, 6, 0.2);
        let lin = min_cost_scc_decomposition(&g, agents, SearchMode::Linear).unwrap();
        let bin = min_cost_scc_decomposition(&g, agents, SearchMode::Binary).unwrap();
        prop_assert_eq!(lin.capacity, bin.capacity);
        prop_assert_eq!(&lin.components, &bin.components);
        if let Some(c) = bin.threshold {
            prop_assert!(scc_decompose(&g.threshold_subgraph(c)).len() <= agents);
            if let Some(&below) = g.distinct_costs().iter().rfind(|&&x| x < c) {
                prop_assert!(scc_decompose(&g.threshold_subgraph(below)).len() > agents);
            }
            prop_assert!(bin.capacity >= c);
        } else {
            prop_assert!(n <= agents);
        }
    }

    #[test]
    fn matching_threshold_is_tight(seed in any::<u64>(), t in 1usize..7, i in 1usize..4) {
        let mut rng = rng(seed);
        let (g, initials) = random_matching_graph(&mut rng, t, i, 6);
        let lin = min_cost_scc_matching(&g, &initials, SearchMode::Linear).unwrap();
        let bin = min_cost_scc_matching(&g, &initials, SearchMode::Binary).unwrap();
        prop_assert_eq!(lin.capacity, bin.capacity);
        let c = bin.threshold.unwrap();
        prop_assert!(matching_criterion(&g, &initials, c).0);
        if let Some(&below) = g.distinct_costs().iter().rfind(|&&x| x < c) {
            prop_assert!(!matching_criterion(&g, &initials, below).0);
        }
        let m = bin.matching.as_ref().unwrap();
        prop_assert_eq!(m.len(), bin.components.len());
    }

    #[test]
    fn allocation_cycles_respect_the_capacity(seed in any::<u64>(), t in 1usize..5, agents in 1usize..4) {
        let mut rng = rng(seed);
        let (m, targets, _) = random_planning_model(&mut rng, t, 0, 2, 1);
        let g = build_target_graph(&m, &targets).unwrap();
        let Ok(r) = min_cost_scc_decomposition(&g, agents, SearchMode::Binary) else { return Ok(()) };
        for k in 0..r.components.len() {
            let walk = plan_cycle(&r, k).unwrap();
            for (u, v) in walk_legs(&walk) {
                let c = min_cap(&m, targets[u], targets[v]).unwrap().value.unwrap();
                prop_assert!(c as f64 <= r.capacity);
            }
            let mut seen: Vec<usize> = walk.clone();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(&seen[..], r.components.component(k));
        }
    }

    #[test]
    fn agents_can_reach_and_leave_their_cells(seed in any::<u64>(), t in 1usize..5, i in 1usize..4) {
        let mut rng = rng(seed);
        let (m, targets, initials) = random_planning_model(&mut rng, t, i, 1, 1);
        let g = build_routing_graph(&m, &targets, &initials).unwrap();
        let ids: Vec<usize> = (t..t + i).collect();
        let Ok(r) = min_cost_scc_matching(&g, &ids, SearchMode::Binary) else { return Ok(()) };
        let state = |v: usize| if v < t { targets[v] } else { initials[v - t] };
        let matching = r.matching.as_ref().unwrap();
        for k in 0..r.components.len() {
            let agent = ids[matching.partner_of_left(k).unwrap()];
            let cell = r.components.component(k);
            let cap = |a: usize, b: usize| min_cap(&m, state(a), state(b)).unwrap().value.map(|c| c as f64);
            prop_assert!(cell.iter().any(|&q| cap(q, agent).is_some_and(|c| c <= r.capacity)));
            prop_assert!(cell.iter().any(|&q| cap(agent, q).is_some_and(|c| c <= r.capacity)));
        }
    }

    #[test]
    fn grid_generation_is_deterministic(size in 2u32..7, seed in proptest::option::of(any::<u64>()), p in 0.3f64..1.0) {
        let mut spec = GridSpec::new(size);
        spec.current_seed = seed;
        spec.weak_success_prob = p;
        spec.reload_cells = vec![(1, 1), (size, size)];
        spec.target_cells = vec![(size, size)];
        let d = grid_description(&spec).unwrap();
        prop_assert!(validate_cmdp(&d).is_empty());
        prop_assert_eq!(d.to_json(), grid_description(&spec).unwrap().to_json());
        let m = gen_grid(&spec).unwrap();
        prop_assert_eq!(m.num_states(), (size * size) as usize);
        prop_assert!(m.is_reload(m.state(&cell_name((size, size))).unwrap()));
        for s in m.states() {
            for a in m.actions() {
                let row = m.row(s, a);
                let total: f64 = row.successors.iter().map(|x| x.1).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                if m.action_name(a).starts_with("strong") {
                    prop_assert_eq!(row.successors.len(), 1);
                    prop_assert!(row.consumption >= 1);
                }
            }
        }
    }
}

#[test]
fn edge_list_text_keeps_infinite_costs() {
    let g = CostGraph::with_edges(&["a", "b"], &[("a", "b", f64::INFINITY), ("b", "a", 2.0)]).unwrap();
    assert_eq!(CostGraph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
}
