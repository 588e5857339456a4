//! Small reference instances used by tests, benches and examples.

use crate::cmdp::{ConsumptionMdp, ModelDescription};
use crate::costgraph::{BipartiteGraph, CostGraph};

/// Five states `s, r, t, u, v`; reloads `r` and `t`.
///
/// From `s`, action `a` goes to `r` for 2 units and `b` costs 5 and lands in
/// `t` or `u` with probability 1/2 each. `u -> v -> s` costs 1 then 2, `r -> s`
/// costs 1 and `t` loops on itself for 1.
pub fn reload_detour_description() -> ModelDescription {
    ModelDescription::new(&["s", "r", "t", "u", "v"], &["a", "b"], &["r", "t"])
        .transition("s", "a", 2, &[("r", 1.0)])
        .transition("s", "b", 5, &[("t", 0.5), ("u", 0.5)])
        .transitions_for("r", &["a", "b"], 1, &[("s", 1.0)])
        .transitions_for("u", &["a", "b"], 1, &[("v", 1.0)])
        .transitions_for("v", &["a", "b"], 2, &[("s", 1.0)])
        .transitions_for("t", &["a", "b"], 1, &[("t", 1.0)])
}

pub fn reload_detour_model() -> ConsumptionMdp {
    reload_detour_description().build().expect("reference model is well-formed")
}

/// Complete graph on `v1..v5` whose optimal decomposition into two SCCs
/// has cost 4. Pairs without a listed cost get cost 5.
pub fn scc_example_graph() -> CostGraph {
    complete(
        &["v1", "v2", "v3", "v4", "v5"],
        &[
            ("v1", "v1", 1.0),
            ("v2", "v2", 1.0),
            ("v3", "v3", 1.0),
            ("v4", "v4", 1.0),
            ("v5", "v5", 1.0),
            ("v4", "v5", 2.0),
            ("v5", "v4", 5.0),
            ("v5", "v2", 1.0),
            ("v2", "v5", 5.0),
            ("v4", "v2", 5.0),
            ("v2", "v4", 5.0),
            ("v1", "v2", 3.0),
            ("v2", "v1", 2.0),
            ("v1", "v4", 4.0),
            ("v4", "v1", 1.0),
            ("v3", "v5", 5.0),
            ("v5", "v3", 4.0),
            ("v3", "v2", 5.0),
            ("v2", "v3", 1.0),
        ],
        5.0,
        &[],
    )
}

/// Agents `i1, i2` and targets `v1..v3`; no edges between agents. Optimal
/// capacity 4 with `i1` serving `{v3}` and `i2` serving `{v1, v2}`.
pub fn matching_example_graph() -> CostGraph {
    matching_graph(5.0)
}

/// [`matching_example_graph`] with `C(v3, v1) = 2`; optimal capacity 3 with
/// `i2` serving all targets and `i1` idle.
pub fn matching_example_graph_cheap_return() -> CostGraph {
    matching_graph(2.0)
}

fn matching_graph(v3_v1: f64) -> CostGraph {
    complete(
        &["i1", "i2", "v1", "v2", "v3"],
        &[
            ("v1", "v1", 1.0),
            ("v2", "v2", 1.0),
            ("v3", "v3", 1.0),
            ("v1", "v2", 2.0),
            ("v2", "v1", 1.0),
            ("v2", "v3", 1.0),
            ("v3", "v2", 5.0),
            ("v1", "v3", 5.0),
            ("v3", "v1", v3_v1),
            ("i1", "v3", 4.0),
            ("v3", "i1", 2.0),
            ("i1", "v1", 5.0),
            ("v1", "i1", 1.0),
            ("i2", "v2", 3.0),
            ("v2", "i2", 4.0),
            ("i2", "v3", 5.0),
            ("v3", "i2", 1.0),
        ],
        5.0,
        &["i1", "i2"],
    )
}

/// Every ordered pair gets an edge, except pairs inside `skip`; unlisted
/// pairs cost `fill`.
fn complete(names: &[&str], listed: &[(&str, &str, f64)], fill: f64, skip: &[&str]) -> CostGraph {
    let mut g = CostGraph::new(names).expect("distinct names");
    for &u in names {
        for &v in names {
            if !(skip.contains(&u) && skip.contains(&v)) {
                g.set_edge_named(u, v, fill).unwrap();
            }
        }
    }
    for &(u, v, c) in listed {
        g.set_edge_named(u, v, c).unwrap();
    }
    g
}

/// Bipartite graph on `u1..u3` and `v1..v3` with a perfect matching that
/// disappears once `(u1, v3)` is removed.
pub fn bipartite_example() -> BipartiteGraph {
    BipartiteGraph::from_names(
        &["u1", "u2", "u3"],
        &["v1", "v2", "v3"],
        &[("u1", "v2"), ("u1", "v3"), ("u2", "v1"), ("u2", "v3"), ("u3", "v2")],
    )
    .expect("reference bipartite graph")
}
