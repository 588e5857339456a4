//! Target allocation (one cell per agent) and routing (cells assigned to
//! agents with start states) by reduction to bottleneck SCC problems.

mod pipeline;
mod search;

use std::collections::BTreeSet;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cmdp::{ConsumptionMdp, StateId};
use crate::costgraph::CostGraph;
use crate::error::{Error, Result};
use crate::synthesis::{min_cap, min_cap_matrix, min_cap_sequence};

pub use pipeline::{
    solve, AgentPlan, CostMode, Leg, LegPolicy, Plan, PlanReport, PlanRequest, Problem, Timings,
};
pub use search::{min_cost_scc_decomposition, min_cost_scc_matching, PlanResult, SearchMode, SearchStats};

/// Partition of the targets into disjoint cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub cells: Vec<Vec<String>>,
}

impl Allocation {
    /// Cells are pairwise disjoint and cover exactly `targets`.
    pub fn is_partition_of<S: AsRef<str>>(&self, targets: &[S]) -> bool {
        let mut seen = BTreeSet::new();
        for c in self.cells.iter().flatten() {
            if !seen.insert(c.as_str()) {
                return false;
            }
        }
        let want: BTreeSet<&str> = targets.iter().map(|t| t.as_ref()).collect();
        seen == want && self.cells.iter().all(|c| !c.is_empty())
    }
}

/// Injective partial map from agents to allocation cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// `(agent, cell index)`, in agent order; `None` leaves the agent idle.
    pub agents: Vec<(String, Option<usize>)>,
}

impl Assignment {
    pub fn cell_of(&self, agent: &str) -> Option<Option<usize>> {
        self.agents.iter().find(|(a, _)| a == agent).map(|&(_, c)| c)
    }

    /// Every one of `cells` cells is served by exactly one agent.
    pub fn covers(&self, cells: usize) -> bool {
        let mut count = vec![0; cells];
        for &(_, c) in &self.agents {
            match c {
                Some(c) if c < cells => count[c] += 1,
                Some(_) => return false,
                None => {}
            }
        }
        count.iter().all(|&k| k == 1)
    }
}

pub fn extract_allocation(result: &PlanResult) -> Allocation {
    Allocation { cells: result.components.named(&result.graph) }
}

pub fn extract_assignment(result: &PlanResult) -> Option<Assignment> {
    let m = result.matching.as_ref()?;
    Some(Assignment {
        agents: result
            .initials
            .iter()
            .enumerate()
            .map(|(ri, &i)| (result.graph.name(i).to_owned(), m.partner_of_right(ri)))
            .collect(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConstraints {
    /// Targets in a group end up in one cell.
    #[serde(default)]
    pub same_agent_groups: Vec<Vec<String>>,
    /// `(t1, t2)`: visit `t2` right after `t1`.
    #[serde(default)]
    pub sequences: Vec<(String, String)>,
}

impl VariantConstraints {
    pub fn is_empty(&self) -> bool {
        self.same_agent_groups.is_empty() && self.sequences.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeOverride {
    pub from: String,
    pub to: String,
    #[serde(with = "inf_as_null")]
    pub old: f64,
    #[serde(with = "inf_as_null")]
    pub new: f64,
    pub reason: String,
}

/// JSON has no infinity; `+∞` costs are written as `null`.
pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn f64_cap(v: Option<u32>) -> f64 {
    v.map_or(f64::INFINITY, f64::from)
}

fn check_reload_targets(model: &ConsumptionMdp, targets: &[StateId]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("no targets given".into()));
    }
    for &t in targets {
        model.check_state(t)?;
        if !model.is_reload(t) {
            return Err(Error::Precondition(format!("target `{}` is not a reload state", model.state_name(t))));
        }
    }
    let distinct: BTreeSet<StateId> = targets.iter().copied().collect();
    if distinct.len() != targets.len() {
        return Err(Error::InvalidInput("targets listed twice".into()));
    }
    Ok(())
}

/// Complete graph on `targets` (self-loops included) with `MinCap` costs;
/// infeasible pairs get cost `+∞`.
pub fn build_target_graph(model: &ConsumptionMdp, targets: &[StateId]) -> Result<CostGraph> {
    check_reload_targets(model, targets)?;
    let m = min_cap_matrix(model, targets, targets)?;
    let names: Vec<&str> = targets.iter().map(|&t| model.state_name(t)).collect();
    let mut g = CostGraph::new(&names)?;
    for i in 0..targets.len() {
        for j in 0..targets.len() {
            g.set_edge(i, j, f64_cap(m.get(i, j)));
        }
    }
    Ok(g)
}

/// Graph on `targets ∪ initials` with every edge except those between two
/// initial states. Vertices are the targets followed by the initials.
pub fn build_routing_graph(model: &ConsumptionMdp, targets: &[StateId], initials: &[StateId]) -> Result<CostGraph> {
    check_reload_targets(model, targets)?;
    if initials.is_empty() {
        return Err(Error::InvalidInput("no initial states given".into()));
    }
    for &i in initials {
        model.check_state(i)?;
        if targets.contains(&i) {
            return Err(Error::Precondition(format!("state `{}` is both a target and an initial state", model.state_name(i))));
        }
    }
    if initials.iter().collect::<BTreeSet<_>>().len() != initials.len() {
        return Err(Error::InvalidInput("initial states listed twice".into()));
    }
    let all: Vec<StateId> = targets.iter().chain(initials).copied().collect();
    let into_targets = min_cap_matrix(model, &all, targets)?;
    let into_initials = min_cap_matrix(model, targets, initials)?;
    let names: Vec<&str> = all.iter().map(|&s| model.state_name(s)).collect();
    let mut g = CostGraph::new(&names)?;
    let nt = targets.len();
    for u in 0..all.len() {
        for j in 0..nt {
            g.set_edge(u, j, f64_cap(into_targets.get(u, j)));
        }
    }
    for u in 0..nt {
        for j in 0..initials.len() {
            g.set_edge(u, nt + j, f64_cap(into_initials.get(u, j)));
        }
    }
    Ok(g)
}

/// Applies same-agent groups (intra-group costs set to 0) and then target
/// sequences: for a pair `(t1, t2)`, every edge `(t, t2)` costs the least
/// capacity to reach `t1` and then `t2` from `t`, and every other edge
/// `(t2, t)` costs `MinCap(t2, t)`. Sequences need the model.
pub fn apply_variants(
    g: &CostGraph,
    constraints: &VariantConstraints,
    model: Option<&ConsumptionMdp>,
) -> Result<(CostGraph, Vec<EdgeOverride>)> {
    let mut out = g.clone();
    let mut log = Vec::new();
    let mut set = |out: &mut CostGraph, u: usize, v: usize, new: f64, reason: String| {
        if let Some(old) = out.cost(u, v) {
            if old != new {
                log.push(EdgeOverride { from: out.name(u).to_owned(), to: out.name(v).to_owned(), old, new, reason });
            }
            out.set_edge(u, v, new);
        }
    };

    for (k, group) in constraints.same_agent_groups.iter().enumerate() {
        let ids = group.iter().map(|t| g.vertex(t)).collect::<Result<Vec<_>>>()?;
        for &u in &ids {
            for &v in &ids {
                set(&mut out, u, v, 0.0, format!("same-agent group {k}"));
            }
        }
    }

    if constraints.sequences.is_empty() {
        return Ok((out, log));
    }
    let model = model.ok_or_else(|| Error::InvalidInput("target sequences need a model".into()))?;
    for (t1, t2) in &constraints.sequences {
        g.vertex(t1)?;
        let v2 = g.vertex(t2)?;
        let (s1, s2) = (model.state(t1)?, model.state(t2)?);
        let reason = format!("sequence {t1} -> {t2}");
        for u in 0..g.num_vertices() {
            let s = model.state(g.name(u))?;
            if out.has_edge(u, v2) {
                let c = f64_cap(min_cap_sequence(model, s, s1, s2)?.value);
                set(&mut out, u, v2, c, reason.clone());
            }
            if u != v2 && out.has_edge(v2, u) {
                let c = f64_cap(min_cap(model, s2, s)?.value);
                set(&mut out, v2, u, c, reason.clone());
            }
        }
    }
    Ok((out, log))
}

/// Closed walk through cell `cell` of `result` that visits every member,
/// using only retained edges inside the cell. The walk returns from its last
/// vertex to its first; a singleton cell is the walk `[c]`.
pub fn plan_cycle(result: &PlanResult, cell: usize) -> Result<Vec<usize>> {
    let comps = &result.components;
    let members = comps
        .components()
        .get(cell)
        .ok_or_else(|| Error::InvalidInput(format!("no cell {cell}")))?;
    if members.len() == 1 {
        return Ok(members.clone());
    }
    let h = &result.retained;
    let inside = |v: usize| comps.component_of(v) == Some(cell);
    let path = |from: usize, to: usize| -> Result<Vec<usize>> {
        let mut prev = vec![usize::MAX; h.num_vertices()];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for (v, _) in h.out_edges(u) {
                if inside(v) && prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[to] == usize::MAX {
            return Err(Error::Internal(format!("cell {cell} is not strongly connected in the retained graph")));
        }
        let mut p = vec![to];
        while *p.last().unwrap() != from {
            p.push(prev[*p.last().unwrap()]);
        }
        p.reverse();
        Ok(p)
    };

    let start = members[0];
    let mut walk = vec![start];
    let mut visited: BTreeSet<usize> = BTreeSet::from([start]);
    for &m in &members[1..] {
        if visited.contains(&m) {
            continue;
        }
        let p = path(*walk.last().unwrap(), m)?;
        for &v in &p[1..] {
            visited.insert(v);
            walk.push(v);
        }
    }
    let back = path(*walk.last().unwrap(), start)?;
    walk.extend_from_slice(&back[1..back.len() - 1]);
    Ok(walk)
}

/// Consecutive pairs of a closed walk, including the closing pair.
pub fn walk_legs(walk: &[usize]) -> Vec<(usize, usize)> {
    (0..walk.len()).map(|k| (walk[k], walk[(k + 1) % walk.len()])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn decomposition_cells_and_cycles() {
        let g = instances::scc_example_graph();
        let r = min_cost_scc_decomposition(&g, 2, SearchMode::Binary).unwrap();
        let alloc = extract_allocation(&r);
        assert_eq!(alloc.cells, vec![vec!["v1", "v2", "v4", "v5"], vec!["v3"]]);
        assert!(alloc.is_partition_of(g.names()));

        let walk = plan_cycle(&r, 0).unwrap();
        let covered: BTreeSet<usize> = walk.iter().copied().collect();
        assert_eq!(covered.len(), 4);
        for (u, v) in walk_legs(&walk) {
            assert!(r.retained.cost(u, v).unwrap() <= r.capacity);
        }
        assert_eq!(plan_cycle(&r, 1).unwrap(), vec![g.vertex("v3").unwrap()]);
    }

    #[test]
    fn assignments_of_matching_examples() {
        let g = instances::matching_example_graph();
        let i = vec![g.vertex("i1").unwrap(), g.vertex("i2").unwrap()];
        let r = min_cost_scc_matching(&g, &i, SearchMode::Linear).unwrap();
        let alloc = extract_allocation(&r);
        let asg = extract_assignment(&r).unwrap();
        assert_eq!(alloc.cells[asg.cell_of("i1").unwrap().unwrap()], vec!["v3"]);
        assert_eq!(alloc.cells[asg.cell_of("i2").unwrap().unwrap()], vec!["v1", "v2"]);
        assert!(asg.covers(alloc.cells.len()));

        let g = instances::matching_example_graph_cheap_return();
        let r = min_cost_scc_matching(&g, &i, SearchMode::Binary).unwrap();
        let asg = extract_assignment(&r).unwrap();
        assert_eq!(asg.cell_of("i1"), Some(None));
        assert_eq!(extract_allocation(&r).cells[asg.cell_of("i2").unwrap().unwrap()], vec!["v1", "v2", "v3"]);
    }

    #[test]
    fn same_agent_group_forces_one_cell() {
        let g = instances::scc_example_graph();
        let c = VariantConstraints { same_agent_groups: vec![vec!["v1".into(), "v3".into()]], sequences: vec![] };
        let (h, log) = apply_variants(&g, &c, None).unwrap();
        for (u, v) in [("v1", "v3"), ("v3", "v1"), ("v1", "v1"), ("v3", "v3")] {
            assert_eq!(h.cost(h.vertex(u).unwrap(), h.vertex(v).unwrap()), Some(0.0));
        }
        assert_eq!(log.len(), 4);
        for n in 1..=4 {
            let r = min_cost_scc_decomposition(&h, n, SearchMode::Linear).unwrap();
            let (a, b) = (h.vertex("v1").unwrap(), h.vertex("v3").unwrap());
            assert_eq!(r.components.component_of(a), r.components.component_of(b));
        }
    }

    #[test]
    fn empty_constraints_are_identity() {
        let g = instances::matching_example_graph();
        let (h, log) = apply_variants(&g, &VariantConstraints::default(), None).unwrap();
        assert_eq!(h, g);
        assert!(log.is_empty());
    }

    #[test]
    fn sequences_need_a_model() {
        let g = instances::scc_example_graph();
        let c = VariantConstraints { same_agent_groups: vec![], sequences: vec![("v1".into(), "v2".into())] };
        assert!(apply_variants(&g, &c, None).is_err());
        let c = VariantConstraints { same_agent_groups: vec![vec!["nope".into()]], sequences: vec![] };
        assert!(apply_variants(&g, &c, None).is_err());
    }

    #[test]
    fn target_graph_of_reference_model() {
        let m = instances::reload_detour_model();
        let t = m.state("t").unwrap();
        let g = build_target_graph(&m, &[t]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.cost(0, 0), Some(1.0));
        assert!(matches!(build_target_graph(&m, &[m.state("s").unwrap()]), Err(Error::Precondition(_))));
    }

    #[test]
    fn routing_graph_shape() {
        let m = instances::reload_detour_model();
        let (r, t, s, u) = (m.state("r").unwrap(), m.state("t").unwrap(), m.state("s").unwrap(), m.state("u").unwrap());
        let g = build_routing_graph(&m, &[r, t], &[s, u]).unwrap();
        assert_eq!(g.num_edges(), 4 * 4 - 2 * 2);
        assert!(!g.has_edge(2, 3) && !g.has_edge(3, 2) && !g.has_edge(2, 2));
        assert_eq!(g.cost(0, 1), Some(11.0));
        assert!(build_routing_graph(&m, &[r, t], &[t]).is_err());
    }
}
