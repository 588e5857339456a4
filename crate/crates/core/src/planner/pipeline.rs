use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    apply_variants, build_routing_graph, build_target_graph, check_reload_targets, extract_allocation,
    extract_assignment, plan_cycle, walk_legs, EdgeOverride, VariantConstraints,
};
use super::search::{min_cost_scc_decomposition, min_cost_scc_matching, PlanResult, SearchMode};
use crate::cmdp::{ActionId, ConsumptionMdp, CounterStrategy, Policy, StateId};
use crate::costgraph::CostGraph;
use crate::error::{Error, Result};
use crate::gridworld::{heuristic_graph, parse_cell, GridSpec};
use crate::synthesis::{min_cap, witness_at};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    /// Split the targets among a number of agents.
    #[serde(rename = "alloc")]
    Allocation,
    /// Split the targets among agents with given start states.
    #[serde(rename = "routing")]
    Routing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostMode {
    /// Edge costs are exact minimal capacities.
    Exact,
    /// Edge costs are grid distances; states must be named `x_y`.
    Heuristic(GridSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub problem: Problem,
    pub targets: Vec<StateId>,
    /// Start states, used by routing.
    pub initials: Vec<StateId>,
    /// Number of agents, used by allocation.
    pub agents: usize,
    pub cost: CostMode,
    pub search: SearchMode,
    pub variants: VariantConstraints,
}

impl PlanRequest {
    pub fn allocation(targets: Vec<StateId>, agents: usize) -> Self {
        PlanRequest {
            problem: Problem::Allocation,
            targets,
            initials: Vec::new(),
            agents,
            cost: CostMode::Exact,
            search: SearchMode::Binary,
            variants: VariantConstraints::default(),
        }
    }

    pub fn routing(targets: Vec<StateId>, initials: Vec<StateId>) -> Self {
        let agents = initials.len();
        PlanRequest { problem: Problem::Routing, initials, agents, ..PlanRequest::allocation(targets, agents) }
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub matrix_seconds: f64,
    pub scc_seconds: f64,
    pub matching_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub from: String,
    pub to: String,
}

impl Leg {
    fn new(from: &str, to: &str) -> Self {
        Leg { from: from.to_owned(), to: to.to_owned() }
    }
}

/// Route of one agent: the legs up to `cycle_start` are played once, the
/// rest repeat forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPlan {
    pub agent: String,
    pub start: String,
    pub cell: usize,
    pub targets: Vec<String>,
    pub legs: Vec<Leg>,
    pub cycle_start: usize,
    /// Edge back to the start state; never played.
    pub return_leg: Option<Leg>,
    /// Capacity at which every leg has a witness, when costs are exact.
    pub witness_capacity: Option<u32>,
}

impl AgentPlan {
    /// `witness_capacity`, or the largest `MinCap` over the legs.
    pub fn required_capacity(&self, model: &ConsumptionMdp) -> Result<u32> {
        if let Some(c) = self.witness_capacity {
            return Ok(c);
        }
        let mut cap = 0;
        for leg in &self.legs {
            let (s, t) = (model.state(&leg.from)?, model.state(&leg.to)?);
            match min_cap(model, s, t)?.value {
                Some(c) => cap = cap.max(c),
                None => return Err(Error::Infeasible { from: leg.from.clone(), to: leg.to.clone() }),
            }
        }
        Ok(cap)
    }

    pub fn policy(&self, model: &ConsumptionMdp, capacity: u32) -> Result<LegPolicy> {
        if self.legs.is_empty() || self.cycle_start >= self.legs.len() {
            return Err(Error::InvalidInput(format!("agent `{}` has no cycle", self.agent)));
        }
        let mut cache: HashMap<(StateId, StateId), CounterStrategy> = HashMap::new();
        let mut legs = Vec::with_capacity(self.legs.len());
        for leg in &self.legs {
            let (s, t) = (model.state(&leg.from)?, model.state(&leg.to)?);
            let strategy = match cache.get(&(s, t)) {
                Some(st) => st.clone(),
                None => {
                    let st = witness_at(model, capacity, s, t)?.ok_or_else(|| {
                        Error::Internal(format!("no witness for {} -> {} at capacity {capacity}", leg.from, leg.to))
                    })?;
                    cache.insert((s, t), st.clone());
                    st
                }
            };
            legs.push((t, strategy));
        }
        Ok(LegPolicy { legs, cycle_start: self.cycle_start, current: 0 })
    }

    pub fn target_states(&self, model: &ConsumptionMdp) -> Result<Vec<StateId>> {
        self.targets.iter().map(|t| model.state(t)).collect()
    }
}

/// Plays the witness of the current leg and moves to the next leg on
/// reaching the current leg's destination.
#[derive(Debug, Clone)]
pub struct LegPolicy {
    legs: Vec<(StateId, CounterStrategy)>,
    cycle_start: usize,
    current: usize,
}

impl Policy for LegPolicy {
    fn reset(&mut self) {
        self.current = 0;
    }

    fn choose(&mut self, state: StateId, level: u32) -> Option<ActionId> {
        let mut guard = 0;
        while self.legs[self.current].0 == state && guard < self.legs.len() {
            self.current = if self.current + 1 == self.legs.len() { self.cycle_start } else { self.current + 1 };
            guard += 1;
        }
        self.legs[self.current].1.action(state, level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub problem: Problem,
    pub result: PlanResult,
    pub agents: Vec<AgentPlan>,
    pub overrides: Vec<EdgeOverride>,
    pub timings: Timings,
}

impl Plan {
    pub fn report(&self) -> Result<PlanReport> {
        let mut r = PlanReport::from_result(self.problem, &self.result)?;
        r.agents = self.agents.clone();
        r.overrides = self.overrides.clone();
        Ok(r)
    }

    pub fn to_dot(&self) -> String {
        self.result.graph.to_dot(Some(&self.result.retained), Some(&self.result.components))
    }
}

/// Serialized plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanReport {
    pub problem: Problem,
    pub capacity: f64,
    pub threshold: Option<f64>,
    pub allocation: Vec<Vec<String>>,
    /// Agent to cell index; `null` for idle agents.
    pub assignment: Option<BTreeMap<String, Option<usize>>>,
    /// Closed walk per cell.
    pub cycles: Vec<Vec<String>>,
    pub retained_edges: Vec<(String, String, f64)>,
    #[serde(default)]
    pub agents: Vec<AgentPlan>,
    #[serde(default)]
    pub overrides: Vec<EdgeOverride>,
}

impl PlanReport {
    pub fn from_result(problem: Problem, result: &PlanResult) -> Result<Self> {
        let g = &result.graph;
        let cycles = (0..result.components.len())
            .map(|k| Ok(plan_cycle(result, k)?.iter().map(|&v| g.name(v).to_owned()).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(PlanReport {
            problem,
            capacity: result.capacity,
            threshold: result.threshold,
            allocation: extract_allocation(result).cells,
            assignment: extract_assignment(result).map(|a| a.agents.into_iter().collect()),
            cycles,
            retained_edges: result.retained.edges().map(|(u, v, c)| (g.name(u).to_owned(), g.name(v).to_owned(), c)).collect(),
            agents: Vec::new(),
            overrides: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn heuristic_cost_graph(spec: &GridSpec, model: &ConsumptionMdp, targets: &[StateId], initials: &[StateId]) -> Result<CostGraph> {
    let cells = |ids: &[StateId]| {
        ids.iter()
            .map(|&s| {
                let name = model.state_name(s);
                parse_cell(name).ok_or_else(|| Error::InvalidInput(format!("state `{name}` is not a grid cell")))
            })
            .collect::<Result<Vec<_>>>()
    };
    heuristic_graph(spec, &cells(targets)?, &cells(initials)?)
}

/// Builds the cost graph, applies the variant constraints, solves the
/// bottleneck problem and lays out one route per deployed agent.
pub fn solve(model: &ConsumptionMdp, req: &PlanRequest) -> Result<Plan> {
    let total = Instant::now();
    let routing = req.problem == Problem::Routing;
    if !routing && req.agents < 1 {
        return Err(Error::InvalidInput("the number of agents must be at least 1".into()));
    }
    if routing {
        if req.initials.is_empty() {
            return Err(Error::InvalidInput("routing needs initial states".into()));
        }
        if let Some(&i) = req.initials.iter().find(|i| req.targets.contains(i)) {
            return Err(Error::Precondition(format!("state `{}` is both a target and an initial state", model.state_name(i))));
        }
    }
    let initials: &[StateId] = if routing { &req.initials } else { &[] };

    let started = Instant::now();
    let base = match &req.cost {
        CostMode::Exact if routing => build_routing_graph(model, &req.targets, initials)?,
        CostMode::Exact => build_target_graph(model, &req.targets)?,
        CostMode::Heuristic(spec) => {
            check_reload_targets(model, &req.targets)?;
            heuristic_cost_graph(spec, model, &req.targets, initials)?
        }
    };
    let matrix_seconds = started.elapsed().as_secs_f64();

    let (graph, overrides) = apply_variants(&base, &req.variants, Some(model))?;
    let result = if routing {
        let nt = req.targets.len();
        let ids: Vec<usize> = (nt..nt + initials.len()).collect();
        min_cost_scc_matching(&graph, &ids, req.search)?
    } else {
        min_cost_scc_decomposition(&graph, req.agents, req.search)?
    };

    let exact = req.cost == CostMode::Exact;
    let agents = agent_plans(model, &base, &result, req, exact)?;
    let timings = Timings {
        matrix_seconds,
        scc_seconds: result.stats.scc_seconds,
        matching_seconds: result.stats.matching_seconds,
        total_seconds: total.elapsed().as_secs_f64(),
    };
    Ok(Plan { problem: req.problem, result, agents, overrides, timings })
}

fn agent_plans(
    model: &ConsumptionMdp,
    base: &CostGraph,
    result: &PlanResult,
    req: &PlanRequest,
    exact: bool,
) -> Result<Vec<AgentPlan>> {
    let g = &result.graph;
    let name = |v: usize| g.name(v).to_owned();
    for (t1, t2) in &req.variants.sequences {
        model.state(t1)?;
        model.state(t2)?;
    }
    // A leg into `t2` that does not start at `t1` detours through `t1`.
    let expand = |pairs: Vec<(String, String)>| -> Vec<Leg> {
        let mut out = Vec::new();
        for (x, y) in pairs {
            match req.variants.sequences.iter().find(|(t1, t2)| *t2 == y && *t1 != x) {
                Some((t1, _)) => {
                    out.push(Leg::new(&x, t1));
                    out.push(Leg::new(t1, &y));
                }
                None => out.push(Leg::new(&x, &y)),
            }
        }
        out
    };
    let named_legs = |walk: &[usize]| walk_legs(walk).into_iter().map(|(u, v)| (name(u), name(v))).collect::<Vec<_>>();

    let mut plans = Vec::new();
    for k in 0..result.components.len() {
        let members = result.components.component(k);
        let walk = plan_cycle(result, k)?;
        let mut plan = match &result.matching {
            None => AgentPlan {
                agent: format!("agent{k}"),
                start: name(walk[0]),
                cell: k,
                targets: members.iter().map(|&v| name(v)).collect(),
                legs: expand(named_legs(&walk)),
                cycle_start: 0,
                return_leg: None,
                witness_capacity: None,
            },
            Some(m) => {
                let ri = m
                    .partner_of_left(k)
                    .ok_or_else(|| Error::Internal(format!("cell {k} has no agent")))?;
                let i = result.initials[ri];
                let h = &result.retained;
                let q2 = *members
                    .iter()
                    .find(|&&q| h.has_edge(i, q))
                    .ok_or_else(|| Error::Internal(format!("agent `{}` has no edge into its cell", name(i))))?;
                let q1 = *members
                    .iter()
                    .find(|&&q| h.has_edge(q, i))
                    .ok_or_else(|| Error::Internal(format!("agent `{}` has no edge from its cell", name(i))))?;
                let at = walk.iter().position(|&v| v == q2).expect("walk covers the cell");
                let rotated: Vec<usize> = walk[at..].iter().chain(&walk[..at]).copied().collect();
                let entry = expand(vec![(name(i), name(q2))]);
                let cycle_start = entry.len();
                let mut legs = entry;
                legs.extend(expand(named_legs(&rotated)));
                AgentPlan {
                    agent: name(i),
                    start: name(i),
                    cell: k,
                    targets: members.iter().map(|&v| name(v)).collect(),
                    legs,
                    cycle_start,
                    return_leg: Some(Leg::new(&name(q1), &name(i))),
                    witness_capacity: None,
                }
            }
        };
        if exact {
            let mut cap = result.capacity;
            for leg in &plan.legs {
                let c = base.cost(base.vertex(&leg.from)?, base.vertex(&leg.to)?).unwrap_or(f64::INFINITY);
                if c == f64::INFINITY {
                    return Err(Error::Infeasible { from: leg.from.clone(), to: leg.to.clone() });
                }
                cap = cap.max(c);
            }
            plan.witness_capacity = Some(cap as u32);
        }
        plans.push(plan);
    }
    if result.matching.is_some() {
        let order: HashMap<&str, usize> = result.initials.iter().enumerate().map(|(k, &i)| (g.name(i), k)).collect();
        plans.sort_by_key(|p| order[p.agent.as_str()]);
    }
    Ok(plans)
}
