//! Minimal-capacity target allocation and routing for teams of agents in
//! consumption MDPs.
//!
//! The pipeline computes pairwise minimal capacities between targets (and
//! agent start states) in a consumption MDP, then solves a bottleneck SCC
//! decomposition or SCC matching problem on the resulting cost graph.

pub mod cmdp;
pub mod costgraph;
pub mod error;
pub mod gridworld;
pub mod instances;
pub mod planner;
pub mod synthesis;

pub use cmdp::{
    is_safe, resource_levels, simulate, simulate_policy, validate_cmdp, ActionId, ConsumptionMdp, CounterStrategy,
    ModelDescription, Path, Policy, ResourceLevel, ResourceTrace, SimulationConfig, SimulationStats, StateId,
    ValidationReport,
};
pub use costgraph::{
    build_bipartite, max_matching, scc_decompose, BipartiteGraph, CostGraph, Matching, SccDecomposition,
};
pub use error::{Error, Result};
pub use gridworld::{gen_grid, heuristic_cost, GridSpec};
pub use planner::{
    min_cost_scc_decomposition, min_cost_scc_matching, solve, AgentPlan, Allocation, Assignment, CostMode, Plan,
    PlanReport, PlanRequest, PlanResult, Problem, SearchMode, VariantConstraints,
};
pub use synthesis::{
    capacity_upper_bound, feasible, min_cap, min_cap_matrix, min_cap_sequence, witness_at, CapacityMatrix,
    CapacityResult,
};
