//! Timing suites over seeded grid instances.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use mincap_core::gridworld::cell_name;
use mincap_core::{gen_grid, solve, ConsumptionMdp, CostMode, GridSpec, PlanRequest, Problem, SearchMode, StateId};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cost {
    Exact,
    Heuristic,
}

/// A single count, an explicit list, or an inclusive stepped range.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    One(usize),
    List(Vec<usize>),
    Range { from: usize, to: usize, step: usize },
}

impl Counts {
    fn values(&self) -> Result<Vec<usize>> {
        Ok(match self {
            Counts::One(n) => vec![*n],
            Counts::List(v) => v.clone(),
            Counts::Range { step: 0, .. } => bail!("range step must be positive"),
            Counts::Range { from, to, step } => (*from..=*to).step_by(*step).collect(),
        })
    }
}

fn default_problem() -> Problem {
    Problem::Routing
}

fn default_repetitions() -> usize {
    1
}

fn default_agents() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    /// Grid side length `K`.
    pub size: u32,
    pub targets: Counts,
    /// Initial states for routing.
    #[serde(default)]
    pub initials: usize,
    /// Agents for allocation.
    #[serde(default = "default_agents")]
    pub agents: usize,
    pub cost: Cost,
    #[serde(default = "default_problem")]
    pub problem: Problem,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub currents: bool,
    #[serde(default)]
    pub search: SearchMode,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub cases: Vec<Case>,
}

pub const HEADER: &str = "size,targets,initials,agents,cost,problem,repetitions,\
matrix_mean,matrix_std,scc_mean,scc_std,matching_mean,matching_std,total_mean,total_std";

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn ids(model: &ConsumptionMdp, cells: &[(u32, u32)]) -> Result<Vec<StateId>> {
    Ok(cells.iter().map(|&c| model.state(&cell_name(c))).collect::<mincap_core::Result<_>>()?)
}

impl Suite {
    pub fn validate(&self) -> Result<()> {
        for (k, case) in self.cases.iter().enumerate() {
            if case.repetitions == 0 {
                bail!("case {k}: repetitions must be positive");
            }
            if case.problem == Problem::Routing && case.initials == 0 {
                bail!("case {k}: routing needs at least one initial state");
            }
            if case.problem == Problem::Allocation && case.agents == 0 {
                bail!("case {k}: the number of agents must be at least 1");
            }
            for t in case.targets.values()? {
                if t == 0 {
                    bail!("case {k}: target counts must be positive");
                }
                GridSpec::random_instance(case.size, t, case.initials, case.seed, case.currents)?;
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.cases.iter().map(|c| c.seed).collect()
    }

    /// Runs every case and returns the CSV table, one row per target count.
    pub fn run(&self) -> Result<String> {
        self.validate()?;
        let mut out = String::from(HEADER);
        out.push('\n');
        for case in &self.cases {
            for t in case.targets.values()? {
                let spec = GridSpec::random_instance(case.size, t, case.initials, case.seed, case.currents)?;
                let model = gen_grid(&spec)?;
                let routing = case.problem == Problem::Routing;
                let mut req = if routing {
                    PlanRequest::routing(ids(&model, &spec.target_cells)?, ids(&model, &spec.initial_cells)?)
                } else {
                    PlanRequest::allocation(ids(&model, &spec.target_cells)?, case.agents)
                };
                req.search = case.search;
                if case.cost == Cost::Heuristic {
                    req.cost = CostMode::Heuristic(spec.clone());
                }
                let mut phases: [Vec<f64>; 4] = Default::default();
                for _ in 0..case.repetitions {
                    let tm = solve(&model, &req)?.timings;
                    for (xs, x) in phases.iter_mut().zip([tm.matrix_seconds, tm.scc_seconds, tm.matching_seconds, tm.total_seconds]) {
                        xs.push(x);
                    }
                }
                write!(
                    out,
                    "{},{},{},{},{},{},{}",
                    case.size,
                    t,
                    if routing { case.initials } else { 0 },
                    if routing { 0 } else { case.agents },
                    if case.cost == Cost::Exact { "exact" } else { "heuristic" },
                    if routing { "routing" } else { "alloc" },
                    case.repetitions
                )?;
                for xs in &phases {
                    let (m, s) = mean_std(xs);
                    write!(out, ",{m:.6},{s:.6}")?;
                }
                out.push('\n');
            }
        }
        Ok(out)
    }
}
