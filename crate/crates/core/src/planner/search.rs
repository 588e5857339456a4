use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::costgraph::{build_bipartite, max_matching, tarjan, CostGraph, Matching, SccDecomposition};
use crate::error::{Error, Result};

/// How the bottleneck threshold is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Remove edges one at a time, most expensive first.
    Linear,
    /// Bisect over the sorted distinct costs.
    #[default]
    Binary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Number of subgraphs tested against the stopping criterion.
    pub evaluations: usize,
    pub scc_seconds: f64,
    pub matching_seconds: f64,
}

/// Solution of a minimal-cost SCC decomposition or SCC matching instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub graph: CostGraph,
    /// `H*`: the input restricted to edges of cost at most `threshold`.
    pub retained: CostGraph,
    /// `cmax(H*)`; `None` when `H*` is edgeless by construction.
    pub threshold: Option<f64>,
    /// `threshold` raised to the self-loop cost of every singleton cell.
    pub capacity: f64,
    /// `SCC(H*)`, or `SCC(H*[V'])` for matching instances.
    pub components: SccDecomposition,
    /// Agent vertices (empty for decomposition instances).
    pub initials: Vec<usize>,
    /// Left side indexes `components`, right side indexes `initials`.
    pub matching: Option<Matching>,
    pub stats: SearchStats,
}

/// SCC decomposition that is refined as edges are removed. Removing an edge
/// between two components changes nothing; otherwise only the component
/// holding it is decomposed again.
pub(crate) struct IncrementalScc {
    adj: Vec<Vec<usize>>,
    include: Vec<bool>,
    comp_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    mark: Vec<bool>,
}

impl IncrementalScc {
    pub(crate) fn new(adj: Vec<Vec<usize>>, include: Vec<bool>) -> Self {
        let n = adj.len();
        let members = tarjan(&adj, |v| include[v]);
        let mut comp_of = vec![usize::MAX; n];
        for (i, c) in members.iter().enumerate() {
            for &v in c {
                comp_of[v] = i;
            }
        }
        IncrementalScc { adj, include, comp_of, members, mark: vec![false; n] }
    }

    pub(crate) fn count(&self) -> usize {
        self.members.len()
    }

    pub(crate) fn remove_edge(&mut self, u: usize, v: usize) {
        self.adj[u].retain(|&w| w != v);
        if !self.include[u] || !self.include[v] || u == v {
            return;
        }
        let c = self.comp_of[u];
        if self.comp_of[v] != c {
            return;
        }
        let old = std::mem::take(&mut self.members[c]);
        for &x in &old {
            self.mark[x] = true;
        }
        let mark = &self.mark;
        let mut parts = tarjan(&self.adj, |x| mark[x]).into_iter();
        for &x in &old {
            self.mark[x] = false;
        }
        self.members[c] = parts.next().expect("component is nonempty");
        for part in parts {
            let id = self.members.len();
            for &x in &part {
                self.comp_of[x] = id;
            }
            self.members.push(part);
        }
    }

    pub(crate) fn decomposition(&self) -> SccDecomposition {
        SccDecomposition::from_components(self.adj.len(), self.members.clone())
    }
}

fn descending_edges(g: &CostGraph) -> Vec<(usize, usize, f64)> {
    let mut order: Vec<(usize, usize, f64)> = g.edges().collect();
    order.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    order
}

/// Least cost in `costs` (ascending) satisfying a monotone predicate.
fn least_cost(costs: &[f64], mut ok: impl FnMut(f64) -> bool) -> Option<f64> {
    let top = *costs.last()?;
    if !ok(top) {
        return None;
    }
    let (mut lo, mut hi) = (0, costs.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(costs[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(costs[hi])
}

fn count_sccs(g: &CostGraph, c: f64, include: &[bool]) -> usize {
    let mut adj = vec![Vec::new(); g.num_vertices()];
    for (u, v, cost) in g.edges() {
        if cost <= c {
            adj[u].push(v);
        }
    }
    tarjan(&adj, |v| include[v]).len()
}

/// Raises `base` to `C(c, c)` for every singleton component `{c}`.
fn adjusted_capacity(g: &CostGraph, base: Option<f64>, comps: &SccDecomposition) -> Option<f64> {
    comps
        .components()
        .iter()
        .filter(|c| c.len() == 1)
        .filter_map(|c| g.cost(c[0], c[0]))
        .chain(base)
        .reduce(f64::max)
}

fn infeasible(g: &CostGraph, comps: &SccDecomposition) -> Error {
    let singleton_loop = comps
        .components()
        .iter()
        .filter(|c| c.len() == 1)
        .find(|c| g.cost(c[0], c[0]) == Some(f64::INFINITY))
        .map(|c| (c[0], c[0]));
    let (u, v) = g
        .edges()
        .find(|&(_, _, c)| c == f64::INFINITY)
        .map(|(u, v, _)| (u, v))
        .or(singleton_loop)
        .unwrap_or((0, 0));
    Error::Infeasible { from: g.name(u).to_owned(), to: g.name(v).to_owned() }
}

fn finish(mut result: PlanResult) -> Result<PlanResult> {
    if result.threshold == Some(f64::INFINITY) || result.capacity == f64::INFINITY {
        return Err(infeasible(&result.graph, &result.components));
    }
    result.capacity = result.capacity.max(result.threshold.unwrap_or(f64::NEG_INFINITY));
    Ok(result)
}

/// Subgraph with at most `n` SCCs minimizing its largest edge cost.
pub fn min_cost_scc_decomposition(g: &CostGraph, n: usize, mode: SearchMode) -> Result<PlanResult> {
    if n < 1 {
        return Err(Error::InvalidInput("the number of agents must be at least 1".into()));
    }
    let nv = g.num_vertices();
    if nv == 0 {
        return Err(Error::InvalidInput("the graph has no vertices".into()));
    }
    let mut stats = SearchStats::default();

    if nv <= n {
        let retained = CostGraph::new(g.names())?;
        let components = SccDecomposition::from_components(nv, (0..nv).map(|v| vec![v]).collect());
        let capacity = adjusted_capacity(g, None, &components).unwrap_or(0.0);
        return finish(PlanResult {
            graph: g.clone(),
            retained,
            threshold: None,
            capacity,
            components,
            initials: Vec::new(),
            matching: None,
            stats,
        });
    }

    let include = vec![true; nv];
    let started = Instant::now();
    let threshold = match mode {
        SearchMode::Linear => {
            let mut scc = IncrementalScc::new(g.adjacency(), include);
            stats.evaluations += 1;
            if scc.count() > n {
                None
            } else {
                let mut found = None;
                for (u, v, c) in descending_edges(g) {
                    scc.remove_edge(u, v);
                    stats.evaluations += 1;
                    if scc.count() > n {
                        found = Some(c);
                        break;
                    }
                }
                found
            }
        }
        SearchMode::Binary => least_cost(&g.distinct_costs(), |c| {
            stats.evaluations += 1;
            count_sccs(g, c, &include) <= n
        }),
    };
    stats.scc_seconds = started.elapsed().as_secs_f64();
    let Some(threshold) = threshold else {
        return Err(Error::Precondition(format!(
            "even with every edge the graph has more than {n} strongly connected components"
        )));
    };

    let retained = g.threshold_subgraph(threshold);
    let components = crate::costgraph::scc_decompose(&retained);
    let capacity = adjusted_capacity(g, Some(threshold), &components).unwrap_or(threshold);
    finish(PlanResult {
        graph: g.clone(),
        retained,
        threshold: Some(threshold),
        capacity,
        components,
        initials: Vec::new(),
        matching: None,
        stats,
    })
}

fn split_vertices(g: &CostGraph, initials: &[usize]) -> Result<(Vec<usize>, Vec<bool>)> {
    let nv = g.num_vertices();
    let mut is_initial = vec![false; nv];
    for &i in initials {
        if i >= nv {
            return Err(Error::UnknownVertex(format!("#{i}")));
        }
        if is_initial[i] {
            return Err(Error::InvalidInput(format!("initial vertex `{}` listed twice", g.name(i))));
        }
        is_initial[i] = true;
    }
    if initials.is_empty() || initials.len() == nv {
        return Err(Error::InvalidInput("initial vertices must be a nonempty proper subset".into()));
    }
    if let Some((u, v, _)) = g.edges().find(|&(u, v, _)| is_initial[u] && is_initial[v]) {
        return Err(Error::InvalidInput(format!("edge ({}, {}) joins two initial vertices", g.name(u), g.name(v))));
    }
    let others = (0..nv).filter(|&v| !is_initial[v]).collect();
    Ok((others, is_initial.iter().map(|&b| !b).collect()))
}

fn matching_holds(h: &CostGraph, initials: &[usize], comps: &SccDecomposition, stats: &mut SearchStats) -> bool {
    let started = Instant::now();
    let mut into = vec![vec![false; comps.len()]; initials.len()];
    let mut b = crate::costgraph::BipartiteGraph::new(
        (0..comps.len()).map(|c| c.to_string()).collect(),
        initials.iter().map(|&i| h.name(i).to_owned()).collect(),
    );
    for (ri, &i) in initials.iter().enumerate() {
        for (q, c) in (0..h.num_vertices()).filter_map(|q| comps.component_of(q).map(|c| (q, c))) {
            if h.has_edge(q, i) {
                into[ri][c] = true;
            }
        }
        for (q, _) in h.out_edges(i) {
            if let Some(c) = comps.component_of(q) {
                if into[ri][c] {
                    b.add_edge(c, ri);
                }
            }
        }
    }
    let ok = max_matching(&b).len() == comps.len();
    stats.matching_seconds += started.elapsed().as_secs_f64();
    stats.evaluations += 1;
    ok
}

/// Subgraph minimizing its largest edge cost such that every SCC of the
/// non-initial part can be matched to a distinct initial vertex that has an
/// edge into and an edge out of it.
pub fn min_cost_scc_matching(g: &CostGraph, initials: &[usize], mode: SearchMode) -> Result<PlanResult> {
    let (others, include) = split_vertices(g, initials)?;
    let mut stats = SearchStats::default();

    let threshold = match mode {
        SearchMode::Linear => {
            let mut h = g.clone();
            let started = Instant::now();
            let mut scc = IncrementalScc::new(g.adjacency(), include.clone());
            stats.scc_seconds += started.elapsed().as_secs_f64();
            if !matching_holds(&h, initials, &scc.decomposition(), &mut stats) {
                None
            } else {
                let mut found = None;
                for (u, v, c) in descending_edges(g) {
                    h.remove_edge(u, v);
                    let started = Instant::now();
                    scc.remove_edge(u, v);
                    let comps = scc.decomposition();
                    stats.scc_seconds += started.elapsed().as_secs_f64();
                    if !matching_holds(&h, initials, &comps, &mut stats) {
                        found = Some(c);
                        break;
                    }
                }
                found
            }
        }
        SearchMode::Binary => least_cost(&g.distinct_costs(), |c| {
            let h = g.threshold_subgraph(c);
            let started = Instant::now();
            let comps = crate::costgraph::scc_decompose_within(&h, &others);
            stats.scc_seconds += started.elapsed().as_secs_f64();
            matching_holds(&h, initials, &comps, &mut stats)
        }),
    };
    let Some(threshold) = threshold else {
        return Err(Error::Precondition(
            "even with every edge the targets cannot be matched to the agents".into(),
        ));
    };

    let retained = g.threshold_subgraph(threshold);
    let (components, b) = build_bipartite(&retained, initials, &others)?;
    let started = Instant::now();
    let matching = max_matching(&b);
    stats.matching_seconds += started.elapsed().as_secs_f64();
    if matching.len() != components.len() {
        return Err(Error::Internal("final matching does not cover every component".into()));
    }
    let capacity = adjusted_capacity(g, Some(threshold), &components).unwrap_or(threshold);
    finish(PlanResult {
        graph: g.clone(),
        retained,
        threshold: Some(threshold),
        capacity,
        components,
        initials: initials.to_vec(),
        matching: Some(matching),
        stats,
    })
}
