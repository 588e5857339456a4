//! Directed graphs with real edge costs.

mod bipartite;
mod scc;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub use bipartite::{build_bipartite, max_matching, BipartiteGraph, Matching};
pub use scc::{scc_decompose, scc_decompose_within, SccDecomposition};
pub(crate) use scc::tarjan;

/// A directed graph `(V, E, C)` with named vertices and at most one edge per
/// ordered pair. Self-loops are allowed; costs may be `+∞` but not NaN.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostGraph {
    names: Vec<String>,
    lookup: HashMap<String, usize>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl CostGraph {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut g = CostGraph::default();
        for n in names {
            g.add_vertex(n.as_ref())?;
        }
        Ok(g)
    }

    /// Builds a graph from named edges; vertices are listed first so that
    /// their order is explicit.
    pub fn with_edges<S: AsRef<str>>(names: &[S], edges: &[(&str, &str, f64)]) -> Result<Self> {
        let mut g = CostGraph::new(names)?;
        for &(u, v, c) in edges {
            g.set_edge_named(u, v, c)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, name: &str) -> Result<usize> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("invalid vertex name `{name}`")));
        }
        if self.lookup.contains_key(name) {
            return Err(Error::InvalidInput(format!("duplicate vertex `{name}`")));
        }
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), self.names.len() - 1);
        Ok(self.names.len() - 1)
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex(&self, name: &str) -> Result<usize> {
        self.lookup.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_owned()))
    }

    /// Inserts or overwrites the edge `(u, v)`.
    pub fn set_edge(&mut self, u: usize, v: usize, cost: f64) {
        assert!(u < self.names.len() && v < self.names.len(), "edge endpoint out of range");
        assert!(!cost.is_nan(), "edge cost is NaN");
        self.edges.insert((u, v), cost);
    }

    pub fn set_edge_named(&mut self, u: &str, v: &str, cost: f64) -> Result<()> {
        if cost.is_nan() {
            return Err(Error::InvalidInput(format!("cost of ({u}, {v}) is NaN")));
        }
        let (u, v) = (self.vertex(u)?, self.vertex(v)?);
        self.set_edge(u, v, cost);
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> Option<f64> {
        self.edges.remove(&(u, v))
    }

    pub fn cost(&self, u: usize, v: usize) -> Option<f64> {
        self.edges.get(&(u, v)).copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains_key(&(u, v))
    }

    /// Edges in lexicographic `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(u, v), &c)| (u, v, c))
    }

    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges.range((u, 0)..(u + 1, 0)).map(|(&(_, v), &c)| (v, c))
    }

    /// Largest edge cost, `None` for an edgeless graph.
    pub fn cmax(&self) -> Option<f64> {
        self.edges.values().copied().reduce(f64::max)
    }

    /// Distinct edge costs in increasing order.
    pub fn distinct_costs(&self) -> Vec<f64> {
        let mut costs: Vec<f64> = self.edges.values().copied().collect();
        costs.sort_by(f64::total_cmp);
        costs.dedup();
        costs
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.names.len()];
        for &(u, v) in self.edges.keys() {
            adj[u].push(v);
        }
        adj
    }

    /// Same vertices, only edges of cost at most `c`.
    pub fn threshold_subgraph(&self, c: f64) -> CostGraph {
        CostGraph {
            names: self.names.clone(),
            lookup: self.lookup.clone(),
            edges: self.edges.iter().filter(|(_, &cost)| cost <= c).map(|(&k, &v)| (k, v)).collect(),
        }
    }

    /// `G[V']`: the listed vertices (renumbered in their original order) and
    /// the edges between them.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<CostGraph> {
        let mut keep: Vec<usize> = vertices.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&bad) = keep.iter().find(|&&v| v >= self.names.len()) {
            return Err(Error::UnknownVertex(format!("#{bad}")));
        }
        let mut new_index = vec![usize::MAX; self.names.len()];
        for (i, &v) in keep.iter().enumerate() {
            new_index[v] = i;
        }
        let names: Vec<&str> = keep.iter().map(|&v| self.names[v].as_str()).collect();
        let mut g = CostGraph::new(&names)?;
        for (&(u, v), &c) in &self.edges {
            if new_index[u] != usize::MAX && new_index[v] != usize::MAX {
                g.edges.insert((new_index[u], new_index[v]), c);
            }
        }
        Ok(g)
    }

    pub fn induced_subgraph_named<S: AsRef<str>>(&self, names: &[S]) -> Result<CostGraph> {
        let ids = names.iter().map(|n| self.vertex(n.as_ref())).collect::<Result<Vec<_>>>()?;
        self.induced_subgraph(&ids)
    }

    /// Parses lines `u v cost`. A line holding a single name declares an
    /// isolated vertex; `#` starts a comment. Vertices are numbered in order
    /// of first appearance. `inf` is accepted as a cost.
    pub fn parse_edge_list(text: &str) -> Result<CostGraph> {
        let mut g = CostGraph::default();
        let id = |g: &mut CostGraph, name: &str| match g.lookup.get(name) {
            Some(&v) => Ok(v),
            None => g.add_vertex(name),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
            match fields.as_slice() {
                [] => {}
                [v] => {
                    id(&mut g, v)?;
                }
                [u, v, c] => {
                    let cost: f64 = c.parse().map_err(|_| bad(&format!("bad cost `{c}`")))?;
                    if cost.is_nan() {
                        return Err(bad("cost is NaN"));
                    }
                    let (u, v) = (id(&mut g, u)?, id(&mut g, v)?);
                    if g.edges.insert((u, v), cost).is_some() {
                        return Err(bad("duplicate edge"));
                    }
                }
                _ => return Err(bad("expected `u v cost`")),
            }
        }
        Ok(g)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for name in &self.names {
            writeln!(out, "{name}").unwrap();
        }
        for (u, v, c) in self.edges() {
            writeln!(out, "{} {} {}", self.names[u], self.names[v], c).unwrap();
        }
        out
    }

    /// DOT rendering. Edges missing from `retained` are drawn dashed and
    /// gray; vertices are filled by component.
    pub fn to_dot(&self, retained: Option<&CostGraph>, components: Option<&SccDecomposition>) -> String {
        const PALETTE: [&str; 8] =
            ["#fbb4ae", "#b3cde3", "#ccebc5", "#decbe4", "#fed9a6", "#ffffcc", "#e5d8bd", "#fddaec"];
        let mut out = String::from("digraph G {\n  node [shape=circle, style=filled, fillcolor=white];\n");
        for (v, name) in self.names.iter().enumerate() {
            let fill = components
                .and_then(|c| c.component_of(v))
                .map_or("white", |i| PALETTE[i % PALETTE.len()]);
            writeln!(out, "  \"{name}\" [fillcolor=\"{fill}\"];").unwrap();
        }
        for (u, v, c) in self.edges() {
            let kept = retained.is_none_or(|h| h.has_edge(u, v));
            let inside = components.is_some_and(|d| d.component_of(u).is_some() && d.component_of(u) == d.component_of(v));
            let style = if !kept {
                "style=dashed, color=gray"
            } else if inside {
                "color=red, penwidth=2"
            } else {
                "color=black"
            };
            writeln!(out, "  \"{}\" -> \"{}\" [label=\"{}\", {}];", self.names[u], self.names[v], c, style).unwrap();
        }
        out.push_str("}\n");
        out
    }
}
