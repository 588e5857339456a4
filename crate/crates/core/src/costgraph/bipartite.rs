use std::collections::{BTreeSet, VecDeque};

use super::scc::{tarjan, SccDecomposition};
use super::CostGraph;
use crate::error::{Error, Result};

/// Bipartite graph with `left` and `right` vertex labels and edges `(l, r)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BipartiteGraph {
    pub left: Vec<String>,
    pub right: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(left: Vec<String>, right: Vec<String>) -> Self {
        BipartiteGraph { left, right, edges: BTreeSet::new() }
    }

    pub fn from_names<S: AsRef<str>>(left: &[S], right: &[S], edges: &[(&str, &str)]) -> Result<Self> {
        let own = |xs: &[S]| xs.iter().map(|x| x.as_ref().to_owned()).collect::<Vec<_>>();
        let mut b = BipartiteGraph::new(own(left), own(right));
        for &(l, r) in edges {
            let li = b.left.iter().position(|x| x == l).ok_or_else(|| Error::UnknownVertex(l.to_owned()))?;
            let ri = b.right.iter().position(|x| x == r).ok_or_else(|| Error::UnknownVertex(r.to_owned()))?;
            b.add_edge(li, ri);
        }
        Ok(b)
    }

    pub fn add_edge(&mut self, l: usize, r: usize) {
        assert!(l < self.left.len() && r < self.right.len(), "bipartite edge out of range");
        self.edges.insert((l, r));
    }

    pub fn remove_edge(&mut self, l: usize, r: usize) -> bool {
        self.edges.remove(&(l, r))
    }

    pub fn has_edge(&self, l: usize, r: usize) -> bool {
        self.edges.contains(&(l, r))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

/// A set of bipartite edges, no two sharing an endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    /// Sorted by left vertex.
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn partner_of_left(&self, l: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == l).map(|p| p.1)
    }

    pub fn partner_of_right(&self, r: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == r).map(|p| p.0)
    }

    pub fn is_valid_in(&self, b: &BipartiteGraph) -> bool {
        let lefts: BTreeSet<usize> = self.pairs.iter().map(|p| p.0).collect();
        let rights: BTreeSet<usize> = self.pairs.iter().map(|p| p.1).collect();
        lefts.len() == self.len() && rights.len() == self.len() && self.pairs.iter().all(|&(l, r)| b.has_edge(l, r))
    }
}

/// The bipartite graph between the SCCs of `H[V']` and the vertices `I`:
/// `(Q, i)` is an edge iff some `q1 ∈ Q` has `(q1, i)` in `H` and some
/// `q2 ∈ Q` has `(i, q2)` in `H`.
pub fn build_bipartite(h: &CostGraph, initials: &[usize], others: &[usize]) -> Result<(SccDecomposition, BipartiteGraph)> {
    let n = h.num_vertices();
    let mut side = vec![0u8; n];
    for &i in initials {
        if i >= n {
            return Err(Error::UnknownVertex(format!("#{i}")));
        }
        side[i] |= 1;
    }
    for &v in others {
        if v >= n {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        if side[v] & 1 != 0 {
            return Err(Error::InvalidInput(format!("vertex `{}` is both initial and target", h.name(v))));
        }
        side[v] |= 2;
    }
    let adj = h.adjacency();
    let sccs = SccDecomposition::from_components(n, tarjan(&adj, |v| side[v] == 2));
    let left = sccs.named(h).iter().map(|c| format!("{{{}}}", c.join(","))).collect();
    let right = initials.iter().map(|&i| h.name(i).to_owned()).collect();
    let mut b = BipartiteGraph::new(left, right);
    for (ri, &i) in initials.iter().enumerate() {
        let mut into = vec![false; sccs.len()];
        for q in 0..n {
            if let Some(c) = sccs.component_of(q) {
                into[c] |= h.has_edge(q, i);
            }
        }
        for (v, _) in h.out_edges(i) {
            if let Some(c) = sccs.component_of(v) {
                if into[c] {
                    b.add_edge(c, ri);
                }
            }
        }
    }
    Ok((sccs, b))
}

/// Maximum-cardinality matching by Hopcroft–Karp.
pub fn max_matching(b: &BipartiteGraph) -> Matching {
    let (nl, nr) = (b.left.len(), b.right.len());
    let mut adj = vec![Vec::new(); nl];
    for (l, r) in b.edges() {
        adj[l].push(r);
    }
    const FREE: usize = usize::MAX;
    let mut match_l = vec![FREE; nl];
    let mut match_r = vec![FREE; nr];
    let mut dist = vec![0usize; nl];

    loop {
        // Layer the free left vertices' alternating paths.
        let mut queue = VecDeque::new();
        for l in 0..nl {
            if match_l[l] == FREE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let m = match_r[r];
                if m == FREE {
                    found = true;
                } else if dist[m] == usize::MAX {
                    dist[m] = dist[l] + 1;
                    queue.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        let mut progress = false;
        for l in 0..nl {
            if match_l[l] == FREE && augment(l, &adj, &mut match_l, &mut match_r, &mut dist) {
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }

    Matching { pairs: (0..nl).filter(|&l| match_l[l] != FREE).map(|l| (l, match_l[l])).collect() }
}

fn augment(l: usize, adj: &[Vec<usize>], match_l: &mut [usize], match_r: &mut [usize], dist: &mut [usize]) -> bool {
    for &r in &adj[l] {
        let m = match_r[r];
        let ok = m == usize::MAX || (dist[m] == dist[l] + 1 && augment(m, adj, match_l, match_r, dist));
        if ok {
            match_l[l] = r;
            match_r[r] = l;
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}
