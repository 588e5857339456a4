use super::CostGraph;

const UNSET: usize = usize::MAX;

/// Maximal strongly connected components, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccDecomposition {
    components: Vec<Vec<usize>>,
    /// `None` for vertices outside the decomposed set.
    component_of: Vec<Option<usize>>,
}

impl SccDecomposition {
    pub(crate) fn from_components(n: usize, mut components: Vec<Vec<usize>>) -> Self {
        for c in &mut components {
            c.sort_unstable();
        }
        components.sort_unstable_by_key(|c| c[0]);
        let mut component_of = vec![None; n];
        for (i, c) in components.iter().enumerate() {
            for &v in c {
                component_of[v] = Some(i);
            }
        }
        SccDecomposition { components, component_of }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[usize] {
        &self.components[i]
    }

    pub fn component_of(&self, v: usize) -> Option<usize> {
        self.component_of.get(v).copied().flatten()
    }

    /// Edges of `g` with both endpoints in component `i`.
    pub fn internal_edges(&self, g: &CostGraph, i: usize) -> Vec<(usize, usize, f64)> {
        self.components[i]
            .iter()
            .flat_map(|&u| g.out_edges(u).map(move |(v, c)| (u, v, c)))
            .filter(|&(_, v, _)| self.component_of(v) == Some(i))
            .collect()
    }

    pub fn named(&self, g: &CostGraph) -> Vec<Vec<String>> {
        self.components.iter().map(|c| c.iter().map(|&v| g.name(v).to_owned()).collect()).collect()
    }
}

pub fn scc_decompose(g: &CostGraph) -> SccDecomposition {
    let n = g.num_vertices();
    SccDecomposition::from_components(n, tarjan(&g.adjacency(), |_| true))
}

/// Decomposition of `G[V']`; vertices outside `V'` get no component.
pub fn scc_decompose_within(g: &CostGraph, vertices: &[usize]) -> SccDecomposition {
    let n = g.num_vertices();
    let mut inside = vec![false; n];
    for &v in vertices {
        inside[v] = true;
    }
    SccDecomposition::from_components(n, tarjan(&g.adjacency(), |v| inside[v]))
}

/// Tarjan's algorithm with an explicit stack, restricted to vertices
/// accepted by `include`.
pub(crate) fn tarjan(adj: &[Vec<usize>], include: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![UNSET; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut frames: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != UNSET || !include(root) {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.1 < adj[v].len() {
                let w = adj[v][frame.1];
                frame.1 += 1;
                if !include(w) {
                    continue;
                }
                if index[w] == UNSET {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                out.push(comp);
            }
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
        }
    }
    out
}
