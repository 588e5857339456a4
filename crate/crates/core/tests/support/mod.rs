//! Random instance generators and brute-force reference implementations.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use mincap_core::{ConsumptionMdp, CostGraph, CounterStrategy, ModelDescription, StateId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct ModelShape {
    pub states: usize,
    pub actions: usize,
    pub max_cons: i64,
    pub min_cons: i64,
    pub max_support: usize,
    pub reload_prob: f64,
}

impl ModelShape {
    /// At most 4 states, 2 actions and consumption 2.
    pub fn tiny() -> Self {
        ModelShape { states: 4, actions: 2, max_cons: 2, min_cons: 0, max_support: 3, reload_prob: 0.5 }
    }
}

pub fn random_description(rng: &mut ChaCha8Rng, shape: &ModelShape) -> ModelDescription {
    let n = rng.random_range(1..=shape.states);
    let k = rng.random_range(1..=shape.actions);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let actions: Vec<String> = (0..k).map(|i| format!("a{i}")).collect();
    let reloads: Vec<String> = states.iter().filter(|_| rng.random_bool(shape.reload_prob)).cloned().collect();
    let mut d = ModelDescription::new(&states, &actions, &reloads);
    for s in &states {
        for a in &actions {
            let cons = rng.random_range(shape.min_cons..=shape.max_cons);
            let size = rng.random_range(1..=shape.max_support.min(n));
            let mut succ: Vec<&String> = states.iter().collect();
            succ.shuffle(rng);
            succ.truncate(size);
            let weights: Vec<f64> = succ.iter().map(|_| rng.random_range(1..=4) as f64).collect();
            let total: f64 = weights.iter().sum();
            let dist: Vec<(&str, f64)> = succ.iter().zip(&weights).map(|(t, w)| (t.as_str(), w / total)).collect();
            d = d.transition(s, a, cons, &dist);
        }
    }
    d
}

pub fn random_model(rng: &mut ChaCha8Rng, shape: &ModelShape) -> ConsumptionMdp {
    random_description(rng, shape).build().expect("generated models are well formed")
}

/// Product vertex: state and resource level, `None` for depletion.
type Vertex = (usize, Option<u32>);

/// Explicit product of a model with levels `0..=cap`. Levels at reload
/// states are stored as `cap`, since departure resets them anyway.
pub struct Product<'a> {
    model: &'a ConsumptionMdp,
    cap: u32,
}

impl<'a> Product<'a> {
    pub fn new(model: &'a ConsumptionMdp, cap: u32) -> Self {
        Product { model, cap }
    }

    fn arrive(&self, t: usize, level: u32) -> Vertex {
        if self.model.is_reload(StateId(t)) {
            (t, Some(self.cap))
        } else {
            (t, Some(level))
        }
    }

    pub fn start(&self, s: usize) -> Vertex {
        self.arrive(s, self.cap)
    }

    pub fn successors(&self, (s, level): Vertex, a: usize) -> Vec<Vertex> {
        let Some(level) = level else { return vec![(s, None)] };
        let st = StateId(s);
        let row = self.model.row(st, mincap_core::ActionId(a));
        let base = if self.model.is_reload(st) { self.cap } else { level };
        let cons = row.consumption;
        if cons > base {
            return row.successors.iter().map(|&(t, _)| (t.0, None)).collect();
        }
        row.successors.iter().map(|&(t, _)| self.arrive(t.0, base - cons)).collect()
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let mut out = Vec::new();
        for s in 0..self.model.num_states() {
            if self.model.is_reload(StateId(s)) {
                out.push((s, Some(self.cap)));
            } else {
                out.extend((0..=self.cap).map(|l| (s, Some(l))));
            }
        }
        out
    }

    /// Vertices from which some strategy never depletes.
    pub fn safe_set(&self) -> HashSet<Vertex> {
        let mut safe: HashSet<Vertex> = self.vertices().into_iter().collect();
        loop {
            let drop: Vec<Vertex> = safe
                .iter()
                .copied()
                .filter(|&v| {
                    !(0..self.model.num_actions()).any(|a| self.successors(v, a).iter().all(|w| safe.contains(w)))
                })
                .collect();
            if drop.is_empty() {
                return safe;
            }
            for v in drop {
                safe.remove(&v);
            }
        }
    }

    /// Vertices with some path to `target` (ignoring probabilities and safety).
    fn can_reach(&self, target: usize) -> HashSet<Vertex> {
        let mut reach: HashSet<Vertex> = self.vertices().into_iter().filter(|v| v.0 == target).collect();
        loop {
            let add: Vec<Vertex> = self
                .vertices()
                .into_iter()
                .filter(|v| !reach.contains(v))
                .filter(|&v| (0..self.model.num_actions()).any(|a| self.successors(v, a).iter().any(|w| reach.contains(w))))
                .collect();
            if add.is_empty() {
                return reach;
            }
            reach.extend(add);
        }
    }
}

/// Decides feasibility by enumerating positional strategies over the
/// product vertices reachable before the target. A strategy wins if no
/// chosen action can deplete, every reached target vertex can stay safe
/// forever, and from every vertex reached before the target the target is
/// still reachable in the induced chain.
pub fn brute_feasible(model: &ConsumptionMdp, cap: u32, source: usize, target: usize) -> bool {
    let p = Product::new(model, cap);
    let safe = p.safe_set();
    let init = p.start(source);
    if source == target {
        return safe.contains(&init);
    }
    let reach = p.can_reach(target);
    // Actions that can lead somewhere hopeless are never part of a winning strategy.
    let viable = |v: Vertex| -> Vec<usize> {
        (0..model.num_actions())
            .filter(|&a| {
                p.successors(v, a).iter().all(|&w| {
                    w.1.is_some() && reach.contains(&w) && (w.0 != target || safe.contains(&w))
                })
            })
            .collect()
    };
    let mut choice: HashMap<Vertex, usize> = HashMap::new();
    enumerate(&p, init, target, &viable, &mut choice)
}

fn reached(p: &Product, init: Vertex, target: usize, choice: &HashMap<Vertex, usize>) -> (Vec<Vertex>, Option<Vertex>) {
    let mut seen = HashSet::from([init]);
    let mut order = vec![init];
    let mut queue = VecDeque::from([init]);
    let mut open = None;
    while let Some(v) = queue.pop_front() {
        if v.0 == target {
            continue;
        }
        let Some(&a) = choice.get(&v) else {
            if open.is_none() {
                open = Some(v);
            }
            continue;
        };
        for w in p.successors(v, a) {
            if seen.insert(w) {
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    (order, open)
}

fn enumerate(
    p: &Product,
    init: Vertex,
    target: usize,
    viable: &dyn Fn(Vertex) -> Vec<usize>,
    choice: &mut HashMap<Vertex, usize>,
) -> bool {
    let (seen, open) = reached(p, init, target, choice);
    if let Some(v) = open {
        for a in viable(v) {
            choice.insert(v, a);
            if enumerate(p, init, target, viable, choice) {
                return true;
            }
        }
        choice.remove(&v);
        return false;
    }
    // Every reached vertex must keep a path to the target in the induced chain.
    let mut good: HashSet<Vertex> = seen.iter().copied().filter(|v| v.0 == target).collect();
    loop {
        let before = good.len();
        for &v in &seen {
            if !good.contains(&v) && p.successors(v, choice[&v]).iter().any(|w| good.contains(w)) {
                good.insert(v);
            }
        }
        if good.len() == before {
            break;
        }
    }
    seen.iter().all(|v| good.contains(v))
}

/// Least feasible capacity up to `limit`, by scanning upwards.
pub fn brute_min_cap(model: &ConsumptionMdp, source: usize, target: usize, limit: u32) -> Option<u32> {
    (0..=limit).find(|&c| brute_feasible(model, c, source, target))
}

/// Follows `strategy` through every reachable resource level and checks
/// that nothing depletes, that the strategy is defined wherever it is
/// needed, and that `target` is reached with probability one.
pub fn witness_is_valid(model: &ConsumptionMdp, strategy: &CounterStrategy, cap: u32, source: usize, target: usize) -> bool {
    let init = (source, cap);
    let mut seen = HashSet::from([init]);
    let mut edges: HashMap<(usize, u32), Vec<(usize, u32)>> = HashMap::new();
    let mut queue = VecDeque::from([init]);
    while let Some((s, l)) = queue.pop_front() {
        let Some(a) = strategy.action(StateId(s), l) else { return false };
        let row = model.row(StateId(s), a);
        let base = if model.is_reload(StateId(s)) { cap } else { l };
        if row.consumption > base {
            return false;
        }
        let next: Vec<(usize, u32)> = row.successors.iter().map(|&(t, _)| (t.0, base - row.consumption)).collect();
        for &w in &next {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
        edges.insert((s, l), next);
    }
    // Almost-sure reachability in a finite chain: every vertex met before
    // the target can still reach it.
    let mut before = HashSet::from([init]);
    let mut queue = VecDeque::from([init]);
    while let Some(v) = queue.pop_front() {
        if v.0 == target {
            continue;
        }
        for &w in &edges[&v] {
            if before.insert(w) {
                queue.push_back(w);
            }
        }
    }
    let mut good: HashSet<(usize, u32)> = before.iter().copied().filter(|v| v.0 == target).collect();
    loop {
        let n = good.len();
        for v in &before {
            if !good.contains(v) && edges[v].iter().any(|w| good.contains(w)) {
                good.insert(*v);
            }
        }
        if good.len() == n {
            break;
        }
    }
    before.iter().all(|v| good.contains(v))
}

/// Mutual reachability classes computed from the transitive closure.
#[allow(clippy::needless_range_loop)]
pub fn closure_sccs(n: usize, edges: &[(usize, usize)], include: &[bool]) -> Vec<Vec<usize>> {
    let mut r = vec![vec![false; n]; n];
    for v in 0..n {
        r[v][v] = true;
    }
    for &(u, v) in edges {
        if include[u] && include[v] {
            r[u][v] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    let mut done = vec![false; n];
    let mut out = Vec::new();
    for v in (0..n).filter(|&v| include[v]) {
        if done[v] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&w| include[w] && r[v][w] && r[w][v]).collect();
        for &w in &class {
            done[w] = true;
        }
        out.push(class);
    }
    out
}

fn edges_upto(g: &CostGraph, c: f64) -> Vec<(usize, usize)> {
    let n = g.num_vertices();
    let mut out = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if g.cost(u, v).is_some_and(|x| x <= c) {
                out.push((u, v));
            }
        }
    }
    out
}

fn all_costs(g: &CostGraph) -> Vec<f64> {
    let n = g.num_vertices();
    let mut costs: Vec<f64> = (0..n).flat_map(|u| (0..n).filter_map(move |v| g.cost(u, v))).collect();
    costs.sort_by(f64::total_cmp);
    costs.dedup();
    costs
}

fn with_singleton_loops(g: &CostGraph, base: Option<f64>, comps: &[Vec<usize>]) -> Option<f64> {
    let mut best = base;
    for c in comps.iter().filter(|c| c.len() == 1) {
        if let Some(x) = g.cost(c[0], c[0]) {
            best = Some(best.map_or(x, |b: f64| b.max(x)));
        }
    }
    best
}

/// Oracle for the decomposition search: scans every cost upwards for the
/// first threshold with at most `n` classes. Returns `(threshold, capacity)`.
pub fn scan_decomposition(g: &CostGraph, n: usize) -> Option<(Option<f64>, f64)> {
    let nv = g.num_vertices();
    let all = vec![true; nv];
    if nv <= n {
        let singles: Vec<Vec<usize>> = (0..nv).map(|v| vec![v]).collect();
        return Some((None, with_singleton_loops(g, None, &singles).unwrap_or(0.0)));
    }
    for c in all_costs(g) {
        let comps = closure_sccs(nv, &edges_upto(g, c), &all);
        if comps.len() <= n {
            return Some((Some(c), with_singleton_loops(g, Some(c), &comps).unwrap()));
        }
    }
    None
}

/// Size of a maximum matching, by trying every choice for every left vertex.
pub fn brute_matching(left: usize, right: usize, edge: &dyn Fn(usize, usize) -> bool) -> usize {
    fn go(l: usize, left: usize, right: usize, used: &mut Vec<bool>, edge: &dyn Fn(usize, usize) -> bool) -> usize {
        if l == left {
            return 0;
        }
        let mut best = go(l + 1, left, right, used, edge);
        for r in 0..right {
            if !used[r] && edge(l, r) {
                used[r] = true;
                best = best.max(1 + go(l + 1, left, right, used, edge));
                used[r] = false;
            }
        }
        best
    }
    go(0, left, right, &mut vec![false; right], edge)
}

/// Whether the classes of `g[others]` at threshold `c` can be matched to
/// distinct initials, each with an edge into and an edge out of its class.
pub fn matching_criterion(g: &CostGraph, initials: &[usize], c: f64) -> (bool, Vec<Vec<usize>>) {
    let nv = g.num_vertices();
    let include: Vec<bool> = (0..nv).map(|v| !initials.contains(&v)).collect();
    let comps = closure_sccs(nv, &edges_upto(g, c), &include);
    let ok_edge = |u: usize, v: usize| g.cost(u, v).is_some_and(|x| x <= c);
    let edge = |q: usize, r: usize| {
        let i = initials[r];
        comps[q].iter().any(|&a| ok_edge(a, i)) && comps[q].iter().any(|&b| ok_edge(i, b))
    };
    let size = brute_matching(comps.len(), initials.len(), &edge);
    (size == comps.len(), comps)
}

/// Oracle for the matching search. Returns `(threshold, capacity)`.
pub fn scan_matching(g: &CostGraph, initials: &[usize]) -> Option<(f64, f64)> {
    for c in all_costs(g) {
        let (ok, comps) = matching_criterion(g, initials, c);
        if ok {
            return Some((c, with_singleton_loops(g, Some(c), &comps).unwrap()));
        }
    }
    None
}

/// Every partition of `items` into at most `max_cells` nonempty cells.
pub fn partitions(items: &[usize], max_cells: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    fn go(items: &[usize], k: usize, max_cells: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k == items.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..cur.len() {
            cur[c].push(items[k]);
            go(items, k + 1, max_cells, cur, out);
            cur[c].pop();
        }
        if cur.len() < max_cells {
            cur.push(vec![items[k]]);
            go(items, k + 1, max_cells, cur, out);
            cur.pop();
        }
    }
    go(items, 0, max_cells, &mut Vec::new(), &mut out);
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Capacity matrix lookup with `None` as infinity.
pub type Matrix<'a> = &'a dyn Fn(usize, usize) -> Option<u32>;

fn worst(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    Some(a?.max(b?))
}

/// Cheapest cyclic tour of a cell; a singleton needs its self-loop.
pub fn cell_cost(cell: &[usize], m: Matrix) -> Option<u32> {
    if cell.len() == 1 {
        return m(cell[0], cell[0]);
    }
    permutations(&cell[1..])
        .into_iter()
        .filter_map(|rest| {
            let mut tour = vec![cell[0]];
            tour.extend(rest);
            (0..tour.len()).try_fold(0, |acc, k| worst(Some(acc), m(tour[k], tour[(k + 1) % tour.len()])))
        })
        .min()
}

/// Optimal allocation capacity over every partition into at most `agents` cells.
pub fn brute_allocation(targets: &[usize], agents: usize, m: Matrix) -> Option<u32> {
    partitions(targets, agents)
        .into_iter()
        .filter_map(|p| p.iter().try_fold(0, |acc, cell| worst(Some(acc), cell_cost(cell, m))))
        .min()
}

/// Optimal routing capacity over every partition and injective assignment;
/// an agent needs an entry and a return edge to its cell.
pub fn brute_routing(targets: &[usize], initials: &[usize], m: Matrix) -> Option<u32> {
    let mut best: Option<u32> = None;
    for p in partitions(targets, initials.len()) {
        let agent_cost = |cell: &[usize], i: usize| {
            let into = cell.iter().filter_map(|&q| m(i, q)).min();
            let back = cell.iter().filter_map(|&q| m(q, i)).min();
            worst(worst(cell_cost(cell, m), into), back)
        };
        fn assign(
            p: &[Vec<usize>],
            k: usize,
            initials: &[usize],
            used: &mut Vec<bool>,
            cost: &dyn Fn(&[usize], usize) -> Option<u32>,
        ) -> Option<u32> {
            if k == p.len() {
                return Some(0);
            }
            let mut best = None;
            for r in 0..initials.len() {
                if used[r] {
                    continue;
                }
                used[r] = true;
                let c = worst(cost(&p[k], initials[r]), assign(p, k + 1, initials, used, cost));
                used[r] = false;
                best = match (best, c) {
                    (None, c) => c,
                    (b, None) => b,
                    (Some(b), Some(c)) => Some(b.min(c)),
                };
            }
            best
        }
        let c = assign(&p, 0, initials, &mut vec![false; initials.len()], &agent_cost);
        best = match (best, c) {
            (None, c) => c,
            (b, None) => b,
            (Some(b), Some(c)) => Some(b.min(c)),
        };
    }
    best
}

/// Complete graph with integer costs in `1..=max_cost`; self-loops are
/// dropped with probability `loop_gap`.
pub fn random_cost_graph(rng: &mut ChaCha8Rng, n: usize, max_cost: u32, loop_gap: f64) -> CostGraph {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut g = CostGraph::new(&names).unwrap();
    for u in 0..n {
        for v in 0..n {
            if u == v && rng.random_bool(loop_gap) {
                continue;
            }
            g.set_edge(u, v, rng.random_range(1..=max_cost) as f64);
        }
    }
    g
}

/// Targets `t*` then initials `i*`, complete except between initials.
pub fn random_matching_graph(rng: &mut ChaCha8Rng, targets: usize, initials: usize, max_cost: u32) -> (CostGraph, Vec<usize>) {
    let mut names: Vec<String> = (0..targets).map(|i| format!("t{i}")).collect();
    names.extend((0..initials).map(|i| format!("i{i}")));
    let mut g = CostGraph::new(&names).unwrap();
    let n = targets + initials;
    for u in 0..n {
        for v in 0..n {
            if u >= targets && v >= targets {
                continue;
            }
            g.set_edge(u, v, rng.random_range(1..=max_cost) as f64);
        }
    }
    (g, (targets..n).collect())
}

/// Model with at least `targets` reload states and `initials` further states.
pub fn random_planning_model(
    rng: &mut ChaCha8Rng,
    targets: usize,
    initials: usize,
    extra: usize,
    min_cons: i64,
) -> (ConsumptionMdp, Vec<StateId>, Vec<StateId>) {
    let n = targets + initials + extra;
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let actions = ["a0".to_owned(), "a1".to_owned()];
    let reloads: Vec<String> = states[..targets].to_vec();
    let mut d = ModelDescription::new(&states, &actions, &reloads);
    for s in &states {
        for a in &actions {
            let cons = rng.random_range(min_cons..=3);
            let size = rng.random_range(1..=2usize);
            let mut succ: Vec<&String> = states.iter().collect();
            succ.shuffle(rng);
            succ.truncate(size);
            let p = 1.0 / size as f64;
            let dist: Vec<(&str, f64)> = succ.iter().map(|t| (t.as_str(), p)).collect();
            d = d.transition(s, a, cons, &dist);
        }
    }
    let model = d.build().unwrap();
    let ts = (0..targets).map(StateId).collect();
    let is = (targets..targets + initials).map(StateId).collect();
    (model, ts, is)
}
