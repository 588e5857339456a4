//! Product of a consumption MDP with resource levels `0..=cap`.
//!
//! Vertices are `(phase, state, level)`. Reload states ignore the arrival
//! level (leaving them always starts from `cap`), so each reload state is a
//! single vertex per phase. The optional second phase records whether a
//! designated `via` state has been visited.

use std::collections::VecDeque;

use crate::cmdp::{ActionId, ConsumptionMdp, CounterStrategy, StateId};

const UNREACHED: u32 = u32::MAX;
const VALUE_ITERATIONS: usize = 1000;

pub(crate) struct Arena<'m> {
    model: &'m ConsumptionMdp,
    cap: u32,
    via: Option<StateId>,
    target: StateId,
    phases: usize,
    /// First vertex of each state within a phase.
    offset: Vec<usize>,
    /// State of each vertex within a phase.
    state_of: Vec<u32>,
    per_phase: usize,
}

impl<'m> Arena<'m> {
    pub(crate) fn new(model: &'m ConsumptionMdp, cap: u32, target: StateId, via: Option<StateId>) -> Self {
        let mut offset = Vec::with_capacity(model.num_states());
        let mut state_of = Vec::new();
        for s in model.states() {
            offset.push(state_of.len());
            let width = if model.is_reload(s) { 1 } else { cap as usize + 1 };
            state_of.extend(std::iter::repeat_n(s.0 as u32, width));
        }
        let per_phase = state_of.len();
        Arena { model, cap, via, target, phases: if via.is_some() { 2 } else { 1 }, offset, state_of, per_phase }
    }

    pub(crate) fn len(&self) -> usize {
        self.per_phase * self.phases
    }

    pub(crate) fn cap(&self) -> u32 {
        self.cap
    }

    pub(crate) fn phases(&self) -> usize {
        self.phases
    }

    pub(crate) fn vertex(&self, phase: usize, s: StateId, level: u32) -> usize {
        let local = if self.model.is_reload(s) { 0 } else { level as usize };
        phase * self.per_phase + self.offset[s.0] + local
    }

    /// Phase a run is in when it starts in `s`.
    pub(crate) fn initial_phase(&self, s: StateId) -> usize {
        usize::from(self.via == Some(s))
    }

    fn decode(&self, v: usize) -> (usize, StateId, u32) {
        let (phase, local) = (v / self.per_phase, v % self.per_phase);
        let s = StateId(self.state_of[local] as usize);
        let level = if self.model.is_reload(s) { self.cap } else { (local - self.offset[s.0]) as u32 };
        (phase, s, level)
    }

    fn is_target(&self, v: usize) -> bool {
        let (phase, s, _) = self.decode(v);
        phase + 1 == self.phases && s == self.target
    }

    fn next_phase(&self, phase: usize, t: StateId) -> usize {
        if self.via == Some(t) {
            1
        } else {
            phase
        }
    }

    /// Calls `f` on every successor vertex and its probability; returns
    /// `false` if the action depletes.
    fn for_each_succ(&self, v: usize, a: ActionId, mut f: impl FnMut(usize, f64)) -> bool {
        let (phase, s, level) = self.decode(v);
        let row = self.model.row(s, a);
        let Some(next) = level.checked_sub(row.consumption) else {
            return false;
        };
        for &(t, p) in &row.successors {
            f(self.vertex(self.next_phase(phase, t), t, next), p);
        }
        true
    }

    fn depletes(&self, v: usize, a: ActionId) -> bool {
        let (_, s, level) = self.decode(v);
        level < self.model.consumption(s, a)
    }

    /// Calls `f(v, a)` for every vertex `v` and non-depleting action `a`
    /// with `w` among the successors.
    fn for_each_pred(&self, w: usize, mut f: impl FnMut(usize, ActionId)) {
        let (wphase, t, wlevel) = self.decode(w);
        let t_reload = self.model.is_reload(t);
        let phases: &[usize] = if self.via == Some(t) {
            if wphase == 1 {
                &[0, 1]
            } else {
                &[]
            }
        } else if wphase == 0 {
            &[0]
        } else {
            &[1]
        };
        for &(s, a) in self.model.predecessors(t) {
            let c = self.model.consumption(s, a);
            for &p in phases {
                if self.model.is_reload(s) {
                    if c <= self.cap && (t_reload || wlevel == self.cap - c) {
                        f(self.vertex(p, s, self.cap), a);
                    }
                } else if t_reload {
                    for l in c..=self.cap {
                        f(self.vertex(p, s, l), a);
                    }
                } else if let Some(l) = wlevel.checked_add(c).filter(|&l| l <= self.cap) {
                    f(self.vertex(p, s, l), a);
                }
            }
        }
    }
}

/// Sure-safe and almost-sure-reach regions of an arena.
pub(crate) struct Solution<'m> {
    arena: Arena<'m>,
    safe: Vec<bool>,
    win: Vec<bool>,
    rank: Vec<u32>,
    /// `v * |A| + a` is set when `a` can deplete from `v`.
    unsafe_action: Vec<bool>,
    /// Unsafe actions plus those that can leave the winning region.
    blocked: Vec<bool>,
}

pub(crate) fn solve(arena: Arena<'_>) -> Solution<'_> {
    let n = arena.len();
    let na = arena.model.num_actions();
    let mut blocked = vec![false; n * na];
    let mut good = vec![0u32; n];
    let mut safe = vec![true; n];
    let mut queue = Vec::new();

    for v in 0..n {
        for a in arena.model.actions() {
            if arena.depletes(v, a) {
                blocked[v * na + a.0] = true;
            } else {
                good[v] += 1;
            }
        }
        if good[v] == 0 {
            safe[v] = false;
            queue.push(v);
        }
    }
    // Attractor to depletion.
    while let Some(w) = queue.pop() {
        arena.for_each_pred(w, |v, a| {
            let k = v * na + a.0;
            if !blocked[k] {
                blocked[k] = true;
                good[v] -= 1;
                if good[v] == 0 && safe[v] {
                    safe[v] = false;
                    queue.push(v);
                }
            }
        });
    }
    let unsafe_action = blocked.clone();

    let targets: Vec<usize> = (0..n).filter(|&v| safe[v] && arena.is_target(v)).collect();
    let mut win = safe.clone();
    let mut rank = vec![UNREACHED; n];
    loop {
        rank.iter_mut().for_each(|r| *r = UNREACHED);
        let mut bfs: VecDeque<usize> = VecDeque::with_capacity(targets.len());
        for &t in &targets {
            rank[t] = 0;
            bfs.push_back(t);
        }
        while let Some(w) = bfs.pop_front() {
            let next = rank[w] + 1;
            arena.for_each_pred(w, |v, a| {
                if win[v] && rank[v] == UNREACHED && !blocked[v * na + a.0] {
                    rank[v] = next;
                    bfs.push_back(v);
                }
            });
        }
        let removed: Vec<usize> = (0..n).filter(|&v| win[v] && rank[v] == UNREACHED).collect();
        if removed.is_empty() {
            break;
        }
        for &w in &removed {
            win[w] = false;
        }
        for &w in &removed {
            arena.for_each_pred(w, |v, a| blocked[v * na + a.0] = true);
        }
    }

    Solution { arena, safe, win, rank, unsafe_action, blocked }
}

impl<'m> Solution<'m> {
    pub(crate) fn arena(&self) -> &Arena<'m> {
        &self.arena
    }

    pub(crate) fn wins(&self, s: StateId) -> bool {
        let a = &self.arena;
        self.win[a.vertex(a.initial_phase(s), s, a.cap)]
    }

    /// Expected steps to the target inside the winning region under the
    /// best non-blocked actions, by Gauss-Seidel value iteration started
    /// from the ranks.
    fn expected_steps(&self) -> Vec<f64> {
        let model = self.arena.model;
        let na = model.num_actions();
        let n = self.arena.len();
        let mut value: Vec<f64> = self.rank.iter().map(|&r| if r == UNREACHED { f64::INFINITY } else { r as f64 }).collect();
        let inner: Vec<usize> = (0..n).filter(|&v| self.win[v] && !self.arena.is_target(v)).collect();
        for _ in 0..VALUE_ITERATIONS {
            let mut change: f64 = 0.0;
            for &v in &inner {
                let mut best = f64::INFINITY;
                for a in model.actions().filter(|a| !self.blocked[v * na + a.0]) {
                    let mut total = 1.0;
                    self.arena.for_each_succ(v, a, |w, p| total += p * value[w]);
                    best = best.min(total);
                }
                if best.is_finite() {
                    change = change.max((best - value[v]).abs() / best.max(1.0));
                    value[v] = best;
                }
            }
            if change < 1e-6 {
                break;
            }
        }
        value
    }

    fn choice(&self, v: usize, value: &[f64]) -> Option<ActionId> {
        let model = self.arena.model;
        let na = model.num_actions();
        if self.win[v] && !self.arena.is_target(v) {
            // Only actions that can lower the rank keep reaching almost
            // sure; among those, the fewest expected steps.
            let r = self.rank[v];
            let mut best: Option<(ActionId, f64)> = None;
            for a in model.actions().filter(|a| !self.blocked[v * na + a.0]) {
                let (mut closer, mut expected) = (false, 0.0);
                self.arena.for_each_succ(v, a, |w, p| {
                    closer |= self.rank[w] < r;
                    expected += p * value[w];
                });
                if closer && best.is_none_or(|(_, b)| expected < b - 1e-9) {
                    best = Some((a, expected));
                }
            }
            best.map(|(a, _)| a)
        } else if self.safe[v] {
            model.actions().find(|&a| !self.unsafe_action[v * na + a.0])
        } else {
            None
        }
    }

    /// Counter strategy played while in `phase`: progress towards the
    /// target inside the winning region, any safe action elsewhere.
    pub(crate) fn strategy(&self, phase: usize) -> CounterStrategy {
        let a = &self.arena;
        let value = self.expected_steps();
        let mut out = CounterStrategy::empty(a.model.num_states(), a.cap);
        for s in a.model.states() {
            for l in 0..=a.cap {
                if let Some(act) = self.choice(a.vertex(phase, s, l), &value) {
                    out.set(s, l, act);
                }
            }
        }
        out
    }
}
