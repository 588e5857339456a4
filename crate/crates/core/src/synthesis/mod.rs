//! Minimal capacity for safe almost-sure reachability.
//!
//! A capacity `cap` is feasible for `source -> target` when some strategy
//! never depletes the resource from `source` and reaches `target` with
//! probability one. Reaching is checked from the first state on, so a run
//! that starts in `target` only has to stay safe.

mod arena;

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmdp::{ActionId, ConsumptionMdp, CounterStrategy, Policy, StateId};
use crate::error::{Error, Result};
use arena::{solve, Arena, Solution};

/// Outcome of a minimal-capacity query; `value` is `None` when no capacity suffices.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub value: Option<u32>,
    pub witness: Option<CounterStrategy>,
}

impl CapacityResult {
    pub fn is_feasible(&self) -> bool {
        self.value.is_some()
    }
}

/// Capacity above which more capacity never helps: `|S| * γ_max`.
pub fn capacity_upper_bound(model: &ConsumptionMdp) -> u32 {
    (model.num_states() as u32).saturating_mul(model.max_consumption())
}

pub fn feasible(model: &ConsumptionMdp, capacity: u32, source: StateId, target: StateId) -> Result<bool> {
    model.check_state(source)?;
    model.check_state(target)?;
    Ok(solve(Arena::new(model, capacity, target, None)).wins(source))
}

/// Witness for `source -> target` at a fixed capacity, if that capacity is feasible.
pub fn witness_at(
    model: &ConsumptionMdp,
    capacity: u32,
    source: StateId,
    target: StateId,
) -> Result<Option<CounterStrategy>> {
    model.check_state(source)?;
    model.check_state(target)?;
    let sol = solve(Arena::new(model, capacity, target, None));
    Ok(sol.wins(source).then(|| sol.strategy(0)))
}

/// Least `c` in `0..=ub` with `feasible(c)`, assuming monotonicity.
///
/// Probes 0, 1, 2, 4, ... and then bisects, so small answers stay cheap even
/// when `ub` is large.
fn least_feasible(ub: u32, mut feasible: impl FnMut(u32) -> bool) -> Option<u32> {
    if feasible(0) {
        return Some(0);
    }
    let mut lo = 0; // infeasible
    let mut hi = 1u32;
    loop {
        if hi >= ub {
            if !feasible(ub) {
                return None;
            }
            hi = ub;
            break;
        }
        if feasible(hi) {
            break;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

pub fn min_cap(model: &ConsumptionMdp, source: StateId, target: StateId) -> Result<CapacityResult> {
    model.check_state(source)?;
    model.check_state(target)?;
    let mut cache: HashMap<u32, Solution<'_>> = HashMap::new();
    let value = least_feasible(capacity_upper_bound(model), |c| {
        cache.entry(c).or_insert_with(|| solve(Arena::new(model, c, target, None))).wins(source)
    });
    let witness = value.map(|c| cache[&c].strategy(0));
    Ok(CapacityResult { value, witness })
}

/// `MinCap` for every `(row, col)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Row-major; `None` is infeasible.
    pub values: Vec<Option<u32>>,
}

impl CapacityMatrix {
    pub fn get(&self, row: usize, col: usize) -> Option<u32> {
        self.values[row * self.cols.len() + col]
    }

    pub fn get_named(&self, row: &str, col: &str) -> Option<Option<u32>> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        Some(self.get(r, c))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(r);
            for j in 0..self.cols.len() {
                match self.get(i, j) {
                    Some(v) => write!(out, ",{v}").unwrap(),
                    None => out.push_str(",INF"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix".into()))?;
        let cols: Vec<String> = header.split(',').skip(1).map(|c| c.trim().to_owned()).collect();
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let mut cells = line.split(',').map(str::trim);
            rows.push(cells.next().unwrap_or_default().to_owned());
            let before = values.len();
            for cell in cells {
                values.push(match cell {
                    "INF" => None,
                    v => Some(v.parse().map_err(|_| Error::Parse(format!("bad matrix entry `{v}`")))?),
                });
            }
            if values.len() - before != cols.len() {
                return Err(Error::Parse(format!("row `{}` has the wrong number of entries", rows.last().unwrap())));
            }
        }
        Ok(CapacityMatrix { rows, cols, values })
    }
}

/// Computes `min_cap(model, r, c)` for all pairs, one column at a time in
/// parallel; solved arenas are shared by the entries of a column.
pub fn min_cap_matrix(model: &ConsumptionMdp, rows: &[StateId], cols: &[StateId]) -> Result<CapacityMatrix> {
    for &s in rows.iter().chain(cols) {
        model.check_state(s)?;
    }
    let ub = capacity_upper_bound(model);
    let columns: Vec<Vec<Option<u32>>> = cols
        .par_iter()
        .map(|&target| {
            let mut cache: HashMap<u32, Solution<'_>> = HashMap::new();
            rows.iter()
                .map(|&source| {
                    least_feasible(ub, |c| {
                        cache.entry(c).or_insert_with(|| solve(Arena::new(model, c, target, None))).wins(source)
                    })
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(rows.len() * cols.len());
    for i in 0..rows.len() {
        for col in &columns {
            values.push(col[i]);
        }
    }
    Ok(CapacityMatrix {
        rows: rows.iter().map(|&s| model.state_name(s).to_owned()).collect(),
        cols: cols.iter().map(|&s| model.state_name(s).to_owned()).collect(),
        values,
    })
}

/// Two counter strategies switched on the first visit to `via`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWitness {
    pub via: StateId,
    pub before: CounterStrategy,
    pub after: CounterStrategy,
    visited: bool,
}

impl SequenceWitness {
    pub fn capacity(&self) -> u32 {
        self.before.capacity()
    }
}

impl Policy for SequenceWitness {
    fn reset(&mut self) {
        self.visited = false;
    }

    fn choose(&mut self, state: StateId, level: u32) -> Option<ActionId> {
        self.visited |= state == self.via;
        if self.visited {
            self.after.action(state, level)
        } else {
            self.before.action(state, level)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceResult {
    pub value: Option<u32>,
    pub witness: Option<SequenceWitness>,
}

/// Least capacity to reach `via` and, from there on, `then`, both almost surely.
pub fn min_cap_sequence(
    model: &ConsumptionMdp,
    source: StateId,
    via: StateId,
    then: StateId,
) -> Result<SequenceResult> {
    for s in [source, via, then] {
        model.check_state(s)?;
    }
    let mut cache: HashMap<u32, Solution<'_>> = HashMap::new();
    let value = least_feasible(capacity_upper_bound(model), |c| {
        cache.entry(c).or_insert_with(|| solve(Arena::new(model, c, then, Some(via)))).wins(source)
    });
    let witness = value.map(|c| {
        let sol = &cache[&c];
        debug_assert_eq!(sol.arena().phases(), 2);
        debug_assert_eq!(sol.arena().cap(), c);
        SequenceWitness { via, before: sol.strategy(0), after: sol.strategy(1), visited: false }
    });
    Ok(SequenceResult { value, witness })
}
