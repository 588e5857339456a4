//! Grid-world consumption MDPs: a `K x K` grid, eight compass directions,
//! cheap stochastic (weak) and costly deterministic (strong) moves, and an
//! optional seeded current field that makes moves with the current cheaper
//! and moves against it dearer.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cmdp::{ConsumptionMdp, ModelDescription};
use crate::costgraph::CostGraph;
use crate::error::{Error, Result};

/// `(x, y)` with `1 <= x, y <= K`.
pub type Cell = (u32, u32);

pub const DIRECTIONS: [(&str, i32, i32); 8] = [
    ("N", 0, 1),
    ("NE", 1, 1),
    ("E", 1, 0),
    ("SE", 1, -1),
    ("S", 0, -1),
    ("SW", -1, -1),
    ("W", -1, 0),
    ("NW", -1, 1),
];

fn default_weak_success_prob() -> f64 {
    0.6
}

fn default_weak_cons() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(alias = "K")]
    pub size: u32,
    #[serde(default)]
    pub reload_cells: Vec<Cell>,
    #[serde(default)]
    pub target_cells: Vec<Cell>,
    #[serde(default)]
    pub initial_cells: Vec<Cell>,
    #[serde(default = "default_weak_success_prob")]
    pub weak_success_prob: f64,
    /// No currents when absent.
    #[serde(default)]
    pub current_seed: Option<u64>,
    #[serde(default = "default_weak_cons")]
    pub base_weak_cons: u32,
    /// Twice the weak consumption when absent.
    #[serde(default)]
    pub base_strong_cons: Option<u32>,
}

impl GridSpec {
    pub fn new(size: u32) -> Self {
        GridSpec {
            size,
            reload_cells: Vec::new(),
            target_cells: Vec::new(),
            initial_cells: Vec::new(),
            weak_success_prob: default_weak_success_prob(),
            current_seed: None,
            base_weak_cons: default_weak_cons(),
            base_strong_cons: None,
        }
    }

    pub fn strong_cons(&self) -> u32 {
        self.base_strong_cons.unwrap_or(2 * self.base_weak_cons)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GridSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.size == 0 {
            return bad("grid size must be positive".into());
        }
        if !(self.weak_success_prob > 0.0 && self.weak_success_prob <= 1.0) {
            return bad(format!("weak_success_prob {} is not in (0, 1]", self.weak_success_prob));
        }
        for (what, cells) in
            [("reload", &self.reload_cells), ("target", &self.target_cells), ("initial", &self.initial_cells)]
        {
            let mut seen = BTreeSet::new();
            for &c in cells {
                if !self.contains(c) {
                    return bad(format!("{what} cell ({}, {}) is outside the {k}x{k} grid", c.0, c.1, k = self.size));
                }
                if !seen.insert(c) {
                    return bad(format!("{what} cell ({}, {}) listed twice", c.0, c.1));
                }
            }
        }
        let reloads: BTreeSet<Cell> = self.reload_cells.iter().copied().collect();
        if let Some(t) = self.target_cells.iter().find(|t| !reloads.contains(t)) {
            return bad(format!("target cell ({}, {}) is not a reload cell", t.0, t.1));
        }
        Ok(())
    }

    /// Seeded random layout: distinct target and initial cells, every
    /// target a reload, plus `max(size / 3, 1)` extra reload stations.
    /// Currents use the same seed when enabled.
    pub fn random_instance(size: u32, targets: usize, initials: usize, seed: u64, currents: bool) -> Result<Self> {
        let stations = (size as usize / 3).max(1);
        let cells_needed = targets + initials + stations;
        if size == 0 || cells_needed > (size as usize).pow(2) {
            return Err(Error::InvalidInput(format!(
                "a {size}x{size} grid cannot hold {targets} targets, {initials} initials and {stations} stations"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells: Vec<Cell> = (1..=size).flat_map(|x| (1..=size).map(move |y| (x, y))).collect();
        cells.shuffle(&mut rng);
        let mut spec = GridSpec::new(size);
        spec.target_cells = cells[..targets].to_vec();
        spec.initial_cells = cells[targets..targets + initials].to_vec();
        spec.reload_cells =
            cells[..targets].iter().chain(&cells[targets + initials..cells_needed]).copied().collect();
        spec.current_seed = currents.then_some(seed);
        Ok(spec)
    }

    pub fn contains(&self, (x, y): Cell) -> bool {
        (1..=self.size).contains(&x) && (1..=self.size).contains(&y)
    }

    fn step(&self, (x, y): Cell, (dx, dy): (i32, i32)) -> Cell {
        let k = self.size as i64;
        ((x as i64 + dx as i64).clamp(1, k) as u32, (y as i64 + dy as i64).clamp(1, k) as u32)
    }
}

pub fn cell_name((x, y): Cell) -> String {
    format!("{x}_{y}")
}

pub fn parse_cell(name: &str) -> Option<Cell> {
    let (x, y) = name.split_once('_')?;
    Some((x.parse().ok()?, y.parse().ok()?))
}

pub fn action_names() -> Vec<String> {
    ["weak", "strong"]
        .iter()
        .flat_map(|class| DIRECTIONS.iter().map(move |(d, _, _)| format!("{class}_{d}")))
        .collect()
}

/// Smooth vector field from a few seeded plane waves, scaled to unit peak.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    size: u32,
    /// Row-major by `y`, then `x`.
    vectors: Vec<(f64, f64)>,
}

impl CurrentField {
    pub fn generate(size: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves: Vec<[f64; 6]> = (0..3)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.05..0.4),
                    rng.random_range(0.05..0.4),
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.0..std::f64::consts::TAU),
                ]
            })
            .collect();
        let mut vectors = Vec::with_capacity((size * size) as usize);
        for y in 1..=size {
            for x in 1..=size {
                let (mut u, mut v) = (0.0, 0.0);
                for [au, av, kx, ky, pu, pv] in &waves {
                    let (xf, yf) = (x as f64, y as f64);
                    u += au * (kx * xf + ky * yf + pu).sin();
                    v += av * (ky * xf - kx * yf + pv).sin();
                }
                vectors.push((u, v));
            }
        }
        let peak = vectors.iter().map(|&(u, v)| u.hypot(v)).fold(0.0, f64::max);
        if peak > 0.0 {
            for w in &mut vectors {
                *w = (w.0 / peak, w.1 / peak);
            }
        }
        CurrentField { size, vectors }
    }

    pub fn at(&self, (x, y): Cell) -> (f64, f64) {
        self.vectors[((y - 1) * self.size + (x - 1)) as usize]
    }

    /// -1 when moving along the current, +1 against it, 0 otherwise.
    pub fn modulation(&self, cell: Cell, (dx, dy): (i32, i32)) -> i32 {
        let (u, v) = self.at(cell);
        let norm = ((dx * dx + dy * dy) as f64).sqrt();
        let along = (u * dx as f64 + v * dy as f64) / norm;
        if along > 0.4 {
            -1
        } else if along < -0.4 {
            1
        } else {
            0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,u,v\n");
        for y in 1..=self.size {
            for x in 1..=self.size {
                let (u, v) = self.at((x, y));
                writeln!(out, "{x},{y},{u:.6},{v:.6}").unwrap();
            }
        }
        out
    }
}

fn field(spec: &GridSpec) -> Option<CurrentField> {
    spec.current_seed.map(|seed| CurrentField::generate(spec.size, seed))
}

fn modulated(base: u32, m: i32) -> u32 {
    match m {
        m if m < 0 => base.saturating_sub(1).max(1).min(base),
        m if m > 0 => base + 1,
        _ => base,
    }
}

pub fn current_field_csv(spec: &GridSpec) -> Option<String> {
    field(spec).map(|f| f.to_csv())
}

pub fn gen_grid(spec: &GridSpec) -> Result<ConsumptionMdp> {
    grid_description(spec)?.build()
}

pub fn grid_description(spec: &GridSpec) -> Result<ModelDescription> {
    spec.validate()?;
    let k = spec.size;
    let currents = field(spec);
    let cells: Vec<Cell> = (1..=k).flat_map(|y| (1..=k).map(move |x| (x, y))).collect();
    let states: Vec<String> = cells.iter().map(|&c| cell_name(c)).collect();
    let reloads: Vec<String> = spec.reload_cells.iter().map(|&c| cell_name(c)).collect();
    let actions = action_names();
    let mut desc = ModelDescription::new(&states, &actions, &reloads);
    let p = spec.weak_success_prob;
    for &c in &cells {
        let from = cell_name(c);
        for (d, &(name, dx, dy)) in DIRECTIONS.iter().enumerate() {
            let m = currents.as_ref().map_or(0, |f| f.modulation(c, (dx, dy)));
            let intended = cell_name(spec.step(c, (dx, dy)));
            let strong = format!("strong_{name}");
            desc = desc.transition(&from, &strong, i64::from(modulated(spec.strong_cons(), m)), &[(&intended, 1.0)]);

            let weak = format!("weak_{name}");
            let cons = i64::from(modulated(spec.base_weak_cons, m));
            if p >= 1.0 {
                desc = desc.transition(&from, &weak, cons, &[(&intended, 1.0)]);
            } else {
                let (_, lx, ly) = DIRECTIONS[(d + 7) % 8];
                let (_, rx, ry) = DIRECTIONS[(d + 1) % 8];
                let left = cell_name(spec.step(c, (lx, ly)));
                let right = cell_name(spec.step(c, (rx, ry)));
                let side = (1.0 - p) / 2.0;
                desc = desc.transition(&from, &weak, cons, &[(&intended, p), (&left, side), (&right, side)]);
            }
        }
    }
    Ok(desc)
}

/// Cost of a Chebyshev-greedy strong-move path from `s` to `t` (diagonal
/// steps first), each step costing the strong base consumption adjusted by
/// the current.
pub fn heuristic_cost(spec: &GridSpec, s: Cell, t: Cell) -> f64 {
    let currents = field(spec);
    heuristic_with(spec, currents.as_ref(), s, t)
}

fn heuristic_with(spec: &GridSpec, currents: Option<&CurrentField>, s: Cell, t: Cell) -> f64 {
    let mut c = s;
    let mut total = 0u64;
    while c != t {
        let dir = ((t.0 as i64 - c.0 as i64).signum() as i32, (t.1 as i64 - c.1 as i64).signum() as i32);
        let m = currents.map_or(0, |f| f.modulation(c, dir));
        total += u64::from(modulated(spec.strong_cons(), m).max(1));
        c = spec.step(c, dir);
    }
    total as f64
}

/// Routing-shaped graph over target and initial cells with heuristic costs:
/// every pair except initial-to-initial. With no initials, the complete
/// graph on the targets.
pub fn heuristic_graph(spec: &GridSpec, targets: &[Cell], initials: &[Cell]) -> Result<CostGraph> {
    let currents = field(spec);
    let all: Vec<Cell> = targets.iter().chain(initials).copied().collect();
    for &c in &all {
        if !spec.contains(c) {
            return Err(Error::InvalidInput(format!("cell ({}, {}) is outside the grid", c.0, c.1)));
        }
    }
    let names: Vec<String> = all.iter().map(|&c| cell_name(c)).collect();
    let mut g = CostGraph::new(&names)?;
    let nt = targets.len();
    for (u, &a) in all.iter().enumerate() {
        for (v, &b) in all.iter().enumerate() {
            if u >= nt && v >= nt {
                continue;
            }
            g.set_edge(u, v, heuristic_with(spec, currents.as_ref(), a, b));
        }
    }
    Ok(g)
}
