use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of each outgoing distribution.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Outcome of playing one action in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionRow {
    pub consumption: u32,
    /// Support of the distribution, sorted by state, probabilities > 0.
    pub successors: Vec<(StateId, f64)>,
}

/// A consumption MDP with dense state and action indices.
///
/// Every value of this type satisfies the model invariants: each
/// `(state, action)` pair has a row, each row is a probability distribution,
/// and consumptions are non-negative. Build one from a [`ModelDescription`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionMdp {
    states: Vec<String>,
    actions: Vec<String>,
    reload: Vec<bool>,
    rows: Vec<ActionRow>,
    state_lookup: HashMap<String, StateId>,
    action_lookup: HashMap<String, ActionId>,
    /// For each state `t`, the `(s, a)` pairs with `t` in the support of `Δ(s, a)`.
    predecessors: Vec<Vec<(StateId, ActionId)>>,
    max_consumption: u32,
}

impl ConsumptionMdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).map(StateId)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len()).map(ActionId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a.0]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn state(&self, name: &str) -> Result<StateId> {
        self.state_lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_owned()))
    }

    pub fn action(&self, name: &str) -> Result<ActionId> {
        self.action_lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown action `{name}`")))
    }

    pub fn is_reload(&self, s: StateId) -> bool {
        self.reload[s.0]
    }

    pub fn reloads(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&s| self.is_reload(s))
    }

    pub fn row(&self, s: StateId, a: ActionId) -> &ActionRow {
        &self.rows[s.0 * self.actions.len() + a.0]
    }

    pub fn consumption(&self, s: StateId, a: ActionId) -> u32 {
        self.row(s, a).consumption
    }

    pub fn probability(&self, s: StateId, a: ActionId, t: StateId) -> f64 {
        self.row(s, a)
            .successors
            .iter()
            .find(|(u, _)| *u == t)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn predecessors(&self, t: StateId) -> &[(StateId, ActionId)] {
        &self.predecessors[t.0]
    }

    /// Largest consumption of any action, `γ_max`.
    pub fn max_consumption(&self) -> u32 {
        self.max_consumption
    }

    pub fn check_state(&self, s: StateId) -> Result<()> {
        if s.0 < self.states.len() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("state index {} out of range", s.0)))
        }
    }

    pub fn to_description(&self) -> ModelDescription {
        let mut transitions = Vec::with_capacity(self.rows.len());
        for s in self.states() {
            for a in self.actions() {
                let row = self.row(s, a);
                transitions.push(TransitionDescription {
                    from: self.state_name(s).to_owned(),
                    action: self.action_name(a).to_owned(),
                    cons: i64::from(row.consumption),
                    dist: row
                        .successors
                        .iter()
                        .map(|&(t, p)| Outcome { to: self.state_name(t).to_owned(), p })
                        .collect(),
                });
            }
        }
        ModelDescription {
            states: self.states.clone(),
            actions: self.actions.clone(),
            reloads: self.reloads().map(|s| self.state_name(s).to_owned()).collect(),
            transitions,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        ModelDescription::from_json(text)?.build()
    }

    pub fn to_json(&self) -> String {
        self.to_description().to_json()
    }
}

/// Serialized form of a consumption MDP.
///
/// ```json
/// { "states": ["s", "r"], "actions": ["a"], "reloads": ["r"],
///   "transitions": [ { "from": "s", "action": "a", "cons": 2,
///                      "dist": [ { "to": "r", "p": 1.0 } ] } ] }
/// ```
///
/// The description may be malformed; [`validate_cmdp`] lists every problem
/// and [`ModelDescription::build`] refuses to build from a malformed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelDescription {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub reloads: Vec<String>,
    pub transitions: Vec<TransitionDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDescription {
    pub from: String,
    pub action: String,
    pub cons: i64,
    pub dist: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub to: String,
    pub p: f64,
}

impl ModelDescription {
    pub fn new<S: AsRef<str>>(states: &[S], actions: &[S], reloads: &[S]) -> Self {
        let own = |v: &[S]| v.iter().map(|x| x.as_ref().to_owned()).collect();
        ModelDescription {
            states: own(states),
            actions: own(actions),
            reloads: own(reloads),
            transitions: Vec::new(),
        }
    }

    /// Adds the row `Δ(from, action)` with consumption `cons`.
    pub fn transition(mut self, from: &str, action: &str, cons: i64, dist: &[(&str, f64)]) -> Self {
        self.transitions.push(TransitionDescription {
            from: from.to_owned(),
            action: action.to_owned(),
            cons,
            dist: dist.iter().map(|&(to, p)| Outcome { to: to.to_owned(), p }).collect(),
        });
        self
    }

    /// Adds the same row for every listed action.
    pub fn transitions_for(mut self, from: &str, actions: &[&str], cons: i64, dist: &[(&str, f64)]) -> Self {
        for a in actions {
            self = self.transition(from, a, cons, dist);
        }
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model description serializes")
    }

    pub fn build(&self) -> Result<ConsumptionMdp> {
        let report = validate_cmdp(self);
        if !report.is_empty() {
            return Err(Error::InvalidModel(report));
        }

        let state_lookup: HashMap<String, StateId> =
            self.states.iter().enumerate().map(|(i, n)| (n.clone(), StateId(i))).collect();
        let action_lookup: HashMap<String, ActionId> =
            self.actions.iter().enumerate().map(|(i, n)| (n.clone(), ActionId(i))).collect();

        let n_actions = self.actions.len();
        let mut rows: Vec<Option<ActionRow>> = vec![None; self.states.len() * n_actions];
        for tr in &self.transitions {
            let s = state_lookup[&tr.from];
            let a = action_lookup[&tr.action];
            let mut merged: BTreeMap<StateId, f64> = BTreeMap::new();
            for o in &tr.dist {
                if o.p > 0.0 {
                    *merged.entry(state_lookup[&o.to]).or_insert(0.0) += o.p;
                }
            }
            rows[s.0 * n_actions + a.0] = Some(ActionRow {
                consumption: tr.cons as u32,
                successors: merged.into_iter().collect(),
            });
        }
        let rows: Vec<ActionRow> = rows.into_iter().map(|r| r.expect("validated: total")).collect();

        let mut reload = vec![false; self.states.len()];
        for r in &self.reloads {
            reload[state_lookup[r].0] = true;
        }

        let mut predecessors = vec![Vec::new(); self.states.len()];
        for (idx, row) in rows.iter().enumerate() {
            let s = StateId(idx / n_actions);
            let a = ActionId(idx % n_actions);
            for &(t, _) in &row.successors {
                predecessors[t.0].push((s, a));
            }
        }
        let max_consumption = rows.iter().map(|r| r.consumption).max().unwrap_or(0);

        Ok(ConsumptionMdp {
            states: self.states.clone(),
            actions: self.actions.clone(),
            reload,
            rows,
            state_lookup,
            action_lookup,
            predecessors,
            max_consumption,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateState(String),
    DuplicateAction(String),
    UnknownState { context: String, name: String },
    UnknownAction { context: String, name: String },
    DuplicateRow { state: String, action: String },
    MissingRow { state: String, action: String },
    NegativeConsumption { state: String, action: String, cons: i64 },
    ConsumptionTooLarge { state: String, action: String, cons: i64 },
    ProbabilityOutOfRange { state: String, action: String, to: String, p: f64 },
    RowSum { state: String, action: String, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateState(s) => write!(f, "duplicate state `{s}`"),
            Violation::DuplicateAction(a) => write!(f, "duplicate action `{a}`"),
            Violation::UnknownState { context, name } => write!(f, "{context}: unknown state `{name}`"),
            Violation::UnknownAction { context, name } => write!(f, "{context}: unknown action `{name}`"),
            Violation::DuplicateRow { state, action } => {
                write!(f, "transition ({state}, {action}) defined more than once")
            }
            Violation::MissingRow { state, action } => {
                write!(f, "transition ({state}, {action}) is missing")
            }
            Violation::NegativeConsumption { state, action, cons } => {
                write!(f, "transition ({state}, {action}) has negative consumption {cons}")
            }
            Violation::ConsumptionTooLarge { state, action, cons } => {
                write!(f, "transition ({state}, {action}) consumption {cons} exceeds u32")
            }
            Violation::ProbabilityOutOfRange { state, action, to, p } => {
                write!(f, "transition ({state}, {action}) -> {to} has probability {p} outside [0, 1]")
            }
            Violation::RowSum { state, action, sum } => {
                write!(f, "transition ({state}, {action}) probabilities sum to {sum}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every violation of the model invariants; empty iff well-formed.
pub fn validate_cmdp(model: &ModelDescription) -> ValidationReport {
    let mut out = Vec::new();

    let mut states: HashMap<&str, usize> = HashMap::new();
    for (i, s) in model.states.iter().enumerate() {
        if states.insert(s, i).is_some() {
            out.push(Violation::DuplicateState(s.clone()));
        }
    }
    let mut actions: HashMap<&str, usize> = HashMap::new();
    for (i, a) in model.actions.iter().enumerate() {
        if actions.insert(a, i).is_some() {
            out.push(Violation::DuplicateAction(a.clone()));
        }
    }
    for r in &model.reloads {
        if !states.contains_key(r.as_str()) {
            out.push(Violation::UnknownState { context: "reloads".into(), name: r.clone() });
        }
    }

    let mut seen = vec![false; model.states.len() * model.actions.len()];
    for tr in &model.transitions {
        let context = format!("transition ({}, {})", tr.from, tr.action);
        let s = states.get(tr.from.as_str()).copied();
        let a = actions.get(tr.action.as_str()).copied();
        if s.is_none() {
            out.push(Violation::UnknownState { context: context.clone(), name: tr.from.clone() });
        }
        if a.is_none() {
            out.push(Violation::UnknownAction { context: context.clone(), name: tr.action.clone() });
        }
        if let (Some(s), Some(a)) = (s, a) {
            let slot = &mut seen[s * model.actions.len() + a];
            if *slot {
                out.push(Violation::DuplicateRow { state: tr.from.clone(), action: tr.action.clone() });
            }
            *slot = true;
        }
        if tr.cons < 0 {
            out.push(Violation::NegativeConsumption {
                state: tr.from.clone(),
                action: tr.action.clone(),
                cons: tr.cons,
            });
        } else if tr.cons > i64::from(u32::MAX) {
            out.push(Violation::ConsumptionTooLarge {
                state: tr.from.clone(),
                action: tr.action.clone(),
                cons: tr.cons,
            });
        }
        let mut sum = 0.0;
        for o in &tr.dist {
            if !states.contains_key(o.to.as_str()) {
                out.push(Violation::UnknownState { context: context.clone(), name: o.to.clone() });
            }
            if !(0.0..=1.0).contains(&o.p) {
                out.push(Violation::ProbabilityOutOfRange {
                    state: tr.from.clone(),
                    action: tr.action.clone(),
                    to: o.to.clone(),
                    p: o.p,
                });
            }
            sum += o.p;
        }
        if !sum.is_finite() || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            out.push(Violation::RowSum { state: tr.from.clone(), action: tr.action.clone(), sum });
        }
    }

    for (s, sname) in model.states.iter().enumerate() {
        for (a, aname) in model.actions.iter().enumerate() {
            if !seen[s * model.actions.len() + a] {
                out.push(Violation::MissingRow { state: sname.clone(), action: aname.clone() });
            }
        }
    }

    ValidationReport { violations: out }
}
