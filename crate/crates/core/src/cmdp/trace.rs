use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::{ActionId, ConsumptionMdp, StateId};
use crate::error::{Error, Result};

/// A finite path `s1 a1 s2 a2 ... sn`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    states: Vec<StateId>,
    actions: Vec<ActionId>,
}

impl Path {
    pub fn new(states: Vec<StateId>, actions: Vec<ActionId>) -> Result<Self> {
        if states.is_empty() || states.len() != actions.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "a path needs one more state than actions (got {} states, {} actions)",
                states.len(),
                actions.len()
            )));
        }
        Ok(Path { states, actions })
    }

    /// Parses an alternating sequence of state and action names.
    pub fn from_names(model: &ConsumptionMdp, tokens: &[&str]) -> Result<Self> {
        if tokens.len().is_multiple_of(2) {
            return Err(Error::InvalidInput("a path must start and end with a state".into()));
        }
        let mut states = Vec::with_capacity(tokens.len() / 2 + 1);
        let mut actions = Vec::with_capacity(tokens.len() / 2);
        for (i, tok) in tokens.iter().enumerate() {
            if i % 2 == 0 {
                states.push(model.state(tok)?);
            } else {
                actions.push(model.action(tok)?);
            }
        }
        Path::new(states, actions)
    }

    /// Unrolls `prefix (cycle)^repeat`, where both are alternating name
    /// sequences and `cycle` starts with an action.
    pub fn from_lasso(model: &ConsumptionMdp, prefix: &[&str], cycle: &[&str], repeat: usize) -> Result<Self> {
        let mut tokens: Vec<&str> = prefix.to_vec();
        for _ in 0..repeat {
            tokens.extend_from_slice(cycle);
        }
        Path::from_names(model, &tokens)
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prefix(&self, n_states: usize) -> Path {
        let n = n_states.clamp(1, self.states.len());
        Path { states: self.states[..n].to_vec(), actions: self.actions[..n - 1].to_vec() }
    }

    fn check(&self, model: &ConsumptionMdp) -> Result<()> {
        for &s in &self.states {
            model.check_state(s)?;
        }
        for (i, &a) in self.actions.iter().enumerate() {
            if a.0 >= model.num_actions() {
                return Err(Error::InvalidPath { step: i, reason: format!("action index {} out of range", a.0) });
            }
            let (s, t) = (self.states[i], self.states[i + 1]);
            if model.probability(s, a, t) <= 0.0 {
                return Err(Error::InvalidPath {
                    step: i,
                    reason: format!(
                        "no transition {} --{}--> {}",
                        model.state_name(s),
                        model.action_name(a),
                        model.state_name(t)
                    ),
                });
            }
        }
        Ok(())
    }
}

/// A resource level, or depletion (`⊥`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResourceLevel {
    Level(u32),
    Depleted,
}

impl ResourceLevel {
    pub fn value(self) -> Option<u32> {
        match self {
            ResourceLevel::Level(l) => Some(l),
            ResourceLevel::Depleted => None,
        }
    }
}

impl fmt::Display for ResourceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceLevel::Level(l) => write!(f, "{l}"),
            ResourceLevel::Depleted => f.write_str("⊥"),
        }
    }
}

/// Level after playing `action` in `state` at `level`.
///
/// Leaving a reload state refills to `capacity` before the consumption is
/// taken; anywhere else the consumption comes out of the current level.
pub fn next_level(
    model: &ConsumptionMdp,
    capacity: u32,
    state: StateId,
    level: ResourceLevel,
    action: ActionId,
) -> ResourceLevel {
    let ResourceLevel::Level(current) = level else {
        return ResourceLevel::Depleted;
    };
    let cons = model.consumption(state, action);
    let base = if model.is_reload(state) { capacity } else { current };
    match base.checked_sub(cons) {
        Some(l) => ResourceLevel::Level(l),
        None => ResourceLevel::Depleted,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceTrace {
    pub capacity: u32,
    pub levels: Vec<ResourceLevel>,
}

impl ResourceTrace {
    pub fn is_safe(&self) -> bool {
        !self.levels.contains(&ResourceLevel::Depleted)
    }
}

impl fmt::Display for ResourceTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.levels.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

pub fn resource_levels(model: &ConsumptionMdp, capacity: u32, path: &Path) -> Result<ResourceTrace> {
    path.check(model)?;
    let mut levels = Vec::with_capacity(path.len());
    let mut level = ResourceLevel::Level(capacity);
    levels.push(level);
    for (&s, &a) in path.states.iter().zip(&path.actions) {
        level = next_level(model, capacity, s, level, a);
        levels.push(level);
    }
    Ok(ResourceTrace { capacity, levels })
}

pub fn is_safe(model: &ConsumptionMdp, capacity: u32, path: &Path) -> Result<bool> {
    Ok(resource_levels(model, capacity, path)?.is_safe())
}
