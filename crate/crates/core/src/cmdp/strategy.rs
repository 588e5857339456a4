use std::collections::BTreeMap;

use super::model::{ActionId, ConsumptionMdp, StateId};
use crate::error::{Error, Result};

/// A strategy whose only memory is the current resource level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterStrategy {
    capacity: u32,
    num_states: usize,
    /// Indexed by `state * (capacity + 1) + level`.
    choice: Vec<Option<ActionId>>,
}

impl CounterStrategy {
    pub fn empty(num_states: usize, capacity: u32) -> Self {
        CounterStrategy { capacity, num_states, choice: vec![None; num_states * (capacity as usize + 1)] }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    fn slot(&self, s: StateId, level: u32) -> Option<usize> {
        (s.0 < self.num_states && level <= self.capacity).then(|| s.0 * (self.capacity as usize + 1) + level as usize)
    }

    pub fn set(&mut self, s: StateId, level: u32, a: ActionId) {
        let i = self.slot(s, level).expect("strategy slot in range");
        self.choice[i] = Some(a);
    }

    pub fn action(&self, s: StateId, level: u32) -> Option<ActionId> {
        self.slot(s, level).and_then(|i| self.choice[i])
    }

    pub fn defined(&self) -> impl Iterator<Item = (StateId, u32, ActionId)> + '_ {
        let width = self.capacity as usize + 1;
        self.choice
            .iter()
            .enumerate()
            .filter_map(move |(i, a)| a.map(|a| (StateId(i / width), (i % width) as u32, a)))
    }

    pub fn len(&self) -> usize {
        self.choice.iter().filter(|a| a.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// JSON object keyed `"state:level"` with action names as values.
    pub fn to_json(&self, model: &ConsumptionMdp) -> serde_json::Value {
        let map: BTreeMap<String, String> = self
            .defined()
            .map(|(s, l, a)| (format!("{}:{}", model.state_name(s), l), model.action_name(a).to_owned()))
            .collect();
        serde_json::json!({ "capacity": self.capacity, "choices": map })
    }

    pub fn from_json(model: &ConsumptionMdp, value: &serde_json::Value) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("strategy: {msg}"));
        let capacity = value
            .get("capacity")
            .and_then(|c| c.as_u64())
            .and_then(|c| u32::try_from(c).ok())
            .ok_or_else(|| bad("missing capacity"))?;
        let choices = value.get("choices").and_then(|c| c.as_object()).ok_or_else(|| bad("missing choices"))?;
        let mut out = CounterStrategy::empty(model.num_states(), capacity);
        for (key, action) in choices {
            let (state, level) = key.rsplit_once(':').ok_or_else(|| bad("key must be state:level"))?;
            let level: u32 = level.parse().map_err(|_| bad("level is not an integer"))?;
            if level > capacity {
                return Err(bad("level exceeds capacity"));
            }
            let action = action.as_str().ok_or_else(|| bad("action must be a string"))?;
            out.set(model.state(state)?, level, model.action(action)?);
        }
        Ok(out)
    }
}

/// Anything that picks actions from the current state and resource level.
pub trait Policy {
    /// Restores the initial memory before a new run.
    fn reset(&mut self) {}

    fn choose(&mut self, state: StateId, level: u32) -> Option<ActionId>;
}

impl Policy for CounterStrategy {
    fn choose(&mut self, state: StateId, level: u32) -> Option<ActionId> {
        self.action(state, level)
    }
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn reset(&mut self) {
        (**self).reset()
    }

    fn choose(&mut self, state: StateId, level: u32) -> Option<ActionId> {
        (**self).choose(state, level)
    }
}
