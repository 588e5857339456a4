use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{ConsumptionMdp, StateId};
use super::strategy::{CounterStrategy, Policy};
use super::trace::{next_level, ResourceLevel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub runs: usize,
    /// Steps per run.
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationStats {
    pub runs: usize,
    pub depletion_count: usize,
    /// Runs that visited every required target within the horizon.
    pub covered_runs: usize,
    /// Mean over covered runs of the first step at which all targets were visited.
    pub mean_steps_to_cover: Option<f64>,
    /// Lowest non-depleted level seen in any run.
    pub min_level_observed: Option<u32>,
}

/// Runs `config.runs` independent trajectories of `strategy` from `start`.
pub fn simulate(
    model: &ConsumptionMdp,
    strategy: &CounterStrategy,
    start: StateId,
    capacity: u32,
    required_targets: &[StateId],
    config: SimulationConfig,
) -> Result<SimulationStats> {
    let mut policy = strategy.clone();
    simulate_policy(model, &mut policy, start, capacity, required_targets, config)
}

/// Same as [`simulate`] for any [`Policy`]; the policy is reset before each run.
pub fn simulate_policy<P: Policy>(
    model: &ConsumptionMdp,
    policy: &mut P,
    start: StateId,
    capacity: u32,
    required_targets: &[StateId],
    config: SimulationConfig,
) -> Result<SimulationStats> {
    model.check_state(start)?;
    for &t in required_targets {
        model.check_state(t)?;
    }
    if config.horizon == 0 {
        return Err(Error::InvalidInput("simulation horizon must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut required = vec![false; model.num_states()];
    for &t in required_targets {
        required[t.0] = true;
    }
    let n_required = required.iter().filter(|&&r| r).count();

    let mut depletion_count = 0;
    let mut covered_runs = 0;
    let mut cover_steps_total = 0u64;
    let mut min_level: Option<u32> = None;

    let mut visited = vec![false; model.num_states()];
    for _ in 0..config.runs {
        policy.reset();
        visited.iter_mut().for_each(|v| *v = false);

        let mut state = start;
        let mut level = capacity;
        let mut seen = 0;
        let mut cover_step = None;
        min_level = Some(min_level.map_or(level, |m| m.min(level)));

        for step in 0..=config.horizon {
            if required[state.0] && !visited[state.0] {
                visited[state.0] = true;
                seen += 1;
            }
            if cover_step.is_none() && seen == n_required {
                cover_step = Some(step);
            }
            if step == config.horizon {
                break;
            }
            let action = policy.choose(state, level).ok_or_else(|| Error::StrategyUndefined {
                state: model.state_name(state).to_owned(),
                level,
            })?;
            match next_level(model, capacity, state, ResourceLevel::Level(level), action) {
                ResourceLevel::Level(l) => level = l,
                ResourceLevel::Depleted => {
                    depletion_count += 1;
                    break;
                }
            }
            min_level = Some(min_level.map_or(level, |m| m.min(level)));
            state = sample(&model.row(state, action).successors, &mut rng);
        }

        if let Some(step) = cover_step {
            covered_runs += 1;
            cover_steps_total += step as u64;
        }
    }

    Ok(SimulationStats {
        runs: config.runs,
        depletion_count,
        covered_runs,
        mean_steps_to_cover: (covered_runs > 0).then(|| cover_steps_total as f64 / covered_runs as f64),
        min_level_observed: min_level,
    })
}

fn sample(successors: &[(StateId, f64)], rng: &mut ChaCha8Rng) -> StateId {
    let mut x: f64 = rng.random();
    for &(t, p) in successors {
        if x < p {
            return t;
        }
        x -= p;
    }
    successors.last().expect("rows have nonempty support").0
}
