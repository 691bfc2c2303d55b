use rand::seq::SliceRandom;

use super::{Policy, PolicyError};
use crate::env::{Observation, SymbolicSnapshot};
use crate::seed::derived_rng;
use crate::tasks::{next_candidates, oracle_action, GoalCondition, OracleError, SubTask};
use crate::world::{Action, SceneState};

/// The oracle's choice among the valid next sub-tasks.
///
/// The candidates are shuffled by an rng keyed on `seed` and on the situation itself (satisfied
/// terms plus candidate texts), so the same scene always yields the same choice regardless of how
/// often or in which process the oracle has been asked before.
pub fn oracle_plan(state: &SceneState, goal: &GoalCondition, seed: u64) -> Result<SubTask, OracleError> {
    let mut cands = next_candidates(state, goal)?;
    if cands.is_empty() {
        return Err(OracleError::ReplanImpossible("no valid next sub-task".to_string()));
    }
    let mut key: String = goal
        .satisfied_mask(state)
        .iter()
        .map(|&s| if s { '1' } else { '0' })
        .collect();
    for c in &cands {
        key.push('\n');
        key.push_str(&c.subtask.text);
    }
    let mut rng = derived_rng(seed, &key, 0);
    cands.shuffle(&mut rng);
    Ok(cands.swap_remove(0).subtask)
}

/// Rule-based planner and actor with full access to the symbolic channel.
#[derive(Debug, Clone, Default)]
pub struct OraclePolicy {
    pub seed: u64,
}

impl OraclePolicy {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

fn symbolic(obs: &Observation) -> Result<&SymbolicSnapshot, PolicyError> {
    obs.symbolic.as_ref().ok_or(PolicyError::MissingSymbolic)
}

impl Policy for OraclePolicy {
    fn plan(&mut self, obs: &Observation, _goal: &str) -> Result<SubTask, PolicyError> {
        let s = symbolic(obs)?;
        Ok(oracle_plan(&s.scene, &s.goal, self.seed)?)
    }

    fn act(&mut self, obs: &Observation, _goal: &str, subtask: &SubTask) -> Result<Action, PolicyError> {
        let s = symbolic(obs)?;
        Ok(oracle_action(&s.scene, &s.goal, subtask)?)
    }
}
