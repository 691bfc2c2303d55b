//! Episode environment: a sampled task instance driven through the kinematic world, with
//! reward and done computed against the task's goal condition.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seed::derived_rng;
use crate::tasks::{sample_task, GoalCondition, SamplerError, TaskId, TaskInstance};
use crate::world::{execute, render, Action, ColorRaster, DepthRaster, SceneState, Transport, WorkspaceConfig};

/// Symbolic channel: the full scene plus the goal it is judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicSnapshot {
    pub scene: SceneState,
    pub goal: GoalCondition,
}

/// What a policy sees. Rasters are only rendered when the policy asks for them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observation {
    pub color: Option<ColorRaster>,
    pub depth: Option<DepthRaster>,
    pub symbolic: Option<SymbolicSnapshot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Change in the satisfied fraction of the goal; negative when a step undoes earlier work.
    pub reward: f64,
    pub done: bool,
    pub drop_event: bool,
    pub executed: bool,
}

pub trait Environment {
    fn goal_text(&self) -> &str;
    fn observe(&mut self, rasters: bool) -> Observation;
    fn step(&mut self, action: &Action) -> StepOutcome;
    /// `100 × satisfied fraction` of the current state.
    fn score(&self) -> f64;
}

/// One step of the world against `goal`. Invalid actions leave the scene untouched but still
/// consume a timestep.
pub fn step<R: rand::Rng + ?Sized>(
    state: &SceneState,
    action: &Action,
    goal: &GoalCondition,
    transport: Transport,
    rng: &mut R,
) -> (SceneState, StepOutcome) {
    let before = goal.satisfied_count(state);
    let (next, executed, drop_event) = if action.validate(&goal.bounds).is_err() {
        let mut next = state.clone();
        next.time += 1;
        (next, false, false)
    } else {
        let ex = execute(state, action, &goal.bounds, transport, rng);
        (ex.state, ex.executed, ex.drop_event)
    };
    let after = goal.satisfied_count(&next);
    let total = goal.total().max(1) as f64;
    let outcome = StepOutcome {
        reward: (after as f64 - before as f64) / total,
        done: after == goal.total(),
        drop_event,
        executed,
    };
    (next, outcome)
}

/// A running episode.
#[derive(Debug, Clone)]
pub struct TabletopEnv {
    pub task: TaskId,
    pub cfg: WorkspaceConfig,
    pub goal_text: String,
    pub goal: GoalCondition,
    pub state: SceneState,
    pub initial: SceneState,
    pub noisy_observations: bool,
    transport_rng: ChaCha8Rng,
    obs_rng: ChaCha8Rng,
}

impl TabletopEnv {
    pub fn new(instance: TaskInstance, cfg: WorkspaceConfig, episode_seed: u64) -> Self {
        Self {
            task: instance.task,
            goal_text: instance.goal_text,
            goal: instance.goal,
            initial: instance.scene.clone(),
            state: instance.scene,
            noisy_observations: false,
            transport_rng: derived_rng(episode_seed, "transport", 0),
            obs_rng: derived_rng(episode_seed, "observation", 0),
            cfg,
        }
    }

    /// Samples the scene for `(task, episode_seed)` and wraps it.
    pub fn sample(task: TaskId, cfg: WorkspaceConfig, episode_seed: u64) -> Result<Self, SamplerError> {
        let inst = sample_episode(task, &cfg, episode_seed)?;
        Ok(Self::new(inst, cfg, episode_seed))
    }

    pub fn transport(&self) -> Transport {
        Transport {
            drop_probability: self.cfg.drop_probability,
            substeps: self.cfg.transport_substeps,
        }
    }

    pub fn satisfied_fraction(&self) -> f64 {
        self.goal.satisfied_fraction(&self.state)
    }

    pub fn is_done(&self) -> bool {
        self.goal.is_done(&self.state)
    }

    pub fn snapshot(&self) -> SymbolicSnapshot {
        SymbolicSnapshot {
            scene: self.state.clone(),
            goal: self.goal.clone(),
        }
    }
}

/// The task instance an episode seed maps to.
pub fn sample_episode(task: TaskId, cfg: &WorkspaceConfig, episode_seed: u64) -> Result<TaskInstance, SamplerError> {
    let mut rng = derived_rng(episode_seed, "scene", 0);
    sample_task(task, &cfg.bounds, &mut rng)
}

impl Environment for TabletopEnv {
    fn goal_text(&self) -> &str {
        &self.goal_text
    }

    fn observe(&mut self, rasters: bool) -> Observation {
        let (color, depth) = if rasters {
            let (c, d) = render(&self.state, &self.cfg, &mut self.obs_rng, self.noisy_observations);
            (Some(c), Some(d))
        } else {
            (None, None)
        };
        Observation {
            color,
            depth,
            symbolic: Some(self.snapshot()),
        }
    }

    fn step(&mut self, action: &Action) -> StepOutcome {
        let transport = self.transport();
        let (next, outcome) = step(&self.state, action, &self.goal, transport, &mut self.transport_rng);
        self.state = next;
        outcome
    }

    fn score(&self) -> f64 {
        self.goal.score(&self.state)
    }
}
