use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Policy, PolicyError};
use crate::env::Observation;
use crate::seed::derived_rng;
use crate::tasks::{subtask_equivalent, subtask_space, valid_next_subtasks, GoalCondition, SubTask};
use crate::world::{Action, Pose, Rect, SceneState, WorkspaceConfig};

/// Magnitude range of the place-pose offset applied by an action corruption, in meters.
/// The lower end is ten times the default position tolerance.
pub const ACT_OFFSET_RANGE: (f64, f64) = (0.1, 0.2);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Probability that a plan call returns a wrong sub-task.
    pub eps_plan: f64,
    /// Probability that an act call has its place pose displaced.
    pub eps_act: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(eps_plan: f64, eps_act: f64, seed: u64) -> Self {
        Self { eps_plan, eps_act, seed }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for (name, v) in [("eps_plan", self.eps_plan), ("eps_act", self.eps_act)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PolicyError::InvalidNoise(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.eps_plan == 0.0 && self.eps_act == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoiseStats {
    pub plan_calls: u64,
    pub plan_corruptions: u64,
    pub act_calls: u64,
    pub act_corruptions: u64,
}

/// A uniformly chosen element of the sub-task space that is not equivalent to any valid next
/// sub-task. `None` when every element is valid.
pub fn corrupt_subtask<R: Rng + ?Sized>(
    state: &SceneState,
    goal: &GoalCondition,
    valid: &[SubTask],
    rng: &mut R,
) -> Option<SubTask> {
    let wrong: Vec<SubTask> = subtask_space(state, goal)
        .into_iter()
        .filter(|s| !subtask_equivalent(s, valid, state))
        .collect();
    if wrong.is_empty() {
        return None;
    }
    let i = rng.random_range(0..wrong.len());
    Some(wrong.into_iter().nth(i).expect("index in range"))
}

/// Displaces `place` by a random offset within [`ACT_OFFSET_RANGE`], keeping it inside `bounds`
/// and at least the sampled magnitude away from the original.
pub fn corrupt_place<R: Rng + ?Sized>(place: &Pose, bounds: &Rect, rng: &mut R) -> Pose {
    let mag = rng.random_range(ACT_OFFSET_RANGE.0..=ACT_OFFSET_RANGE.1);
    for _ in 0..16 {
        let theta = rng.random_range(0.0..TAU);
        let (x, y) = bounds.clamp_point(place.x + mag * theta.cos(), place.y + mag * theta.sin());
        if (x - place.x).hypot(y - place.y) >= mag - 1e-12 {
            return Pose::new(x, y, place.yaw);
        }
    }
    // Fall back to the axis direction with the most room; the workspace is large enough that one
    // of them always fits the largest magnitude.
    let room = [
        (bounds.x1 - place.x, (1.0, 0.0)),
        (place.x - bounds.x0, (-1.0, 0.0)),
        (bounds.y1 - place.y, (0.0, 1.0)),
        (place.y - bounds.y0, (0.0, -1.0)),
    ];
    let (_, (dx, dy)) = room
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("four directions");
    let (x, y) = bounds.clamp_point(place.x + mag * dx, place.y + mag * dy);
    Pose::new(x, y, place.yaw)
}

/// Injects planning errors (wrong sub-task) and action errors (displaced place pose) around an
/// inner policy. The inner policy is always consulted, so with both rates at zero the wrapper is
/// transparent.
pub struct NoisyPolicy<P> {
    pub inner: P,
    pub cfg: NoiseConfig,
    pub stats: NoiseStats,
    rng: ChaCha8Rng,
}

impl<P: Policy> NoisyPolicy<P> {
    pub fn new(inner: P, cfg: NoiseConfig) -> Result<Self, PolicyError> {
        cfg.validate()?;
        Ok(Self {
            inner,
            cfg,
            stats: NoiseStats::default(),
            rng: derived_rng(cfg.seed, "noise", 0),
        })
    }
}

impl<P: Policy> Policy for NoisyPolicy<P> {
    fn plan(&mut self, obs: &Observation, goal: &str) -> Result<SubTask, PolicyError> {
        let planned = self.inner.plan(obs, goal)?;
        self.stats.plan_calls += 1;
        if !self.rng.random_bool(self.cfg.eps_plan) {
            return Ok(planned);
        }
        let s = obs.symbolic.as_ref().ok_or(PolicyError::MissingSymbolic)?;
        let valid = valid_next_subtasks(&s.scene, &s.goal)?;
        match corrupt_subtask(&s.scene, &s.goal, &valid, &mut self.rng) {
            Some(wrong) => {
                self.stats.plan_corruptions += 1;
                Ok(wrong)
            }
            None => Ok(planned),
        }
    }

    fn act(&mut self, obs: &Observation, goal: &str, subtask: &SubTask) -> Result<Action, PolicyError> {
        let mut action = self.inner.act(obs, goal, subtask)?;
        self.stats.act_calls += 1;
        if self.rng.random_bool(self.cfg.eps_act) {
            let bounds = obs
                .symbolic
                .as_ref()
                .map(|s| s.goal.bounds)
                .unwrap_or_else(|| WorkspaceConfig::default().bounds);
            action.place = corrupt_place(&action.place, &bounds, &mut self.rng);
            self.stats.act_corruptions += 1;
        }
        Ok(action)
    }

    fn reset(&mut self, episode_seed: u64) {
        self.inner.reset(episode_seed);
        self.rng = derived_rng(self.cfg.seed, "noise", episode_seed);
    }

    fn wants_rasters(&self) -> bool {
        self.inner.wants_rasters()
    }

    fn health(&mut self) -> Result<(), PolicyError> {
        self.inner.health()
    }
}
