//! Closed-loop episode driver.
//!
//! Each timestep the controller decides whether to (re)plan a sub-task, then asks for an action
//! for the current sub-task and steps the environment. Three strategies differ only in when they
//! plan:
//!
//! - A: at `t = 0` and after progress; failures only re-predict the action.
//! - B: before every action.
//! - C: at `t = 0`, after progress, or once more than `K` consecutive failures have piled up.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, StepOutcome, SymbolicSnapshot, TabletopEnv};
use crate::eval::MetricsReport;
use crate::policy::{NoiseConfig, Policy, PolicyError, PolicySource};
use crate::seed::{derive_seed, derived_rng};
use crate::tasks::{oracle_decompose, SubTask, TaskId};
use crate::world::{Action, WorkspaceConfig};

pub const DEFAULT_K: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Consecutive-failure threshold; only consulted by C.
    pub k: u32,
}

impl Strategy {
    pub const A: Strategy = Strategy {
        kind: StrategyKind::A,
        k: DEFAULT_K,
    };
    pub const B: Strategy = Strategy {
        kind: StrategyKind::B,
        k: DEFAULT_K,
    };

    pub fn c(k: u32) -> Self {
        Strategy {
            kind: StrategyKind::C,
            k,
        }
    }

    pub fn all(k: u32) -> [Strategy; 3] {
        [Strategy::A, Strategy::B, Strategy::c(k)]
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            StrategyKind::A => "a",
            StrategyKind::B => "b",
            StrategyKind::C => "c",
        }
    }

    fn should_plan(&self, t: u32, reward: f64, failures: u32, have_subtask: bool) -> bool {
        if t == 0 || reward > 0.0 || !have_subtask {
            return true;
        }
        match self.kind {
            StrategyKind::A => false,
            StrategyKind::B => true,
            StrategyKind::C => failures > self.k,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(StrategyKind::A),
            "b" => Ok(StrategyKind::B),
            "c" => Ok(StrategyKind::C),
            _ => Err(format!("unknown strategy `{s}` (expected a, b or c)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "call", content = "t", rename_all = "snake_case")]
pub enum Call {
    Plan(u32),
    Act(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub t: u32,
    pub planned: bool,
    pub subtask: Option<SubTask>,
    pub action: Option<Action>,
    pub outcome: StepOutcome,
    /// Policy or protocol error that turned this step into a failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum Termination {
    Done,
    BudgetExhausted,
    ReplanImpossible(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// `100 × satisfied fraction` of the final state.
    pub score: f64,
    pub success: bool,
    pub plan_calls: u32,
    pub act_calls: u32,
    pub steps: u32,
    pub cumulative_reward: f64,
    pub termination: Termination,
    pub calls: Vec<Call>,
    pub transcript: Vec<TranscriptEntry>,
    /// Scene and goal after the last step, when the environment exposes them.
    pub final_snapshot: Option<SymbolicSnapshot>,
}

fn failed_step() -> StepOutcome {
    StepOutcome {
        reward: 0.0,
        done: false,
        drop_event: false,
        executed: false,
    }
}

/// Runs one episode until the environment reports done or `step_budget` timesteps are used.
///
/// Policy and protocol errors turn the step into a failure (`r = 0`) without touching the
/// environment; an oracle reporting that no replan is possible ends the episode.
pub fn run_episode<P, E>(policy: &mut P, env: &mut E, strategy: Strategy, step_budget: u32) -> EpisodeResult
where
    P: Policy + ?Sized,
    E: Environment + ?Sized,
{
    let goal = env.goal_text().to_string();
    let mut t = 0u32;
    let mut k = 0u32;
    let mut reward = 0.0;
    let mut current: Option<SubTask> = None;
    let mut res = EpisodeResult {
        score: 0.0,
        success: false,
        plan_calls: 0,
        act_calls: 0,
        steps: 0,
        cumulative_reward: 0.0,
        termination: Termination::BudgetExhausted,
        calls: Vec::new(),
        transcript: Vec::new(),
        final_snapshot: None,
    };

    while t < step_budget {
        let obs = env.observe(policy.wants_rasters());
        let mut error = None;
        let planned = strategy.should_plan(t, reward, k, current.is_some());
        if planned {
            res.plan_calls += 1;
            res.calls.push(Call::Plan(t));
            k = 0;
            match policy.plan(&obs, &goal) {
                Ok(s) => current = Some(s),
                Err(e) if e.ends_episode() => {
                    res.termination = Termination::ReplanImpossible(e.to_string());
                    break;
                }
                Err(e) => {
                    current = None;
                    error = Some(e.to_string());
                }
            }
        }
        let (action, outcome) = match &current {
            Some(st) => {
                res.act_calls += 1;
                res.calls.push(Call::Act(t));
                match policy.act(&obs, &goal, st) {
                    Ok(a) => (Some(a), env.step(&a)),
                    Err(e) => {
                        error = Some(e.to_string());
                        (None, failed_step())
                    }
                }
            }
            None => (None, failed_step()),
        };
        reward = outcome.reward;
        res.cumulative_reward += reward;
        if reward <= 0.0 {
            k += 1;
        }
        res.transcript.push(TranscriptEntry {
            t,
            planned,
            subtask: current.clone(),
            action,
            outcome,
            error,
        });
        t += 1;
        if outcome.done {
            res.termination = Termination::Done;
            break;
        }
    }
    res.steps = t;
    res.score = env.score();
    res.final_snapshot = env.observe(false).symbolic;
    res.success = res.termination == Termination::Done && res.score >= 100.0;
    res
}

/// `3 × (oracle decomposition length) + 5`.
pub fn default_step_budget(env: &TabletopEnv, episode_seed: u64) -> u32 {
    let mut rng = derived_rng(episode_seed, "budget", 0);
    let n = oracle_decompose(&env.state, &env.goal, &mut rng)
        .map(|p| p.len())
        .unwrap_or(env.goal.total());
    3 * n as u32 + 5
}

/// Seed of episode `index` of `task` under `master`; shared by all strategies so comparisons are paired.
pub fn episode_seed(master: u64, task: TaskId, index: u32) -> u64 {
    derive_seed(master, task.as_str(), u64::from(index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub tasks: Vec<TaskId>,
    pub episodes: u32,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub noise: NoiseConfig,
    /// Per-substep drop probability.
    pub p: f64,
    /// `None` uses [`default_step_budget`].
    pub step_budget: Option<u32>,
    pub workspace: WorkspaceConfig,
    /// Worker threads; 0 lets the pool decide.
    pub parallel: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            tasks: Vec::new(),
            episodes: 20,
            seed: 0,
            strategies: Strategy::all(DEFAULT_K).to_vec(),
            noise: NoiseConfig::default(),
            p: 0.0,
            step_budget: None,
            workspace: WorkspaceConfig::default(),
            parallel: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub task_id: TaskId,
    pub strategy: Strategy,
    pub index: u32,
    pub seed: u64,
    pub score: f64,
    pub success: bool,
    pub plan_calls: u32,
    pub steps: u32,
    pub termination: Option<Termination>,
    /// Set when the episode could not be run at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Samples the episode, runs it and returns the full result.
pub fn run_seeded_episode(
    policy: &mut dyn Policy,
    task: TaskId,
    episode_seed: u64,
    strategy: Strategy,
    cfg: &RolloutConfig,
) -> Result<EpisodeResult, String> {
    let ws = cfg.workspace.clone().with_drop_probability(cfg.p);
    let mut env = TabletopEnv::sample(task, ws, episode_seed).map_err(|e| e.to_string())?;
    let budget = cfg.step_budget.unwrap_or_else(|| default_step_budget(&env, episode_seed));
    policy.reset(episode_seed);
    Ok(run_episode(policy, &mut env, strategy, budget))
}

fn summarize(task: TaskId, strategy: Strategy, index: u32, seed: u64, r: Result<EpisodeResult, String>) -> EpisodeSummary {
    match r {
        Ok(r) => EpisodeSummary {
            task_id: task,
            strategy,
            index,
            seed,
            score: r.score,
            success: r.success,
            plan_calls: r.plan_calls,
            steps: r.steps,
            termination: Some(r.termination),
            error: None,
        },
        Err(e) => EpisodeSummary {
            task_id: task,
            strategy,
            index,
            seed,
            score: 0.0,
            success: false,
            plan_calls: 0,
            steps: 0,
            termination: None,
            error: Some(e),
        },
    }
}

/// Runs every (task, episode, strategy) combination, fanned out over a worker pool; each worker
/// owns its policy instance. Results come back sorted by (task, strategy, index), so the degree of
/// parallelism never changes the output.
pub fn rollout(cfg: &RolloutConfig, source: &PolicySource) -> Result<Vec<EpisodeSummary>, PolicyError> {
    cfg.noise.validate()?;
    // Fail fast on a policy that cannot even be constructed.
    drop(source.build(cfg.noise)?);
    let jobs: Vec<(TaskId, u32, Strategy)> = cfg
        .tasks
        .iter()
        .flat_map(|&t| (0..cfg.episodes).flat_map(move |i| cfg.strategies.iter().map(move |&s| (t, i, s))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| PolicyError::InvalidNoise(format!("thread pool: {e}")))?;
    let results: Vec<Result<EpisodeSummary, PolicyError>> = pool.install(|| {
        jobs.par_iter()
            .map_init(
                || source.build(cfg.noise),
                |policy, &(task, index, strategy)| {
                    let policy = policy.as_mut().map_err(|e| e.clone())?;
                    let seed = episode_seed(cfg.seed, task, index);
                    let r = run_seeded_episode(policy.as_mut(), task, seed, strategy, cfg);
                    policy.health()?;
                    Ok(summarize(task, strategy, index, seed, r))
                },
            )
            .collect()
    });
    let mut out = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    out.sort_by_key(|e| (e.task_id, e.strategy, e.index));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub episodes: Vec<EpisodeSummary>,
    pub report: MetricsReport,
}

/// Paired comparison of strategies: every strategy sees the same episode seeds.
pub fn compare_strategies(cfg: &RolloutConfig, source: &PolicySource) -> Result<Comparison, PolicyError> {
    let episodes = rollout(cfg, source)?;
    let report = MetricsReport::from_summaries(&episodes);
    Ok(Comparison { episodes, report })
}
