//! Metrics: episode score, per-task aggregates and the planning-accuracy probe.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{EpisodeResult, EpisodeSummary};
use crate::env::{Observation, SymbolicSnapshot};
use crate::policy::{NoiseConfig, Policy, PolicyError, PolicySource};
use crate::seed::{derive_seed, derived_rng};
use crate::tasks::{
    oracle_decompose, score_from_counts, subtask_equivalent, valid_next_subtasks, TaskId,
};
use crate::env::sample_episode;
use crate::world::{execute, render_clean, Transport, WorkspaceConfig};

/// `100 × satisfied fraction` of the episode's final state, recomputed from the recorded
/// snapshot when there is one.
pub fn score_episode(result: &EpisodeResult) -> f64 {
    match &result.final_snapshot {
        Some(s) => score_from_counts(s.goal.satisfied_count(&s.scene), s.goal.total()),
        None => result.score,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub task_id: TaskId,
    pub strategy: String,
    pub mean_score: f64,
    pub success_rate: f64,
    pub mean_plan_calls: f64,
    pub episodes: usize,
    /// Standard errors of the two means.
    pub score_se: f64,
    pub plan_calls_se: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planning_accuracy: Option<f64>,
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl MetricsReport {
    /// One row per (task, strategy). Episodes are ordered by index before summing, so the report
    /// does not depend on the order of `episodes`.
    pub fn from_summaries(episodes: &[EpisodeSummary]) -> Self {
        let mut groups: BTreeMap<(TaskId, crate::control::Strategy), Vec<&EpisodeSummary>> = BTreeMap::new();
        for e in episodes {
            groups.entry((e.task_id, e.strategy)).or_default().push(e);
        }
        let rows = groups
            .into_iter()
            .map(|((task_id, strategy), mut eps)| {
                eps.sort_by_key(|e| (e.index, e.seed));
                let scores: Vec<f64> = eps.iter().map(|e| e.score).collect();
                let plans: Vec<f64> = eps.iter().map(|e| f64::from(e.plan_calls)).collect();
                let (mean_score, score_se) = mean_se(&scores);
                let (mean_plan_calls, plan_calls_se) = mean_se(&plans);
                let successes = eps.iter().filter(|e| e.success).count();
                MetricsRow {
                    task_id,
                    strategy: strategy.label().to_string(),
                    mean_score,
                    success_rate: successes as f64 / eps.len() as f64,
                    mean_plan_calls,
                    episodes: eps.len(),
                    score_se,
                    plan_calls_se,
                }
            })
            .collect();
        Self {
            rows,
            planning_accuracy: None,
        }
    }

    pub fn row(&self, task: TaskId, strategy: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.task_id == task && r.strategy == strategy)
    }

    /// CSV with columns `task_id,strategy,mean_score,success_rate,mean_plan_calls,episodes`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task_id", "strategy", "mean_score", "success_rate", "mean_plan_calls", "episodes"])
            .expect("write to memory");
        for r in &self.rows {
            w.write_record([
                r.task_id.as_str().to_string(),
                r.strategy.clone(),
                format!("{:.4}", r.mean_score),
                format!("{:.4}", r.success_rate),
                format!("{:.4}", r.mean_plan_calls),
                r.episodes.to_string(),
            ])
            .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }

    /// The same rows as an aligned plain-text table.
    pub fn to_table(&self) -> String {
        let header = ["task_id", "strategy", "mean_score", "success_rate", "mean_plan_calls", "episodes"];
        let body: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.task_id.as_str().to_string(),
                    r.strategy.clone(),
                    format!("{:.2}", r.mean_score),
                    format!("{:.3}", r.success_rate),
                    format!("{:.2}", r.mean_plan_calls),
                    r.episodes.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&header.map(String::from));
        line(&widths.map(|w| "-".repeat(w)));
        for row in &body {
            line(row);
        }
        if let Some(a) = self.planning_accuracy {
            out.push_str(&format!("planning_accuracy  {a:.4}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub tasks: Vec<TaskId>,
    pub samples_per_task: u32,
    pub seed: u64,
    pub workspace: WorkspaceConfig,
    pub parallel: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            tasks: TaskId::ALL.to_vec(),
            samples_per_task: 10,
            seed: 0,
            workspace: WorkspaceConfig::default(),
            parallel: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAccuracy {
    pub task_id: TaskId,
    pub hits: u32,
    pub samples: u32,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub per_task: Vec<TaskAccuracy>,
    pub hits: u32,
    pub samples: u32,
    pub accuracy: f64,
}

/// A mid-episode situation for the probe: the scene reached after a random prefix of an expert
/// decomposition.
pub fn probe_situation(task: TaskId, ws: &WorkspaceConfig, sample_seed: u64) -> Result<(String, SymbolicSnapshot), String> {
    let inst = sample_episode(task, ws, sample_seed).map_err(|e| e.to_string())?;
    let mut rng = derived_rng(sample_seed, "probe", 0);
    let plan = oracle_decompose(&inst.scene, &inst.goal, &mut rng).map_err(|e| e.to_string())?;
    use rand::Rng;
    let t = rng.random_range(0..plan.len().max(1));
    let mut scene = inst.scene;
    for (_, a) in &plan[..t] {
        scene = execute(&scene, a, &inst.goal.bounds, Transport::RELIABLE, &mut rng).state;
    }
    Ok((inst.goal_text, SymbolicSnapshot { scene, goal: inst.goal }))
}

/// Whether `policy` plans a valid next sub-task in the probe situation for `sample_seed`.
/// Policy errors count as misses.
pub fn probe_sample(policy: &mut dyn Policy, task: TaskId, ws: &WorkspaceConfig, sample_seed: u64) -> Result<bool, String> {
    let (goal_text, snap) = probe_situation(task, ws, sample_seed)?;
    let valid = valid_next_subtasks(&snap.scene, &snap.goal).map_err(|e| e.to_string())?;
    let (color, depth) = if policy.wants_rasters() {
        let (c, d) = render_clean(&snap.scene, ws);
        (Some(c), Some(d))
    } else {
        (None, None)
    };
    let obs = Observation {
        color,
        depth,
        symbolic: Some(snap.clone()),
    };
    policy.reset(sample_seed);
    Ok(match policy.plan(&obs, &goal_text) {
        Ok(pred) => subtask_equivalent(&pred, &valid, &snap.scene),
        Err(_) => false,
    })
}

/// Fraction of sampled mid-episode states in which the policy's planned sub-task is equivalent
/// to one of the valid next sub-tasks.
pub fn planning_accuracy(cfg: &ProbeConfig, source: &PolicySource, noise: NoiseConfig) -> Result<ProbeReport, PolicyError> {
    noise.validate()?;
    drop(source.build(noise)?);
    let jobs: Vec<(TaskId, u32)> = cfg
        .tasks
        .iter()
        .flat_map(|&t| (0..cfg.samples_per_task).map(move |i| (t, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| PolicyError::InvalidNoise(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<(TaskId, bool), PolicyError>> = pool.install(|| {
        jobs.par_iter()
            .map_init(
                || source.build(noise),
                |policy, &(task, i)| {
                    let policy = policy.as_mut().map_err(|e| e.clone())?;
                    let seed = derive_seed(cfg.seed, &format!("probe/{}", task.as_str()), u64::from(i));
                    let hit = probe_sample(policy.as_mut(), task, &cfg.workspace, seed).unwrap_or(false);
                    policy.health()?;
                    Ok((task, hit))
                },
            )
            .collect()
    });
    let mut per: BTreeMap<TaskId, (u32, u32)> = BTreeMap::new();
    for o in outcomes {
        let (task, hit) = o?;
        let e = per.entry(task).or_default();
        e.0 += u32::from(hit);
        e.1 += 1;
    }
    let per_task: Vec<TaskAccuracy> = per
        .into_iter()
        .map(|(task_id, (hits, samples))| TaskAccuracy {
            task_id,
            hits,
            samples,
            accuracy: f64::from(hits) / f64::from(samples.max(1)),
        })
        .collect();
    let hits = per_task.iter().map(|t| t.hits).sum();
    let samples = per_task.iter().map(|t| t.samples).sum();
    Ok(ProbeReport {
        per_task,
        hits,
        samples,
        accuracy: f64::from(hits) / f64::from(u32::max(samples, 1)),
    })
}
