//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//! Positional arguments select criteria by substring.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tabletop::control::{rollout, run_episode, Call, EpisodeSummary, RolloutConfig, Strategy};
use tabletop::dataset::{self, GenerationConfig};
use tabletop::env::{Environment, Observation, StepOutcome};
use tabletop::eval::{mean_se, planning_accuracy, ProbeConfig};
use tabletop::policy::{NoiseConfig, Policy, PolicyError, PolicySource};
use tabletop::tasks::{
    sample_task, score_from_counts, AbsoluteArea, GoalCondition, GoalTerm, ObjectSelector, PlaceTarget, SubTask,
    TargetSelector, TaskId,
};
use tabletop::tokenizer::{ActionCodec, BINS};
use tabletop::world::{
    Action, BlockSize, Color, ObjectId, ObjectInstance, ObjectKind, Pose, Rect, SceneState, WorkspaceConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn oracle() -> PolicySource {
    PolicySource::Oracle { seed: 0 }
}

fn head<T: std::fmt::Debug>(v: &[T]) -> &[T] {
    &v[..v.len().min(3)]
}

fn oracle_solvability() -> Outcome {
    let cfg = RolloutConfig {
        tasks: TaskId::ALL.to_vec(),
        episodes: 20,
        seed: 2024,
        strategies: vec![Strategy::c(2)],
        ..RolloutConfig::default()
    };
    let eps = rollout(&cfg, &oracle()).expect("oracle rollout");
    let failures: Vec<String> = eps
        .iter()
        .filter(|e| e.score != 100.0 || !e.success)
        .map(|e| format!("{}#{}={}", e.task_id, e.index, e.score))
        .collect();
    let success_rate = eps.iter().filter(|e| e.success).count() as f64 / eps.len() as f64;
    Outcome {
        pass: failures.is_empty() && eps.len() == 460 && success_rate == 1.0,
        detail: format!(
            "{} episodes (23 tasks x 20 seeds), success rate {success_rate}, failures {:?}",
            eps.len(),
            head(&failures)
        ),
    }
}

fn scoring_fidelity() -> Outcome {
    // ten blocks, eight of them inside the bottom-left area
    let bounds = Rect::new(0.0, 0.0, 1.0, 0.5);
    let objects = (0..10u32)
        .map(|i| {
            let (x, y) = if i < 8 {
                (0.05 + 0.05 * f64::from(i), 0.4)
            } else {
                (0.6 + 0.1 * f64::from(i - 8), 0.1)
            };
            ObjectInstance::block(ObjectId(i), Color::Red, BlockSize::Small, Pose::new(x, y, 0.0))
        })
        .collect();
    let state = SceneState::new(objects);
    let goal = GoalCondition::new(
        (0..10)
            .map(|i| GoalTerm::Place {
                object: ObjectId(i),
                target: PlaceTarget::InArea {
                    area: AbsoluteArea::BottomLeft,
                },
            })
            .collect(),
        bounds,
    );
    let score = goal.score(&state);
    Outcome {
        pass: goal.satisfied_count(&state) == 8 && score == 80.0 && score_from_counts(8, 10) == 80.0,
        detail: format!("satisfied {}/10, score {score}", goal.satisfied_count(&state)),
    }
}

fn tokenizer_bound() -> Outcome {
    let codec = ActionCodec::default();
    let mut checked = 0u64;
    let mut violations = Vec::new();
    // every bin of every dimension: both edges, points just inside them, and interior points
    for d in 0..6 {
        let r = codec.range(d);
        let bound = r.width() / 2048.0;
        let w = r.width() / f64::from(BINS);
        for i in 0..BINS {
            let lo = r.lo + f64::from(i) * w;
            let hi = if i + 1 == BINS { r.hi } else { r.lo + f64::from(i + 1) * w };
            for v in [lo, lo.next_up(), lo + 0.25 * w, lo + 0.5 * w, lo + 0.75 * w, hi.next_down(), hi] {
                if v < r.lo || v > r.hi {
                    continue;
                }
                let back = codec.bin_center(d, codec.encode_value(d, v).expect("in range"));
                checked += 1;
                if (back - v).abs() > bound {
                    violations.push(format!("dim {d} bin {i} v {v:e} -> {back:e}"));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let mut v = [0.0; 6];
        for (d, x) in v.iter_mut().enumerate() {
            let r = codec.range(d);
            *x = rng.random_range(r.lo..=r.hi);
        }
        let back = codec
            .decode_ids(&codec.encode(&Action::from_array(v)).expect("in range"))
            .to_array();
        for d in 0..6 {
            checked += 1;
            if (back[d] - v[d]).abs() > codec.range(d).width() / 2048.0 {
                violations.push(format!("random dim {d} v {:e}", v[d]));
            }
        }
    }
    Outcome {
        pass: violations.is_empty(),
        detail: format!("{checked} round trips, {} violations {:?}", violations.len(), head(&violations)),
    }
}

/// Environment that replays a fixed list of (reward, done) outcomes.
struct ScriptedEnv {
    outcomes: Vec<(f64, bool)>,
    next: usize,
    total: f64,
}

impl Environment for ScriptedEnv {
    fn goal_text(&self) -> &str {
        "scripted"
    }

    fn observe(&mut self, _rasters: bool) -> Observation {
        Observation::default()
    }

    fn step(&mut self, _action: &Action) -> StepOutcome {
        let (reward, done) = self.outcomes.get(self.next).copied().unwrap_or((0.0, false));
        self.next += 1;
        self.total += reward;
        StepOutcome {
            reward,
            done,
            drop_event: false,
            executed: true,
        }
    }

    fn score(&self) -> f64 {
        100.0 * self.total
    }
}

struct NullPolicy;

impl Policy for NullPolicy {
    fn plan(&mut self, _o: &Observation, _g: &str) -> Result<SubTask, PolicyError> {
        Ok(SubTask::new(ObjectSelector::kind(ObjectKind::Block), TargetSelector::Table))
    }

    fn act(&mut self, _o: &Observation, _g: &str, _s: &SubTask) -> Result<Action, PolicyError> {
        Ok(Action::new(Pose::new(0.1, 0.1, 0.0), Pose::new(0.2, 0.2, 0.0)))
    }
}

/// Plan before act at each timestep listed in `plans`, act at every timestep.
fn pattern(plans: &[u32], steps: u32) -> Vec<Call> {
    let mut out = Vec::new();
    for t in 0..steps {
        if plans.contains(&t) {
            out.push(Call::Plan(t));
        }
        out.push(Call::Act(t));
    }
    out
}

fn trace_conformance() -> Outcome {
    let f = (0.0, false);
    let three_failures = vec![f, f, f, (1.0, true)];
    let progress_then_four = vec![(0.5, false), f, f, f, f, (0.5, true)];
    // (name, outcomes, budget, strategy, plan timesteps, steps)
    let cases: Vec<(&str, Vec<(f64, bool)>, u32, Strategy, Vec<u32>, u32)> = vec![
        ("c K=2 three failures", three_failures.clone(), 20, Strategy::c(2), vec![0, 3], 4),
        ("b three failures", three_failures.clone(), 20, Strategy::B, vec![0, 1, 2, 3], 4),
        ("a three failures", three_failures, 20, Strategy::A, vec![0], 4),
        ("c K=2 progress then four failures", progress_then_four.clone(), 20, Strategy::c(2), vec![0, 1, 4], 6),
        ("b progress then four failures", progress_then_four.clone(), 20, Strategy::B, vec![0, 1, 2, 3, 4, 5], 6),
        ("a progress then four failures", progress_then_four, 20, Strategy::A, vec![0, 1], 6),
        ("c K=2 budget exhausted", vec![f; 7], 7, Strategy::c(2), vec![0, 3, 6], 7),
        ("c K=1 budget exhausted", vec![f; 7], 7, Strategy::c(1), vec![0, 2, 4, 6], 7),
        ("c K=0 replans after every failure", vec![f; 4], 4, Strategy::c(0), vec![0, 1, 2, 3], 4),
        ("a budget exhausted", vec![f; 7], 7, Strategy::A, vec![0], 7),
    ];
    let mut bad = Vec::new();
    for (name, outcomes, budget, strategy, plans, steps) in &cases {
        let mut env = ScriptedEnv {
            outcomes: outcomes.clone(),
            next: 0,
            total: 0.0,
        };
        let r = run_episode(&mut NullPolicy, &mut env, *strategy, *budget);
        if r.calls != pattern(plans, *steps) || r.plan_calls as usize != plans.len() || r.steps != *steps {
            bad.push(format!("{name}: got {:?}", r.calls));
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{} golden traces, mismatches {:?}", cases.len(), bad),
    }
}

fn strategy_ordering() -> Outcome {
    let cfg = RolloutConfig {
        tasks: TaskId::long_horizon().collect(),
        episodes: 200,
        seed: 3,
        strategies: Strategy::all(2).to_vec(),
        noise: NoiseConfig::new(0.2, 0.2, 11),
        p: 0.1,
        ..RolloutConfig::default()
    };
    let eps = rollout(&cfg, &oracle()).expect("noisy rollout");
    let mut by: BTreeMap<(TaskId, u32), [Option<&EpisodeSummary>; 3]> = BTreeMap::new();
    for e in &eps {
        let slot = match e.strategy.label() {
            "a" => 0,
            "b" => 1,
            _ => 2,
        };
        by.entry((e.task_id, e.index)).or_default()[slot] = Some(e);
    }
    fn get<'a>(v: &[Option<&'a EpisodeSummary>; 3], s: usize) -> &'a EpisodeSummary {
        v[s].expect("paired episode")
    }

    let mut pass = true;
    let mut worst = f64::INFINITY;
    let mut bad_tasks = Vec::new();
    for task in TaskId::long_horizon() {
        let diffs: Vec<f64> = by
            .range((task, 0)..=(task, u32::MAX))
            .map(|(_, v)| f64::from(get(v, 1).plan_calls) - f64::from(get(v, 2).plan_calls))
            .collect();
        let (m, se) = mean_se(&diffs);
        worst = worst.min(if se > 0.0 { m / se } else { f64::INFINITY * m.signum() });
        if !(m > 0.0 && m > 2.0 * se) {
            pass = false;
            bad_tasks.push(format!("{task}: plan(b)-plan(c) = {m:.3} ± {se:.3}"));
        }
    }
    let mut score_margins = Vec::new();
    for (other, slot) in [("b", 1), ("c", 2)] {
        let diffs: Vec<f64> = by.values().map(|v| get(v, slot).score - get(v, 0).score).collect();
        let (m, se) = mean_se(&diffs);
        if !(m > 0.0 && m > 2.0 * se) {
            pass = false;
        }
        score_margins.push(format!("score({other})-score(a) = {m:.2} ± {se:.2}"));
    }
    let mean_of = |slot: usize, f: fn(&EpisodeSummary) -> f64| by.values().map(|v| f(get(v, slot))).sum::<f64>() / by.len() as f64;
    let summary = format!(
        "score a/b/c {:.1}/{:.1}/{:.1}, success a/b/c {:.3}/{:.3}/{:.3}, plan calls a/b/c {:.2}/{:.2}/{:.2}",
        mean_of(0, |e| e.score),
        mean_of(1, |e| e.score),
        mean_of(2, |e| e.score),
        mean_of(0, |e| f64::from(u8::from(e.success))),
        mean_of(1, |e| f64::from(u8::from(e.success))),
        mean_of(2, |e| f64::from(u8::from(e.success))),
        mean_of(0, |e| f64::from(e.plan_calls)),
        mean_of(1, |e| f64::from(e.plan_calls)),
        mean_of(2, |e| f64::from(e.plan_calls)),
    );
    Outcome {
        pass,
        detail: format!(
            "{} episodes; {summary}; {}; smallest per-task plan-call margin {worst:.1} SE; failing {:?}",
            eps.len(),
            score_margins.join(", "),
            bad_tasks
        ),
    }
}

fn noiseless_tie() -> Outcome {
    let cfg = RolloutConfig {
        tasks: TaskId::ALL.to_vec(),
        episodes: 20,
        seed: 5,
        strategies: Strategy::all(2).to_vec(),
        ..RolloutConfig::default()
    };
    let eps = rollout(&cfg, &oracle()).expect("noiseless rollout");
    let mut by: BTreeMap<(TaskId, u32), Vec<(f64, bool, u32)>> = BTreeMap::new();
    for e in &eps {
        by.entry((e.task_id, e.index)).or_default().push((e.score, e.success, e.plan_calls));
    }
    let differing: Vec<String> = by
        .iter()
        .filter(|(_, v)| v.len() != 3 || v.iter().any(|x| x != &v[0]))
        .map(|(k, v)| format!("{}#{}: {v:?}", k.0, k.1))
        .collect();
    Outcome {
        pass: differing.is_empty() && by.len() == 460,
        detail: format!("{} (task, seed) pairs, {} differ {:?}", by.len(), differing.len(), head(&differing)),
    }
}

fn planning_probe() -> Outcome {
    let cfg = ProbeConfig {
        tasks: TaskId::ALL.to_vec(),
        samples_per_task: 50,
        seed: 9,
        ..ProbeConfig::default()
    };
    let run = |eps_plan: f64| planning_accuracy(&cfg, &oracle(), NoiseConfig::new(eps_plan, 0.0, 17)).expect("probe");
    let clean = run(0.0);
    let always = run(1.0);
    let half = run(0.5);
    let pass = clean.accuracy == 1.0
        && clean.per_task.iter().all(|t| t.accuracy == 1.0)
        && always.accuracy == 0.0
        && (half.accuracy - 0.5).abs() <= 0.06
        && half.samples >= 400;
    Outcome {
        pass,
        detail: format!(
            "oracle {:.3} ({} samples), eps_plan=1 {:.3}, eps_plan=0.5 {:.4} ({} samples)",
            clean.accuracy, clean.samples, always.accuracy, half.accuracy, half.samples
        ),
    }
}

fn walk(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn dataset_integrity() -> Outcome {
    let cfg = GenerationConfig::new(TaskId::ALL.to_vec(), 20, 42);
    let a = tempfile::tempdir().expect("tempdir");
    let b = tempfile::tempdir().expect("tempdir");
    let ma = dataset::generate(&cfg, a.path()).expect("generate");
    let mb = dataset::generate(&cfg, b.path()).expect("regenerate");

    let ds = dataset::load(a.path()).expect("load");
    let mut replayed = 0;
    let mut replay_failures = Vec::new();
    for rec in ds.episodes() {
        let rec = rec.expect("episode loads");
        match dataset::replay(&rec, &cfg.workspace) {
            Ok(f) if f == 1.0 => replayed += 1,
            other => replay_failures.push(format!("{}#{}: {other:?}", rec.task_id, rec.index)),
        }
    }

    let files_a = walk(a.path());
    let files_b = walk(b.path());
    let mut differing = Vec::new();
    for p in &files_a {
        let rel = p.strip_prefix(a.path()).expect("under root");
        if std::fs::read(p).ok() != std::fs::read(b.path().join(rel)).ok() {
            differing.push(rel.display().to_string());
        }
    }
    let identical = differing.is_empty() && files_a.len() == files_b.len() && ma == mb;

    let bounds = WorkspaceConfig::default().bounds;
    let mut deranged = 0;
    let mut not_deranged = Vec::new();
    for task in [
        TaskId::PutBlockIntoMismatchingBowl,
        TaskId::PutHiddenBlocksInTwoLayerTowersIntoMismatchingBowls,
    ] {
        for seed in 0..1000u64 {
            let inst = sample_task(task, &bounds, &mut ChaCha8Rng::seed_from_u64(seed)).expect("sample");
            let ok = inst.goal.terms.iter().all(|t| match t {
                GoalTerm::Place {
                    object,
                    target: PlaceTarget::InRegion { region },
                } => inst.scene.get(*object).expect("block").color != inst.scene.get(*region).expect("bowl").color,
                _ => true,
            });
            if ok {
                deranged += 1;
            } else {
                not_deranged.push(format!("{task}@{seed}"));
            }
        }
    }
    Outcome {
        pass: replay_failures.is_empty() && replayed == ma.total_episodes && identical && not_deranged.is_empty(),
        detail: format!(
            "{replayed}/{} episodes replay to 1.0; {} files, byte-identical regeneration {identical}; {deranged}/2000 mismatching-bowl scenes deranged; failures {:?} {:?} {:?}",
            ma.total_episodes,
            files_a.len(),
            head(&replay_failures),
            head(&differing),
            head(&not_deranged)
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle-solvability", oracle_solvability),
        ("scoring-fidelity", scoring_fidelity),
        ("tokenizer-bound", tokenizer_bound),
        ("controller-trace-conformance", trace_conformance),
        ("strategy-ordering", strategy_ordering),
        ("noiseless-tie", noiseless_tie),
        ("planning-accuracy-probe", planning_probe),
        ("dataset-integrity", dataset_integrity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        println!(
            "{} {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
