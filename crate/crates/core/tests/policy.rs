use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tabletop::env::{Environment, Observation, TabletopEnv};
use tabletop::policy::{
    corrupt_subtask, NoiseConfig, NoisyPolicy, OraclePolicy, Policy, PolicyError, Quantized, ACT_OFFSET_RANGE,
};
use tabletop::tasks::{oracle_decompose, subtask_equivalent, valid_next_subtasks, OracleError, SubTask, TaskId};
use tabletop::tokenizer::ActionCodec;
use tabletop::world::WorkspaceConfig;

fn env(task: TaskId, seed: u64) -> TabletopEnv {
    TabletopEnv::sample(task, WorkspaceConfig::default(), seed).unwrap()
}

/// Observations along an expert trajectory: every state the oracle passes through before done.
fn trajectory(task: TaskId, seed: u64) -> Vec<Observation> {
    let mut e = env(task, seed);
    let plan = oracle_decompose(&e.state, &e.goal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let mut out = Vec::new();
    for (_, a) in &plan {
        out.push(e.observe(false));
        e.step(a);
    }
    out
}

fn states() -> Vec<Observation> {
    TaskId::ALL.into_iter().flat_map(|t| trajectory(t, 7)).collect()
}

fn snapshot(obs: &Observation) -> &tabletop::env::SymbolicSnapshot {
    obs.symbolic.as_ref().unwrap()
}

#[test]
fn zero_noise_is_transparent() {
    let mut plain = OraclePolicy::new(3);
    let mut noisy = NoisyPolicy::new(OraclePolicy::new(3), NoiseConfig::new(0.0, 0.0, 99)).unwrap();
    for obs in states() {
        let a = plain.plan(&obs, "").unwrap();
        let b = noisy.plan(&obs, "").unwrap();
        assert_eq!(a, b);
        assert_eq!(plain.act(&obs, "", &a).unwrap(), noisy.act(&obs, "", &b).unwrap());
    }
    assert_eq!(noisy.stats.plan_corruptions + noisy.stats.act_corruptions, 0);
}

#[test]
fn certain_plan_noise_is_never_a_valid_next_sub_task() {
    let mut p = NoisyPolicy::new(OraclePolicy::new(0), NoiseConfig::new(1.0, 0.0, 5)).unwrap();
    let mut checked = 0;
    for obs in states().into_iter().cycle().take(400) {
        let s = snapshot(&obs);
        let valid = valid_next_subtasks(&s.scene, &s.goal).unwrap();
        let got = p.plan(&obs, "").unwrap();
        if corrupt_subtask(&s.scene, &s.goal, &valid, &mut ChaCha8Rng::seed_from_u64(0)).is_some() {
            assert!(!subtask_equivalent(&got, &valid, &s.scene), "{}", got.text);
            checked += 1;
        }
    }
    assert!(checked >= 100, "{checked}");
    assert_eq!(p.stats.plan_corruptions, checked);
}

#[test]
fn corrupted_sub_tasks_render_and_parse() {
    let mut p = NoisyPolicy::new(OraclePolicy::new(0), NoiseConfig::new(1.0, 0.0, 8)).unwrap();
    for obs in states() {
        let st = p.plan(&obs, "").unwrap();
        let parsed = SubTask::parse(&st.text).unwrap();
        assert_eq!(parsed.text, st.text);
        assert!(parsed.structurally_equal(&SubTask::parse(&st.alternate_text()).unwrap()));
    }
}

#[test]
fn action_noise_rate_matches_eps_act() {
    let obs = states();
    let mut p = NoisyPolicy::new(OraclePolicy::new(0), NoiseConfig::new(0.0, 0.3, 17)).unwrap();
    let mut clean = OraclePolicy::new(0);
    let mut displaced = 0u32;
    let n = 10_000;
    for o in obs.iter().cycle().take(n) {
        let st = clean.plan(o, "").unwrap();
        let want = clean.act(o, "", &st).unwrap();
        let got = p.act(o, "", &st).unwrap();
        assert_eq!(got.pick, want.pick);
        assert_eq!(got.place.yaw, want.place.yaw);
        let d = got.place.distance_xy(&want.place);
        if d > 0.0 {
            displaced += 1;
            assert!(d >= ACT_OFFSET_RANGE.0 - 1e-9 && d <= ACT_OFFSET_RANGE.1 + 1e-9, "offset {d}");
            assert!(snapshot(o).goal.bounds.contains(got.place.x, got.place.y));
        }
    }
    let rate = f64::from(displaced) / n as f64;
    assert!((rate - 0.3).abs() <= 0.02, "rate {rate}");
    assert_eq!(u64::from(displaced), p.stats.act_corruptions);
    assert_eq!(p.stats.act_calls, n as u64);
}

#[test]
fn noiseless_inner_wrapper_composes_away() {
    let cfg = NoiseConfig::new(0.4, 0.4, 23);
    let mut nested = NoisyPolicy::new(NoisyPolicy::new(OraclePolicy::new(1), NoiseConfig::new(0.0, 0.0, 5)).unwrap(), cfg).unwrap();
    let mut single = NoisyPolicy::new(OraclePolicy::new(1), cfg).unwrap();
    for (i, obs) in states().iter().enumerate() {
        if i % 10 == 0 {
            nested.reset(i as u64);
            single.reset(i as u64);
        }
        let a = nested.plan(obs, "").unwrap();
        assert_eq!(a, single.plan(obs, "").unwrap());
        assert_eq!(nested.act(obs, "", &a).unwrap(), single.act(obs, "", &a).unwrap());
    }
}

#[test]
fn reset_replays_the_same_noise() {
    let obs = states();
    let mut p = NoisyPolicy::new(OraclePolicy::new(0), NoiseConfig::new(0.5, 0.5, 2)).unwrap();
    let run = |p: &mut NoisyPolicy<OraclePolicy>| {
        p.reset(41);
        obs.iter()
            .map(|o| {
                let st = p.plan(o, "").unwrap();
                let a = p.act(o, "", &st).unwrap();
                (st, a)
            })
            .collect::<Vec<_>>()
    };
    let first = run(&mut p);
    assert_eq!(first, run(&mut p));
}

#[test]
fn invalid_rates_are_rejected() {
    for (e1, e2) in [(-0.1, 0.0), (0.0, 1.01), (f64::NAN, 0.0)] {
        let r = NoisyPolicy::new(OraclePolicy::new(0), NoiseConfig::new(e1, e2, 0));
        assert!(matches!(r, Err(PolicyError::InvalidNoise(_))));
    }
}

#[test]
fn oracle_on_a_solved_scene_reports_already_done() {
    let mut e = env(TaskId::PutBlockIntoMatchingBowl, 4);
    let plan = oracle_decompose(&e.state, &e.goal, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    for (_, a) in &plan {
        e.step(a);
    }
    assert!(e.is_done());
    let err = OraclePolicy::new(0).plan(&e.observe(false), "").unwrap_err();
    assert_eq!(err, PolicyError::Oracle(OracleError::AlreadyDone));
    assert!(err.ends_episode());
}

#[test]
fn oracle_choice_depends_only_on_the_situation() {
    let obs = states();
    let fresh = |o: &Observation| OraclePolicy::new(9).plan(o, "").unwrap();
    let mut warm = OraclePolicy::new(9);
    // a long-lived policy asked in reverse order agrees with one-shot policies
    for o in obs.iter().rev() {
        assert_eq!(warm.plan(o, "").unwrap(), fresh(o));
    }
}

#[test]
fn oracle_needs_the_symbolic_channel() {
    let mut p = OraclePolicy::new(0);
    assert_eq!(p.plan(&Observation::default(), "").unwrap_err(), PolicyError::MissingSymbolic);
}

#[test]
fn quantized_actions_sit_on_bin_centers() {
    let codec = ActionCodec::default();
    let mut q = Quantized::new(OraclePolicy::new(0));
    for o in states() {
        let st = q.plan(&o, "").unwrap();
        let a = q.act(&o, "", &st).unwrap();
        assert_eq!(codec.quantize(&a).unwrap(), a);
    }
}
