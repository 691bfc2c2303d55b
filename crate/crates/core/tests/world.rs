use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tabletop::tasks::{sample_task, TaskId};
use tabletop::world::{
    execute, overlap_fraction, pose_within, render, render_clean, zone_match, Action, BlockSize, Color, ObjectId,
    ObjectInstance, Pose, PoseTolerance, Rect, SceneState, Transport, WorkspaceConfig, ZONE_EDGE,
};

const BOUNDS: Rect = Rect::new(0.0, 0.0, 1.0, 0.5);

fn scene(task_index: usize, seed: u64) -> SceneState {
    let task = TaskId::ALL[task_index % TaskId::ALL.len()];
    sample_task(task, &BOUNDS, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().scene
}

/// Actions that mostly hit blocks: each pick targets the object at `picks[i]` (mod count).
fn actions(state: &SceneState, picks: &[(usize, f64, f64, f64)]) -> Vec<Action> {
    picks
        .iter()
        .map(|&(i, x, y, yaw)| {
            let o = &state.objects[i % state.objects.len()];
            Action::new(o.pose, Pose::new(x, y, yaw))
        })
        .collect()
}

fn run(state: &SceneState, acts: &[Action], transport: Transport, seed: u64) -> Vec<SceneState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = state.clone();
    let mut trace = vec![s.clone()];
    for a in acts {
        s = execute(&s, a, &BOUNDS, transport, &mut rng).state;
        trace.push(s.clone());
    }
    trace
}

fn arb_picks() -> impl Strategy<Value = Vec<(usize, f64, f64, f64)>> {
    prop::collection::vec((0usize..40, 0.0f64..=1.0, 0.0f64..=0.5, -PI..PI), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_and_actions_give_same_states_and_rasters(
        task in 0usize..23, seed in any::<u64>(), picks in arb_picks(), p in 0.0f64..=1.0,
    ) {
        let s0 = scene(task, seed);
        let acts = actions(&s0, &picks);
        let t = Transport { drop_probability: p, substeps: 3 };
        let a = run(&s0, &acts, t, seed);
        let b = run(&s0, &acts, t, seed);
        prop_assert_eq!(&a, &b);
        let cfg = WorkspaceConfig::default();
        let last = a.last().unwrap();
        prop_assert_eq!(render_clean(last, &cfg), render_clean(b.last().unwrap(), &cfg));
        let noisy_off = render(last, &cfg, &mut ChaCha8Rng::seed_from_u64(1), false);
        prop_assert_eq!(noisy_off, render_clean(last, &cfg));
    }

    #[test]
    fn steps_conserve_objects_and_keep_scenes_valid(
        task in 0usize..23, seed in any::<u64>(), picks in arb_picks(), p in 0.0f64..=1.0,
    ) {
        let s0 = scene(task, seed);
        let acts = actions(&s0, &picks);
        for s in run(&s0, &acts, Transport { drop_probability: p, substeps: 3 }, seed) {
            prop_assert_eq!(s.objects.len(), s0.objects.len());
            let ids: Vec<_> = s.objects.iter().map(|o| o.id).collect();
            prop_assert_eq!(ids, s0.objects.iter().map(|o| o.id).collect::<Vec<_>>());
            // validate covers bounds, dangling supports and support cycles
            prop_assert!(s.validate(&BOUNDS).is_ok(), "{:?}", s.validate(&BOUNDS));
            for o in &s.objects {
                prop_assert!(BOUNDS.contains(o.pose.x, o.pose.y));
            }
        }
    }

    #[test]
    fn reliable_transport_ignores_the_rng(
        task in 0usize..23, seed in any::<u64>(), picks in arb_picks(), other in any::<u64>(),
    ) {
        let s0 = scene(task, seed);
        let acts = actions(&s0, &picks);
        let t = Transport { drop_probability: 0.0, substeps: 3 };
        prop_assert_eq!(run(&s0, &acts, t, seed), run(&s0, &acts, t, other));
    }

    #[test]
    fn overlap_fraction_is_a_fraction(
        x in 0.0f64..1.0, y in 0.0f64..0.5, w in 0.001f64..0.3, h in 0.001f64..0.3,
        rx in 0.0f64..1.0, ry in 0.0f64..0.5,
    ) {
        let obj = Rect::centered(x, y, w, h);
        let region = Rect::centered(rx, ry, ZONE_EDGE, ZONE_EDGE);
        let f = overlap_fraction(&obj, &region);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(overlap_fraction(&obj, &obj), 1.0);
    }
}

fn lone_block() -> SceneState {
    SceneState::new(vec![ObjectInstance::block(
        ObjectId(0),
        Color::Red,
        BlockSize::Big,
        Pose::new(0.3, 0.2, 0.0),
    )])
}

#[test]
fn certain_drop_fires_on_every_transport() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Transport {
        drop_probability: 1.0,
        substeps: 3,
    };
    let mut s = lone_block();
    let mut drops = 0;
    for i in 0..100 {
        let from = s.objects[0].pose;
        let to = if i % 2 == 0 { Pose::new(0.8, 0.3, 0.5) } else { Pose::new(0.2, 0.1, -0.5) };
        let ex = execute(&s, &Action::new(from, to), &BOUNDS, t, &mut rng);
        assert!(ex.executed);
        if ex.drop_event {
            drops += 1;
        }
        assert!(ex.state.objects[0].pose.distance_xy(&to) > 1e-9);
        s = ex.state;
    }
    assert_eq!(drops, 100);
}

#[test]
fn pose_tolerance_examples() {
    let tol = PoseTolerance::default();
    let target = Pose::new(0.5, 0.25, 0.0);
    assert!(pose_within(&target, &target, &tol));
    assert!(pose_within(&Pose::new(0.509, 0.25, 0.0), &target, &tol));
    assert!(!pose_within(&Pose::new(0.511, 0.25, 0.0), &target, &tol));
    assert!(pose_within(&Pose::new(0.5, 0.25, PI), &target, &tol));
    let strict = PoseTolerance {
        square_symmetry: false,
        ..tol
    };
    assert!(!pose_within(&Pose::new(0.5, 0.25, PI), &target, &strict));
}

#[test]
fn half_overlap_is_not_inside_at_threshold_one_half() {
    // a small block straddling the left edge of a zone: exactly half its footprint inside
    let zone_x = 0.5;
    let edge = zone_x - ZONE_EDGE / 2.0;
    let s = SceneState::new(vec![
        ObjectInstance::zone(ObjectId(0), Color::Blue, zone_x, 0.25),
        ObjectInstance::block(ObjectId(1), Color::Blue, BlockSize::Small, Pose::new(edge, 0.25, 0.0)),
    ]);
    let f = overlap_fraction(&s.objects[1].footprint(), &s.objects[0].footprint());
    assert!((f - 0.5).abs() < 1e-12, "{f}");
    assert!(!zone_match(&s, ObjectId(1), ObjectId(0), 0.5).unwrap());
    assert!(zone_match(&s, ObjectId(1), ObjectId(0), 0.49).unwrap());
}
