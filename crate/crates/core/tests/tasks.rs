use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tabletop::tasks::{
    oracle_action, oracle_decompose, sample_task, subtask_space, valid_next_subtasks, GoalTerm, PlaceTarget, Split,
    SubTask, TargetSelector, TaskId, TaskInstance,
};
use tabletop::world::{execute, Action, Color, ObjectId, Rect, SceneState, Transport};

const BOUNDS: Rect = Rect::new(0.0, 0.0, 1.0, 0.5);

fn instance(task: TaskId, seed: u64) -> TaskInstance {
    sample_task(task, &BOUNDS, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn apply(state: &SceneState, action: &Action) -> SceneState {
    execute(state, action, &BOUNDS, Transport::RELIABLE, &mut ChaCha8Rng::seed_from_u64(0)).state
}

/// The object each step of a plan moves, resolved in the state the step starts from.
fn moved_objects(inst: &TaskInstance, plan: &[(SubTask, Action)]) -> Vec<ObjectId> {
    let mut s = inst.scene.clone();
    plan.iter()
        .map(|(_, a)| {
            let id = s.topmost_at(a.pick.x, a.pick.y).expect("pick hits an object");
            s = apply(&s, a);
            id
        })
        .collect()
}

#[test]
fn every_task_is_solvable_over_a_thousand_seeds() {
    for task in TaskId::ALL {
        for seed in 0..1000 {
            let inst = instance(task, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let plan = oracle_decompose(&inst.scene, &inst.goal, &mut rng)
                .unwrap_or_else(|e| panic!("{task} seed {seed}: {e}"));
            let mut s = inst.scene.clone();
            for (_, a) in &plan {
                s = apply(&s, a);
            }
            assert_eq!(inst.goal.satisfied_fraction(&s), 1.0, "{task} seed {seed}");

            // occluders with no goal of their own have to be parked on the table first
            let occluders = inst
                .scene
                .blocks()
                .filter(|b| inst.scene.blocks().any(|o| inst.scene.covers(b.id, o.id)))
                .filter(|b| inst.goal.term_for(b.id).is_none())
                .count();
            let relocations = plan.iter().filter(|(st, _)| st.target == TargetSelector::Table).count();
            assert_eq!(relocations, occluders, "{task} seed {seed}");
            assert_eq!(plan.len(), inst.goal.place_terms() + relocations, "{task} seed {seed}");
            assert_eq!(plan.len(), inst.goal.total(), "{task} seed {seed}");
        }
    }
}

#[test]
fn primitive_is_a_single_sub_goal() {
    for seed in 0..50 {
        let inst = instance(TaskId::PickAndPlacePrimitive, seed);
        assert_eq!(inst.goal.total(), 1);
        let plan = oracle_decompose(&inst.scene, &inst.goal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(plan.len(), 1);
    }
}

#[test]
fn bases_are_placed_before_what_stacks_on_them() {
    for task in [
        TaskId::StackSmallerOverBiggerWithSameColor,
        TaskId::StackSmallerOverBiggerWithSameColorInSameColorZone,
        TaskId::StackBlocksOfSameColor,
        TaskId::StackBlocksOfSameSize,
        TaskId::StackBlocksWithAlternateColor,
        TaskId::StackAllBlocksOnAZone,
    ] {
        for seed in 0..100 {
            let inst = instance(task, seed);
            let plan = oracle_decompose(&inst.scene, &inst.goal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let moved = moved_objects(&inst, &plan);
            // last time each object is moved
            let placed: BTreeMap<ObjectId, usize> = moved.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            for t in &inst.goal.terms {
                if let GoalTerm::Place {
                    object,
                    target: PlaceTarget::OnTopOf { base },
                } = t
                {
                    if let (Some(&b), Some(&o)) = (placed.get(base), placed.get(object)) {
                        assert!(b < o, "{task} seed {seed}: base {base} placed at {b}, {object} at {o}");
                    }
                    if task == TaskId::StackSmallerOverBiggerWithSameColor {
                        let (big, small) = (inst.scene.get(*base).unwrap(), inst.scene.get(*object).unwrap());
                        assert!(big.size.unwrap().edge() > small.size.unwrap().edge());
                        assert_eq!(big.color, small.color);
                    }
                }
            }
        }
    }
}

#[test]
fn hidden_blocks_are_uncovered_before_retrieval() {
    for task in TaskId::ALL.into_iter().filter(|t| t.as_str().starts_with("put-hidden")) {
        for seed in 0..100 {
            let inst = instance(task, seed);
            let plan = oracle_decompose(&inst.scene, &inst.goal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut s = inst.scene.clone();
            for (_, a) in &plan {
                let id = s.topmost_at(a.pick.x, a.pick.y).unwrap();
                assert!(s.is_clear(id), "{task} seed {seed}: picked covered block {id}");
                s = apply(&s, a);
            }
        }
    }
}

#[test]
fn even_task_moves_only_colors_with_even_counts() {
    for seed in 0..200 {
        let inst = instance(TaskId::PutEvenBlocksInSameColorZone, seed);
        let mut counts: BTreeMap<Color, usize> = BTreeMap::new();
        for b in inst.scene.blocks() {
            *counts.entry(b.color).or_default() += 1;
        }
        let plan = oracle_decompose(&inst.scene, &inst.goal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!(!plan.is_empty());
        for id in moved_objects(&inst, &plan) {
            let color = inst.scene.get(id).unwrap().color;
            assert_eq!(counts[&color] % 2, 0, "seed {seed}: moved a {color:?} block");
        }
    }
}

#[test]
fn split_is_only_a_label() {
    // seen and unseen tasks go through the same sampler and the same solver
    for task in TaskId::ALL {
        let inst = instance(task, 3);
        assert_eq!(inst.task, task);
        let expected = if matches!(task.letter(), Some('F'..='K')) { Split::Unseen } else { Split::Seen };
        assert_eq!(task.split(), expected);
    }
}

/// A mid-episode state: the scene after a random prefix of an expert plan.
fn mid_state(task: TaskId, seed: u64) -> (TaskInstance, SceneState) {
    let inst = instance(task, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = oracle_decompose(&inst.scene, &inst.goal, &mut rng).unwrap();
    let k = rng.random_range(0..plan.len());
    let mut s = inst.scene.clone();
    for (_, a) in &plan[..k] {
        s = apply(&s, a);
    }
    (inst, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn valid_set_contains_the_decomposition_head(task in 0usize..23, seed in any::<u64>(), dseed in any::<u64>()) {
        let task = TaskId::ALL[task];
        let (inst, s) = mid_state(task, seed);
        let valid = valid_next_subtasks(&s, &inst.goal).unwrap();
        let plan = oracle_decompose(&s, &inst.goal, &mut ChaCha8Rng::seed_from_u64(dseed)).unwrap();
        prop_assert!(valid.iter().any(|v| v.structurally_equal(&plan[0].0)));
    }

    #[test]
    fn every_valid_choice_still_completes(task in 0usize..23, seed in any::<u64>()) {
        let task = TaskId::ALL[task];
        let (inst, s) = mid_state(task, seed);
        for st in valid_next_subtasks(&s, &inst.goal).unwrap() {
            let next = apply(&s, &oracle_action(&s, &inst.goal, &st).unwrap());
            let rest = oracle_decompose(&next, &inst.goal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut cur = next;
            for (_, a) in &rest {
                cur = apply(&cur, a);
            }
            prop_assert_eq!(inst.goal.satisfied_fraction(&cur), 1.0, "{} after {}", task, st);
        }
    }

    #[test]
    fn sub_task_text_round_trips(task in 0usize..23, seed in any::<u64>()) {
        let task = TaskId::ALL[task];
        let (inst, s) = mid_state(task, seed);
        for st in subtask_space(&s, &inst.goal) {
            let parsed = SubTask::parse(&st.text).unwrap();
            prop_assert_eq!(&parsed.text, &st.text);
            let alt = SubTask::parse(&st.alternate_text()).unwrap();
            prop_assert!(alt.structurally_equal(&parsed), "{} vs {}", st.text, st.alternate_text());
            if st.source.id.is_none() {
                prop_assert!(parsed.structurally_equal(&st));
            }
        }
    }
}
