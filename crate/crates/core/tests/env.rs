use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tabletop::env::{Environment, TabletopEnv};
use tabletop::tasks::{oracle_decompose, TaskId};
use tabletop::world::{Action, Pose, WorkspaceConfig};

fn solved_one(task: TaskId, seed: u64) -> (TabletopEnv, Vec<Action>) {
    let mut env = TabletopEnv::sample(task, WorkspaceConfig::default(), seed).unwrap();
    let plan = oracle_decompose(&env.state, &env.goal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let first = plan[0].1;
    let out = env.step(&first);
    assert!(out.reward > 0.0);
    (env, vec![first])
}

#[test]
fn undoing_a_sub_goal_gives_negative_reward() {
    let (mut env, done) = solved_one(TaskId::PutBlockIntoMatchingBowl, 3);
    let before = env.score();
    // pick the block straight back out of the bowl and put it somewhere empty
    let back = Action::new(done[0].place, Pose::new(0.02, 0.02, 0.0));
    let out = env.step(&back);
    assert!(out.executed);
    assert!(out.reward < 0.0, "{out:?}");
    assert!((env.score() - (before + 100.0 * out.reward)).abs() < 1e-9);
    assert!(!out.done);
}

#[test]
fn invalid_actions_cost_a_step_and_nothing_else() {
    let mut env = TabletopEnv::sample(TaskId::StackBlocksOfSameColor, WorkspaceConfig::default(), 2).unwrap();
    let scene = env.state.objects.clone();
    let out = env.step(&Action::new(Pose::new(5.0, 0.1, 0.0), Pose::new(0.1, 0.1, 0.0)));
    assert!(!out.executed);
    assert_eq!(out.reward, 0.0);
    assert_eq!(env.state.objects, scene);
    assert_eq!(env.state.time, 1);
}

#[test]
fn observations_only_render_on_request() {
    let mut env = TabletopEnv::sample(TaskId::PickAndPlacePrimitive, WorkspaceConfig::default(), 0).unwrap();
    let bare = env.observe(false);
    assert!(bare.color.is_none() && bare.depth.is_none());
    assert_eq!(bare.symbolic.unwrap().scene, env.state);
    let full = env.observe(true);
    assert!(full.color.is_some() && full.depth.is_some());
}

#[test]
fn task_ids_serialize_as_their_names() {
    for task in TaskId::ALL {
        let json = serde_json::to_string(&task).unwrap();
        assert_eq!(json, format!("\"{}\"", task.as_str()));
        assert_eq!(serde_json::from_str::<TaskId>(&json).unwrap(), task);
    }
    assert!(serde_json::from_str::<TaskId>("\"juggle-bowls\"").is_err());
}
