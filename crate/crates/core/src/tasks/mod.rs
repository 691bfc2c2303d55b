//! The 23-task catalog: scene samplers, goal predicates, the sub-task grammar and the rule-based
//! oracle that decomposes goals into dependency-ordered pick-and-place steps.

mod catalog;
mod goal;
mod oracle;
mod sampler;
mod selector;

pub use catalog::{catalog_manifest, CountRange, SamplerParams, Split, TaskGroup, TaskId, TaskSpec, UnknownTask};
pub use goal::{score_from_counts, GoalCondition, GoalTerm, MatchMode, PlaceTarget};
pub use oracle::{
    next_candidates, oracle_action, oracle_decompose, subtask_space, valid_next_subtasks, Candidate, OracleError,
};
pub use sampler::{derangement, sample_task, SamplerError, TaskInstance, SCENE_ATTEMPTS};
pub use selector::{
    subtask_equivalent, AbsoluteArea, ObjectSelector, ParseError, RegionKey, Relation, SubTask, TargetSelector, Verb,
    RELATIVE_OFFSET,
};
