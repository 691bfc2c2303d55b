use std::collections::BTreeSet;

use rand::Rng;

use super::goal::{GoalCondition, GoalTerm, PlaceTarget};
use super::selector::{AbsoluteArea, ObjectSelector, Relation, SubTask, TargetSelector};
use crate::world::{
    execute, wrap_angle, Action, ObjectId, ObjectInstance, ObjectKind, Pose, Rect, SceneState, Transport,
};

/// Offset of the corner placement slots from a zone or bowl center.
const REGION_SLOT_OFFSET: f64 = 0.03;
/// Pitch and edge margin of the placement grid used for areas and the table.
const GRID_PITCH: f64 = 0.05;
const GRID_MARGIN: f64 = 0.04;
/// Clearance required around a placement slot.
const SLOT_CLEARANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("goal already satisfied")]
    AlreadyDone,
    #[error("replan impossible: {0}")]
    ReplanImpossible(String),
    #[error("cannot resolve sub-task: {0}")]
    Unresolvable(String),
}

/// A valid next sub-task together with the object it moves.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub subtask: SubTask,
    pub object: ObjectId,
    /// Goal term the placement satisfies; `None` for relocations.
    pub term: Option<usize>,
}

fn describe(state: &SceneState, id: ObjectId) -> ObjectSelector {
    ObjectSelector::describe(state, id, true)
}

fn target_selector(state: &SceneState, target: &PlaceTarget) -> TargetSelector {
    match *target {
        PlaceTarget::InRegion { region } => TargetSelector::object(describe(state, region)),
        PlaceTarget::OnTopOf { base } => TargetSelector::object(describe(state, base)),
        PlaceTarget::InArea { area } => TargetSelector::Area { area },
        PlaceTarget::Beside { reference, relation } => TargetSelector::Relative {
            relation,
            reference: describe(state, reference),
        },
    }
}

/// `id` itself if clear, otherwise the clear blocks that must move first.
fn free_up(state: &SceneState, id: ObjectId) -> BTreeSet<ObjectId> {
    if state.is_clear(id) {
        BTreeSet::from([id])
    } else {
        state.clear_coverers(id)
    }
}

fn region_slots(region: &ObjectInstance) -> Vec<(f64, f64)> {
    let (x, y) = (region.pose.x, region.pose.y);
    let d = REGION_SLOT_OFFSET;
    let corners = [(x - d, y - d), (x + d, y - d), (x - d, y + d), (x + d, y + d)];
    if region.kind == ObjectKind::Bowl {
        std::iter::once((x, y)).chain(corners).collect()
    } else {
        corners.into_iter().chain(std::iter::once((x, y))).collect()
    }
}

fn grid_slots(area: &Rect) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut y = area.y0 + GRID_MARGIN;
    while y <= area.y1 - GRID_MARGIN + 1e-9 {
        let mut x = area.x0 + GRID_MARGIN;
        while x <= area.x1 - GRID_MARGIN + 1e-9 {
            out.push((x, y));
            x += GRID_PITCH;
        }
        y += GRID_PITCH;
    }
    out
}

fn footprint_clear(state: &SceneState, source: &ObjectInstance, x: f64, y: f64, blocks_only: bool, avoid: &[Rect]) -> bool {
    let r = source.footprint_at(x, y).inflate(SLOT_CLEARANCE);
    state
        .objects
        .iter()
        .filter(|o| o.id != source.id && (!blocks_only || o.is_block()))
        .all(|o| o.footprint().intersection_area(&r) <= 0.0)
        && avoid.iter().all(|a| a.intersection_area(&r) <= 0.0)
}

fn region_slot(state: &SceneState, source: &ObjectInstance, region: &ObjectInstance) -> Option<(f64, f64)> {
    region_slots(region)
        .into_iter()
        .find(|&(x, y)| footprint_clear(state, source, x, y, true, &[]))
}

fn area_slot(state: &SceneState, source: &ObjectInstance, rect: &Rect) -> Option<(f64, f64)> {
    grid_slots(rect)
        .into_iter()
        .find(|&(x, y)| footprint_clear(state, source, x, y, false, &[]))
}

fn table_slot(state: &SceneState, goal: &GoalCondition, source: &ObjectInstance) -> Option<(f64, f64)> {
    grid_slots(&goal.bounds)
        .into_iter()
        .find(|&(x, y)| footprint_clear(state, source, x, y, false, &goal.reserved))
}

fn beside_occupants(state: &SceneState, source: &ObjectInstance, reference: ObjectId, relation: Relation) -> Vec<ObjectId> {
    let Some(r) = state.get(reference) else {
        return Vec::new();
    };
    let spot = relation.spot(&r.pose);
    let rect = source.footprint_at(spot.x, spot.y).inflate(SLOT_CLEARANCE);
    state
        .overlapping(&rect)
        .filter(|o| o.id != source.id && o.id != reference && o.can_support())
        .map(|o| o.id)
        .collect()
}

/// Enumerates every sub-task that begins some valid completion from `state`.
pub fn next_candidates(state: &SceneState, goal: &GoalCondition) -> Result<Vec<Candidate>, OracleError> {
    let mask = goal.satisfied_mask(state);
    if mask.iter().all(|&s| s) {
        return Err(OracleError::AlreadyDone);
    }
    let mut ready = Vec::new();
    let mut blockers = BTreeSet::new();
    for (i, term) in goal.terms.iter().enumerate() {
        if mask[i] {
            continue;
        }
        match term {
            GoalTerm::Place { object, target } => {
                let Some(src) = state.get(*object) else {
                    continue;
                };
                if !state.is_clear(*object) {
                    blockers.extend(state.clear_coverers(*object));
                    continue;
                }
                let is_ready = match target {
                    PlaceTarget::InRegion { region } => {
                        let Some(reg) = state.get(*region) else { continue };
                        let ok = region_slot(state, src, reg).is_some();
                        if !ok {
                            for o in state.overlapping(&reg.footprint()).filter(|o| o.is_block() && o.id != *object) {
                                blockers.extend(free_up(state, o.id));
                            }
                        }
                        ok
                    }
                    PlaceTarget::InArea { area } => {
                        let rect = area.rect(&goal.bounds);
                        let ok = area_slot(state, src, &rect).is_some();
                        if !ok {
                            for o in state.overlapping(&rect).filter(|o| o.is_block() && o.id != *object) {
                                blockers.extend(free_up(state, o.id));
                            }
                        }
                        ok
                    }
                    PlaceTarget::OnTopOf { base } => {
                        if let Some((j, _)) = goal.term_for(*base) {
                            if !mask[j] {
                                continue;
                            }
                        }
                        let others = state.covering(*base).into_iter().any(|c| c != *object);
                        if others {
                            blockers.extend(state.clear_coverers(*base));
                        }
                        !others
                    }
                    PlaceTarget::Beside { reference, relation } => {
                        let occ = beside_occupants(state, src, *reference, *relation);
                        for &o in &occ {
                            blockers.extend(free_up(state, o));
                        }
                        occ.is_empty()
                    }
                };
                if is_ready {
                    ready.push(Candidate {
                        subtask: SubTask::new(describe(state, *object), target_selector(state, target)),
                        object: *object,
                        term: Some(i),
                    });
                }
            }
            GoalTerm::Clear { occluder, .. } => {
                if state.get(*occluder).is_some() {
                    blockers.extend(free_up(state, *occluder));
                }
            }
        }
    }
    let moving: BTreeSet<ObjectId> = ready.iter().map(|c| c.object).collect();
    for x in blockers {
        let settled = goal.term_for(x).is_some_and(|(j, _)| mask[j]);
        let block = state.get(x).is_some_and(|o| o.is_block());
        if moving.contains(&x) || settled || !block || !state.is_clear(x) {
            continue;
        }
        ready.push(Candidate {
            subtask: SubTask::new(describe(state, x), TargetSelector::Table),
            object: x,
            term: None,
        });
    }
    if ready.is_empty() {
        return Err(OracleError::ReplanImpossible(format!(
            "{} of {} goal terms satisfied and no sub-task can make progress",
            mask.iter().filter(|&&s| s).count(),
            mask.len()
        )));
    }
    Ok(ready)
}

/// The set of sub-tasks that start at least one valid completion from `state`.
pub fn valid_next_subtasks(state: &SceneState, goal: &GoalCondition) -> Result<Vec<SubTask>, OracleError> {
    Ok(next_candidates(state, goal)?.into_iter().map(|c| c.subtask).collect())
}

fn resolve_one<'s>(
    state: &'s SceneState,
    sel: &ObjectSelector,
    exclude: Option<ObjectId>,
) -> Result<&'s ObjectInstance, OracleError> {
    let ids: Vec<ObjectId> = sel.resolve(state).into_iter().filter(|&i| Some(i) != exclude).collect();
    let pick = ids
        .iter()
        .copied()
        .find(|&i| state.is_clear(i))
        .or_else(|| ids.first().copied())
        .ok_or_else(|| OracleError::Unresolvable(format!("nothing matches `{}`", sel.phrase())))?;
    Ok(state.get(pick).expect("resolved id exists"))
}

/// Expert pick-and-place for `subtask` in `state`, computed from the sub-task's structure.
pub fn oracle_action(state: &SceneState, goal: &GoalCondition, subtask: &SubTask) -> Result<Action, OracleError> {
    if subtask.source.kind != ObjectKind::Block {
        return Err(OracleError::Unresolvable(format!("cannot pick a {}", subtask.source.kind)));
    }
    let src = resolve_one(state, &subtask.source, None)?;
    let yaw = wrap_angle(src.pose.yaw);
    let pick = Pose::new(src.pose.x, src.pose.y, yaw);
    let place = match &subtask.target {
        TargetSelector::Object { object } => {
            let t = resolve_one(state, object, Some(src.id))?;
            match t.kind {
                ObjectKind::Block => Pose::new(t.pose.x, t.pose.y, wrap_angle(t.pose.yaw)),
                _ => {
                    let (x, y) = region_slot(state, src, t).unwrap_or((t.pose.x, t.pose.y));
                    Pose::new(x, y, yaw)
                }
            }
        }
        TargetSelector::Area { area } => {
            let rect = area.rect(&goal.bounds);
            let (x, y) = area_slot(state, src, &rect).unwrap_or_else(|| rect.center());
            Pose::new(x, y, yaw)
        }
        TargetSelector::Relative { relation, reference } => {
            let r = resolve_one(state, reference, Some(src.id))?;
            let spot = relation.spot(&r.pose);
            Pose::new(spot.x, spot.y, wrap_angle(spot.yaw))
        }
        TargetSelector::Table => {
            let (x, y) = table_slot(state, goal, src)
                .ok_or_else(|| OracleError::ReplanImpossible("no free table spot".to_string()))?;
            Pose::new(x, y, yaw)
        }
    };
    let (x, y) = goal.bounds.clamp_point(place.x, place.y);
    Ok(Action::new(pick, Pose::new(x, y, place.yaw)))
}

/// Full expert plan from `state`: repeatedly picks a valid next sub-task at random and executes it
/// without disturbances.
pub fn oracle_decompose<R: Rng + ?Sized>(
    state: &SceneState,
    goal: &GoalCondition,
    rng: &mut R,
) -> Result<Vec<(SubTask, Action)>, OracleError> {
    let mut cur = state.clone();
    let mut plan = Vec::new();
    let limit = 4 * goal.total() + 20;
    loop {
        let cands = match next_candidates(&cur, goal) {
            Ok(c) => c,
            Err(OracleError::AlreadyDone) => return Ok(plan),
            Err(e) => return Err(e),
        };
        if plan.len() >= limit {
            return Err(OracleError::ReplanImpossible(format!("no completion within {limit} steps")));
        }
        let choice = cands[rng.random_range(0..cands.len())].subtask.clone();
        let action = oracle_action(&cur, goal, &choice)?;
        let ex = execute(&cur, &action, &goal.bounds, Transport::RELIABLE, rng);
        cur = ex.state;
        plan.push((choice, action));
    }
}

/// Every well-formed sub-task that makes sense in `state`: each block onto or into every other
/// object, into each area, onto the table, or beside a goal reference.
pub fn subtask_space(state: &SceneState, goal: &GoalCondition) -> Vec<SubTask> {
    let references: BTreeSet<ObjectId> = goal
        .terms
        .iter()
        .filter_map(|t| match t {
            GoalTerm::Place {
                target: PlaceTarget::Beside { reference, .. },
                ..
            } => Some(*reference),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    for src in state.blocks() {
        let source = describe(state, src.id);
        for t in state.objects.iter().filter(|o| o.id != src.id) {
            out.push(SubTask::new(source.clone(), TargetSelector::object(describe(state, t.id))));
        }
        for area in AbsoluteArea::ALL {
            out.push(SubTask::new(source.clone(), TargetSelector::Area { area }));
        }
        out.push(SubTask::new(source.clone(), TargetSelector::Table));
        for &r in references.iter().filter(|&&r| r != src.id) {
            for relation in Relation::ALL {
                out.push(SubTask::new(
                    source.clone(),
                    TargetSelector::Relative {
                        relation,
                        reference: describe(state, r),
                    },
                ));
            }
        }
    }
    out
}
