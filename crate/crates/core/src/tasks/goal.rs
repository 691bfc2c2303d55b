use serde::{Deserialize, Serialize};

use super::selector::{AbsoluteArea, Relation};
use crate::world::{
    overlap_fraction, pose_match, zone_match, ObjectId, Pose, PoseTolerance, Rect, SceneState, WorldError,
    DEFAULT_ZONE_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Pose,
    Zone,
}

/// Where a goal object has to end up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlaceTarget {
    /// Inside a zone or bowl.
    InRegion { region: ObjectId },
    /// Resting directly on a block, aligned with it.
    OnTopOf { base: ObjectId },
    InArea { area: AbsoluteArea },
    /// At a fixed offset from a reference object, aligned with it.
    Beside { reference: ObjectId, relation: Relation },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalTerm {
    Place { object: ObjectId, target: PlaceTarget },
    /// The occluder must no longer cover any of `hidden`.
    Clear { occluder: ObjectId, hidden: Vec<ObjectId> },
}

impl GoalTerm {
    pub fn match_mode(&self) -> MatchMode {
        match self {
            GoalTerm::Place { target, .. } => match target {
                PlaceTarget::InRegion { .. } | PlaceTarget::InArea { .. } => MatchMode::Zone,
                PlaceTarget::OnTopOf { .. } | PlaceTarget::Beside { .. } => MatchMode::Pose,
            },
            GoalTerm::Clear { .. } => MatchMode::Zone,
        }
    }

    pub fn is_place(&self) -> bool {
        matches!(self, GoalTerm::Place { .. })
    }

    pub fn object(&self) -> ObjectId {
        match self {
            GoalTerm::Place { object, .. } => *object,
            GoalTerm::Clear { occluder, .. } => *occluder,
        }
    }
}

/// Conjunction of goal terms with the tolerances used to evaluate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalCondition {
    pub terms: Vec<GoalTerm>,
    pub bounds: Rect,
    pub tolerance: PoseTolerance,
    pub zone_threshold: f64,
    /// Areas kept free for future placements.
    #[serde(default)]
    pub reserved: Vec<Rect>,
}

impl GoalCondition {
    pub fn new(terms: Vec<GoalTerm>, bounds: Rect) -> Self {
        Self {
            terms,
            bounds,
            tolerance: PoseTolerance::default(),
            zone_threshold: DEFAULT_ZONE_THRESHOLD,
            reserved: Vec::new(),
        }
    }

    pub fn total(&self) -> usize {
        self.terms.len()
    }

    pub fn place_terms(&self) -> usize {
        self.terms.iter().filter(|t| t.is_place()).count()
    }

    pub fn term_for(&self, object: ObjectId) -> Option<(usize, &GoalTerm)> {
        self.terms
            .iter()
            .enumerate()
            .find(|(_, t)| matches!(t, GoalTerm::Place { object: o, .. } if *o == object))
    }

    /// Pose a `Pose`-mode term asks for, in the current state.
    pub fn target_pose(&self, state: &SceneState, target: &PlaceTarget) -> Option<Pose> {
        match target {
            PlaceTarget::OnTopOf { base } => state.get(*base).map(|b| b.pose),
            PlaceTarget::Beside { reference, relation } => state.get(*reference).map(|r| relation.spot(&r.pose)),
            _ => None,
        }
    }

    pub fn term_satisfied(&self, state: &SceneState, term: &GoalTerm) -> Result<bool, WorldError> {
        match term {
            GoalTerm::Place { object, target } => {
                let obj = state.require(*object)?;
                match target {
                    PlaceTarget::InRegion { region } => zone_match(state, *object, *region, self.zone_threshold),
                    PlaceTarget::InArea { area } => {
                        Ok(overlap_fraction(&obj.footprint(), &area.rect(&self.bounds)) > self.zone_threshold)
                    }
                    PlaceTarget::OnTopOf { base } => {
                        let b = state.require(*base)?;
                        Ok(obj.supported_by == Some(*base) && pose_match(state, *object, &b.pose, &self.tolerance)?)
                    }
                    PlaceTarget::Beside { .. } => {
                        let spot = self.target_pose(state, target).ok_or(WorldError::NoSuchObject(*object))?;
                        Ok(pose_match(state, *object, &spot, &self.tolerance)?)
                    }
                }
            }
            GoalTerm::Clear { occluder, hidden } => {
                state.require(*occluder)?;
                Ok(hidden.iter().all(|&h| !state.covers(*occluder, h)))
            }
        }
    }

    pub fn satisfied_mask(&self, state: &SceneState) -> Vec<bool> {
        self.terms
            .iter()
            .map(|t| self.term_satisfied(state, t).unwrap_or(false))
            .collect()
    }

    pub fn satisfied_count(&self, state: &SceneState) -> usize {
        self.satisfied_mask(state).into_iter().filter(|&s| s).count()
    }

    pub fn satisfied_fraction(&self, state: &SceneState) -> f64 {
        if self.terms.is_empty() {
            return 1.0;
        }
        self.satisfied_count(state) as f64 / self.total() as f64
    }

    pub fn is_done(&self, state: &SceneState) -> bool {
        self.satisfied_count(state) == self.total()
    }

    /// `100 × satisfied / total`, computed so that whole percentages come out exact.
    pub fn score(&self, state: &SceneState) -> f64 {
        score_from_counts(self.satisfied_count(state), self.total())
    }

    /// Checks that every referenced object exists and has the right kind.
    pub fn validate(&self, state: &SceneState) -> Result<(), WorldError> {
        use crate::world::ObjectKind;
        let expect = |id: ObjectId, ok: &[ObjectKind], what: &'static str| -> Result<(), WorldError> {
            let o = state.require(id)?;
            if ok.contains(&o.kind) {
                Ok(())
            } else {
                Err(WorldError::WrongKind {
                    id,
                    expected: what,
                    found: o.kind,
                })
            }
        };
        for t in &self.terms {
            match t {
                GoalTerm::Place { object, target } => {
                    expect(*object, &[ObjectKind::Block], "block")?;
                    match target {
                        PlaceTarget::InRegion { region } => {
                            expect(*region, &[ObjectKind::Zone, ObjectKind::Bowl], "zone or bowl")?
                        }
                        PlaceTarget::OnTopOf { base } => expect(*base, &[ObjectKind::Block], "block")?,
                        PlaceTarget::Beside { reference, .. } => state.require(*reference).map(|_| ())?,
                        PlaceTarget::InArea { .. } => {}
                    }
                }
                GoalTerm::Clear { occluder, hidden } => {
                    expect(*occluder, &[ObjectKind::Block], "block")?;
                    for &h in hidden {
                        expect(h, &[ObjectKind::Block], "block")?;
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn score_from_counts(satisfied: usize, total: usize) -> f64 {
    if total == 0 {
        return 100.0;
    }
    (100 * satisfied) as f64 / total as f64
}
