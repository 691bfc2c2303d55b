use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::goal::MatchMode;

/// Whether a learned policy is expected to have trained on the task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Seen,
    Unseen,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Seen => "seen",
            Split::Unseen => "unseen",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seen" => Ok(Split::Seen),
            "unseen" => Ok(Split::Unseen),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

impl From<TaskId> for &'static str {
    fn from(t: TaskId) -> Self {
        t.as_str()
    }
}

impl TryFrom<String> for TaskId {
    type Error = UnknownTask;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Where a task comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskGroup {
    Primitive,
    Benchmark,
    Additional,
}

macro_rules! tasks {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(into = "&'static str", try_from = "String")]
        pub enum TaskId {
            $($variant),*
        }

        impl TaskId {
            pub const ALL: [TaskId; 23] = [$(TaskId::$variant),*];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $(TaskId::$variant => $name),*
                }
            }
        }

        impl FromStr for TaskId {
            type Err = UnknownTask;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(TaskId::$variant),)*
                    other => Err(UnknownTask(other.to_string())),
                }
            }
        }
    };
}

tasks! {
    PickAndPlacePrimitive => "pick-and-place-primitive",
    PickAndPlacePrimitiveWithSize => "pick-and-place-primitive-with-size",
    PickAndPlacePrimitiveWithAbsolutePosition => "pick-and-place-primitive-with-absolute-position",
    PutBlockIntoMatchingBowl => "put-block-into-matching-bowl",
    StackSmallerOverBiggerWithSameColor => "stack-smaller-over-bigger-with-same-color",
    StackBlockInAbsoluteArea => "stack-block-in-absolute-area",
    PutEvenBlocksInSameColorZone => "put-even-blocks-in-same-color-zone",
    PutBlockIntoMismatchingBowl => "put-block-into-mismatching-bowl",
    StackBlocksOfSameSize => "stack-blocks-of-same-size",
    StackBlocksWithAlternateColor => "stack-blocks-with-alternate-color",
    StackSmallerOverBiggerWithSameColorInSameColorZone => "stack-smaller-over-bigger-with-same-color-in-same-color-zone",
    MoveBlocksBetweenAbsolutePositions => "move-blocks-between-absolute-positions",
    StackBlocksOfSameColor => "stack-blocks-of-same-color",
    PutBlockIntoMismatchingZone => "put-block-into-mismatching-zone",
    PutHiddenBlocksInTwoLayerTowersIntoMatchingBowls => "put-hidden-blocks-in-two-layer-towers-into-matching-bowls",
    PutHiddenBlocksInTwoLayerTowersIntoMismatchingBowls => "put-hidden-blocks-in-two-layer-towers-into-mismatching-bowls",
    PutHiddenBlocksInThreeLayerTowersIntoMatchingBowls => "put-hidden-blocks-in-three-layer-towers-into-matching-bowls",
    PutHiddenBlocksInPyramidIntoMatchingBowls => "put-hidden-blocks-in-pyramid-into-matching-bowls",
    StackBiggerOverSmallerWithSameColorInSameColorZone => "stack-bigger-over-smaller-with-same-color-in-same-color-zone",
    StackAllBlocksOnAZone => "stack-all-blocks-on-a-zone",
    StackBlocksByRelativePosition => "stack-blocks-by-relative-position",
    MoveBlocksBetweenAbsolutePositionsBySize => "move-blocks-between-absolute-positions-by-size",
    MoveBlocksBetweenAbsolutePositionsByColor => "move-blocks-between-absolute-positions-by-color",
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task `{0}`")]
pub struct UnknownTask(pub String);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TaskId {
    pub fn group(&self) -> TaskGroup {
        use TaskId::*;
        match self {
            PickAndPlacePrimitive | PickAndPlacePrimitiveWithSize | PickAndPlacePrimitiveWithAbsolutePosition => {
                TaskGroup::Primitive
            }
            PutBlockIntoMatchingBowl
            | StackSmallerOverBiggerWithSameColor
            | StackBlockInAbsoluteArea
            | PutEvenBlocksInSameColorZone
            | PutBlockIntoMismatchingBowl
            | StackBlocksOfSameSize
            | StackBlocksWithAlternateColor
            | StackSmallerOverBiggerWithSameColorInSameColorZone
            | MoveBlocksBetweenAbsolutePositions
            | StackBlocksOfSameColor => TaskGroup::Benchmark,
            _ => TaskGroup::Additional,
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.group() == TaskGroup::Primitive
    }

    pub fn is_long_horizon(&self) -> bool {
        !self.is_primitive()
    }

    pub fn long_horizon() -> impl Iterator<Item = TaskId> {
        TaskId::ALL.into_iter().filter(TaskId::is_long_horizon)
    }

    /// Benchmark letter (A-K) for tasks that have one.
    pub fn letter(&self) -> Option<char> {
        use TaskId::*;
        Some(match self {
            PickAndPlacePrimitive => 'A',
            PutBlockIntoMatchingBowl => 'B',
            StackSmallerOverBiggerWithSameColor => 'C',
            StackBlockInAbsoluteArea => 'D',
            PutEvenBlocksInSameColorZone => 'E',
            PutBlockIntoMismatchingBowl => 'F',
            StackBlocksOfSameSize => 'G',
            StackBlocksWithAlternateColor => 'H',
            StackSmallerOverBiggerWithSameColorInSameColorZone => 'I',
            MoveBlocksBetweenAbsolutePositions => 'J',
            StackBlocksOfSameColor => 'K',
            _ => return None,
        })
    }

    pub fn from_letter(letter: char) -> Option<TaskId> {
        TaskId::ALL.into_iter().find(|t| t.letter() == Some(letter.to_ascii_uppercase()))
    }

    /// Benchmark tasks F-K are held out; everything else is training material.
    pub fn split(&self) -> Split {
        match self.letter() {
            Some('F'..='K') => Split::Unseen,
            _ => Split::Seen,
        }
    }

    pub fn instruction_template(&self) -> &'static str {
        use TaskId::*;
        match self {
            PickAndPlacePrimitive => "Put the [OBJ] on the [OBJ].",
            PickAndPlacePrimitiveWithSize => "Put the [SIZE] [OBJ] on the [SIZE] [OBJ].",
            PickAndPlacePrimitiveWithAbsolutePosition => "Put the [OBJ] on the [ABS_POS].",
            PutBlockIntoMatchingBowl => "Put the blocks in the bowls with matching colors.",
            StackSmallerOverBiggerWithSameColor => "Stack smaller blocks over bigger blocks of the same color.",
            StackBlockInAbsoluteArea => "Stack all the blocks in the [ABS_POS] area.",
            PutEvenBlocksInSameColorZone => "Move all blocks of a color that occur in even numbers.",
            PutBlockIntoMismatchingBowl => "Put the blocks in the bowls with mismatching colors.",
            StackBlocksOfSameSize => "Stack blocks of the same size.",
            StackBlocksWithAlternateColor => "Stack blocks in alternate colors.",
            StackSmallerOverBiggerWithSameColorInSameColorZone => {
                "Stack blocks of the same color in the zone with same color, with the bigger blocks underneath."
            }
            MoveBlocksBetweenAbsolutePositions => "Move all the blocks in the [ABS_POS] area to the [ABS_POS] area.",
            StackBlocksOfSameColor => "Stack blocks of the same color.",
            PutBlockIntoMismatchingZone => "Put the blocks in the zones with mismatching colors.",
            PutHiddenBlocksInTwoLayerTowersIntoMatchingBowls => {
                "Put all the hidden blocks in the two-layer stacked towers into the bowls with matching colors."
            }
            PutHiddenBlocksInTwoLayerTowersIntoMismatchingBowls => {
                "Put all the hidden blocks in the two-layer stacked towers into the bowls with mismatching colors."
            }
            PutHiddenBlocksInThreeLayerTowersIntoMatchingBowls => {
                "Put all the hidden blocks in the three-layer stacked towers into the bowls with matching colors."
            }
            PutHiddenBlocksInPyramidIntoMatchingBowls => {
                "Put all the hidden blocks on the first layer of the pyramid into the bowls with matching colors."
            }
            StackBiggerOverSmallerWithSameColorInSameColorZone => {
                "Stack blocks of the same color in the zone with same color, with the smaller blocks underneath."
            }
            StackAllBlocksOnAZone => "Stack all the blocks on the [COLOR] zone.",
            StackBlocksByRelativePosition => {
                "Stack all the blocks on the [REL_POS] of the [COLOR] block on the [COLOR] zone."
            }
            MoveBlocksBetweenAbsolutePositionsBySize => {
                "Move all the [SIZE] blocks in the [ABS_POS] area to the [ABS_POS] area."
            }
            MoveBlocksBetweenAbsolutePositionsByColor => {
                "Move all the [COLOR] blocks in the [ABS_POS] area to the [ABS_POS] area."
            }
        }
    }

    /// Match modes used by the task's placement sub-goals.
    pub fn match_modes(&self) -> &'static [MatchMode] {
        use TaskId::*;
        match self {
            PickAndPlacePrimitive => &[MatchMode::Pose, MatchMode::Zone],
            PickAndPlacePrimitiveWithSize
            | StackSmallerOverBiggerWithSameColor
            | StackBlocksOfSameSize
            | StackBlocksWithAlternateColor
            | StackBlocksOfSameColor => &[MatchMode::Pose],
            PickAndPlacePrimitiveWithAbsolutePosition
            | PutBlockIntoMatchingBowl
            | PutEvenBlocksInSameColorZone
            | PutBlockIntoMismatchingBowl
            | MoveBlocksBetweenAbsolutePositions
            | PutBlockIntoMismatchingZone
            | PutHiddenBlocksInTwoLayerTowersIntoMatchingBowls
            | PutHiddenBlocksInTwoLayerTowersIntoMismatchingBowls
            | PutHiddenBlocksInThreeLayerTowersIntoMatchingBowls
            | PutHiddenBlocksInPyramidIntoMatchingBowls
            | MoveBlocksBetweenAbsolutePositionsBySize
            | MoveBlocksBetweenAbsolutePositionsByColor => &[MatchMode::Zone],
            StackBlockInAbsoluteArea
            | StackSmallerOverBiggerWithSameColorInSameColorZone
            | StackBiggerOverSmallerWithSameColorInSameColorZone
            | StackAllBlocksOnAZone
            | StackBlocksByRelativePosition => &[MatchMode::Zone, MatchMode::Pose],
        }
    }

    /// Tasks whose goal objects start underneath other blocks.
    pub fn has_occluders(&self) -> bool {
        use TaskId::*;
        matches!(
            self,
            PutHiddenBlocksInTwoLayerTowersIntoMatchingBowls
                | PutHiddenBlocksInTwoLayerTowersIntoMismatchingBowls
                | PutHiddenBlocksInThreeLayerTowersIntoMatchingBowls
                | PutHiddenBlocksInPyramidIntoMatchingBowls
        )
    }

    /// The catalog listing printed alongside usage errors.
    pub fn catalog_listing() -> String {
        TaskId::ALL
            .iter()
            .map(|t| format!("  {}  {t}\n", t.letter().unwrap_or(' ')))
            .collect()
    }
}

/// Ranges the scene sampler draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub blocks: CountRange,
    pub bowls: CountRange,
    pub zones: CountRange,
}

impl TaskId {
    pub fn sampler_params(&self) -> SamplerParams {
        use TaskId::*;
        let r = |min, max| CountRange { min, max };
        let (blocks, bowls, zones) = match self {
            PickAndPlacePrimitive => (r(2, 4), r(0, 2), r(0, 2)),
            PickAndPlacePrimitiveWithSize => (r(4, 5), r(0, 1), r(0, 1)),
            PickAndPlacePrimitiveWithAbsolutePosition => (r(2, 4), r(0, 1), r(0, 1)),
            PutBlockIntoMatchingBowl => (r(4, 8), r(2, 4), r(0, 0)),
            StackSmallerOverBiggerWithSameColor => (r(4, 8), r(0, 0), r(0, 0)),
            StackBlockInAbsoluteArea => (r(4, 6), r(0, 0), r(0, 0)),
            PutEvenBlocksInSameColorZone => (r(4, 8), r(0, 0), r(2, 4)),
            PutBlockIntoMismatchingBowl => (r(2, 4), r(2, 4), r(0, 0)),
            StackBlocksOfSameSize => (r(4, 8), r(0, 0), r(0, 0)),
            StackBlocksWithAlternateColor => (r(4, 6), r(0, 0), r(0, 0)),
            StackSmallerOverBiggerWithSameColorInSameColorZone => (r(4, 8), r(0, 0), r(2, 4)),
            MoveBlocksBetweenAbsolutePositions => (r(3, 7), r(0, 0), r(0, 0)),
            StackBlocksOfSameColor => (r(4, 8), r(0, 0), r(0, 0)),
            PutBlockIntoMismatchingZone => (r(2, 4), r(0, 0), r(2, 4)),
            PutHiddenBlocksInTwoLayerTowersIntoMatchingBowls => (r(4, 8), r(2, 4), r(0, 0)),
            PutHiddenBlocksInTwoLayerTowersIntoMismatchingBowls => (r(4, 8), r(2, 4), r(0, 0)),
            PutHiddenBlocksInThreeLayerTowersIntoMatchingBowls => (r(6, 6), r(4, 4), r(0, 0)),
            PutHiddenBlocksInPyramidIntoMatchingBowls => (r(6, 6), r(3, 3), r(0, 0)),
            StackBiggerOverSmallerWithSameColorInSameColorZone => (r(4, 8), r(0, 0), r(2, 4)),
            StackAllBlocksOnAZone => (r(4, 6), r(0, 0), r(1, 3)),
            StackBlocksByRelativePosition => (r(4, 6), r(0, 0), r(1, 1)),
            MoveBlocksBetweenAbsolutePositionsBySize => (r(4, 8), r(0, 0), r(0, 0)),
            MoveBlocksBetweenAbsolutePositionsByColor => (r(4, 8), r(0, 0), r(0, 0)),
        };
        SamplerParams { blocks, bowls, zones }
    }
}

/// Machine-readable catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub letter: Option<char>,
    pub split: Split,
    pub group: TaskGroup,
    pub instruction_template: String,
    pub match_modes: Vec<MatchMode>,
    pub sampler: SamplerParams,
}

impl TaskSpec {
    pub fn of(task: TaskId) -> Self {
        Self {
            task_id: task.as_str().to_string(),
            letter: task.letter(),
            split: task.split(),
            group: task.group(),
            instruction_template: task.instruction_template().to_string(),
            match_modes: task.match_modes().to_vec(),
            sampler: task.sampler_params(),
        }
    }
}

/// The full catalog in declaration order.
pub fn catalog_manifest() -> Vec<TaskSpec> {
    TaskId::ALL.into_iter().map(TaskSpec::of).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_twenty_three_unique_tasks() {
        let names: std::collections::BTreeSet<_> = TaskId::ALL.iter().map(|t| t.as_str()).collect();
        assert_eq!(names.len(), 23);
        assert_eq!(TaskId::long_horizon().count(), 20);
        for t in TaskId::ALL {
            assert_eq!(t.as_str().parse::<TaskId>().unwrap(), t);
        }
    }

    #[test]
    fn unseen_split_is_f_through_k() {
        let unseen: Vec<char> = TaskId::ALL
            .iter()
            .filter(|t| t.split() == Split::Unseen)
            .map(|t| t.letter().unwrap())
            .collect();
        assert_eq!(unseen, vec!['F', 'G', 'H', 'I', 'J', 'K']);
        assert_eq!(TaskId::from_letter('k'), Some(TaskId::StackBlocksOfSameColor));
    }

    #[test]
    fn manifest_serializes() {
        let json = serde_json::to_string(&catalog_manifest()).unwrap();
        assert!(json.contains("put-block-into-matching-bowl"));
        assert!(json.contains("\"split\":\"unseen\""));
    }
}
