use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::{Pose, Rect};

pub const BIG_BLOCK_EDGE: f64 = 0.04;
pub const SMALL_BLOCK_EDGE: f64 = 0.02;
pub const BOWL_DIAMETER: f64 = 0.12;
pub const ZONE_EDGE: f64 = 0.12;
/// Bowls are modeled as shallow dishes; blocks inside rest on the rim height.
pub const BOWL_HEIGHT: f64 = 0.005;
pub const ZONE_HEIGHT: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Block,
    Bowl,
    Zone,
}

impl ObjectKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectKind::Block => "block",
            ObjectKind::Bowl => "bowl",
            ObjectKind::Zone => "zone",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "block" => Ok(ObjectKind::Block),
            "bowl" => Ok(ObjectKind::Bowl),
            "zone" => Ok(ObjectKind::Zone),
            other => Err(format!("unknown object kind `{other}`")),
        }
    }
}

/// The eleven-color palette shared by blocks, bowls and zones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Blue,
    Red,
    Green,
    Orange,
    Yellow,
    Purple,
    Pink,
    Cyan,
    Brown,
    Gray,
    White,
}

impl Color {
    pub const ALL: [Color; 11] = [
        Color::Blue,
        Color::Red,
        Color::Green,
        Color::Orange,
        Color::Yellow,
        Color::Purple,
        Color::Pink,
        Color::Cyan,
        Color::Brown,
        Color::Gray,
        Color::White,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Color::Blue => "blue",
            Color::Red => "red",
            Color::Green => "green",
            Color::Orange => "orange",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Pink => "pink",
            Color::Cyan => "cyan",
            Color::Brown => "brown",
            Color::Gray => "gray",
            Color::White => "white",
        }
    }

    pub fn rgb(&self) -> [u8; 3] {
        match self {
            Color::Blue => [78, 121, 167],
            Color::Red => [255, 87, 89],
            Color::Green => [89, 169, 79],
            Color::Orange => [242, 142, 43],
            Color::Yellow => [237, 201, 72],
            Color::Purple => [176, 122, 161],
            Color::Pink => [255, 157, 167],
            Color::Cyan => [118, 183, 178],
            Color::Brown => [156, 117, 95],
            Color::Gray => [186, 176, 172],
            Color::White => [255, 255, 255],
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Color::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown color `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSize {
    Small,
    Big,
}

impl BlockSize {
    pub const ALL: [BlockSize; 2] = [BlockSize::Small, BlockSize::Big];

    pub fn edge(&self) -> f64 {
        match self {
            BlockSize::Small => SMALL_BLOCK_EDGE,
            BlockSize::Big => BIG_BLOCK_EDGE,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BlockSize::Small => "small",
            BlockSize::Big => "big",
        }
    }
}

impl fmt::Display for BlockSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(BlockSize::Small),
            "big" | "large" => Ok(BlockSize::Big),
            other => Err(format!("unknown block size `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub kind: ObjectKind,
    pub color: Color,
    /// Only blocks carry a size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<BlockSize>,
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supported_by: Option<ObjectId>,
}

impl ObjectInstance {
    pub fn block(id: ObjectId, color: Color, size: BlockSize, pose: Pose) -> Self {
        Self {
            id,
            kind: ObjectKind::Block,
            color,
            size: Some(size),
            pose,
            supported_by: None,
        }
    }

    pub fn bowl(id: ObjectId, color: Color, x: f64, y: f64) -> Self {
        Self {
            id,
            kind: ObjectKind::Bowl,
            color,
            size: None,
            pose: Pose::new(x, y, 0.0),
            supported_by: None,
        }
    }

    pub fn zone(id: ObjectId, color: Color, x: f64, y: f64) -> Self {
        Self {
            id,
            kind: ObjectKind::Zone,
            color,
            size: None,
            pose: Pose::new(x, y, 0.0),
            supported_by: None,
        }
    }

    /// Side lengths of the axis-aligned footprint.
    pub fn extent(&self) -> (f64, f64) {
        match self.kind {
            ObjectKind::Block => {
                let e = self.size.unwrap_or(BlockSize::Big).edge();
                (e, e)
            }
            ObjectKind::Bowl => (BOWL_DIAMETER, BOWL_DIAMETER),
            ObjectKind::Zone => (ZONE_EDGE, ZONE_EDGE),
        }
    }

    pub fn footprint(&self) -> Rect {
        let (w, h) = self.extent();
        Rect::centered(self.pose.x, self.pose.y, w, h)
    }

    pub fn footprint_at(&self, x: f64, y: f64) -> Rect {
        let (w, h) = self.extent();
        Rect::centered(x, y, w, h)
    }

    /// Vertical extent of the object itself.
    pub fn height(&self) -> f64 {
        match self.kind {
            ObjectKind::Block => self.size.unwrap_or(BlockSize::Big).edge(),
            ObjectKind::Bowl => BOWL_HEIGHT,
            ObjectKind::Zone => ZONE_HEIGHT,
        }
    }

    pub fn is_block(&self) -> bool {
        self.kind == ObjectKind::Block
    }

    /// Blocks and bowls can carry other objects; zones are flat markings.
    pub fn can_support(&self) -> bool {
        matches!(self.kind, ObjectKind::Block | ObjectKind::Bowl)
    }
}
