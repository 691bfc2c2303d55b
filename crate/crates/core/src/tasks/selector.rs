use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::world::{BlockSize, Color, ObjectId, ObjectKind, Pose, Rect, SceneState};

/// Center-to-center distance used by relative placements.
pub const RELATIVE_OFFSET: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbsoluteArea {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl AbsoluteArea {
    pub const ALL: [AbsoluteArea; 4] = [
        AbsoluteArea::TopLeft,
        AbsoluteArea::TopRight,
        AbsoluteArea::BottomLeft,
        AbsoluteArea::BottomRight,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AbsoluteArea::TopLeft => "top-left",
            AbsoluteArea::TopRight => "top-right",
            AbsoluteArea::BottomLeft => "bottom-left",
            AbsoluteArea::BottomRight => "bottom-right",
        }
    }

    /// Quadrant of `bounds`; "top" is the half nearer y = y0 (raster row 0).
    pub fn rect(&self, bounds: &Rect) -> Rect {
        let (cx, cy) = bounds.center();
        let (x0, x1) = match self {
            AbsoluteArea::TopLeft | AbsoluteArea::BottomLeft => (bounds.x0, cx),
            AbsoluteArea::TopRight | AbsoluteArea::BottomRight => (cx, bounds.x1),
        };
        let (y0, y1) = match self {
            AbsoluteArea::TopLeft | AbsoluteArea::TopRight => (bounds.y0, cy),
            AbsoluteArea::BottomLeft | AbsoluteArea::BottomRight => (cy, bounds.y1),
        };
        Rect::new(x0, y0, x1, y1)
    }

    pub fn containing(bounds: &Rect, x: f64, y: f64) -> Option<AbsoluteArea> {
        AbsoluteArea::ALL.into_iter().find(|a| a.rect(bounds).contains(x, y))
    }
}

impl fmt::Display for AbsoluteArea {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AbsoluteArea {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AbsoluteArea::ALL
            .into_iter()
            .find(|a| a.as_str() == s || a.as_str().replace('-', " ") == s)
            .ok_or_else(|| format!("unknown area `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LeftOf,
    RightOf,
    Above,
    Below,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::LeftOf, Relation::RightOf, Relation::Above, Relation::Below];

    /// Unit offset; "above" points toward y = 0.
    pub fn direction(&self) -> (f64, f64) {
        match self {
            Relation::LeftOf => (-1.0, 0.0),
            Relation::RightOf => (1.0, 0.0),
            Relation::Above => (0.0, -1.0),
            Relation::Below => (0.0, 1.0),
        }
    }

    pub fn spot(&self, reference: &Pose) -> Pose {
        let (dx, dy) = self.direction();
        Pose::new(
            reference.x + dx * RELATIVE_OFFSET,
            reference.y + dy * RELATIVE_OFFSET,
            reference.yaw,
        )
    }

    /// Word used in goal instructions ("on the left of ...").
    pub fn position_word(&self) -> &'static str {
        match self {
            Relation::LeftOf => "left",
            Relation::RightOf => "right",
            Relation::Above => "top",
            Relation::Below => "bottom",
        }
    }

    fn clause(&self) -> &'static str {
        match self {
            Relation::LeftOf => "to the left of",
            Relation::RightOf => "to the right of",
            Relation::Above => "above",
            Relation::Below => "below",
        }
    }
}

/// Picks out objects by attributes; `id` narrows to one instance when attributes are ambiguous.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectSelector {
    pub kind: ObjectKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<BlockSize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<ObjectId>,
}

impl ObjectSelector {
    pub fn kind(kind: ObjectKind) -> Self {
        Self {
            kind,
            color: None,
            size: None,
            id: None,
        }
    }

    /// The shortest description that identifies `id` in `state`.
    ///
    /// Color is always given; size is added when `with_size` or when color alone is ambiguous; the
    /// id is appended only as a last resort.
    pub fn describe(state: &SceneState, id: ObjectId, with_size: bool) -> Self {
        let obj = state.get(id).expect("describe: object exists");
        let mut sel = Self {
            kind: obj.kind,
            color: Some(obj.color),
            size: if with_size { obj.size } else { None },
            id: None,
        };
        if sel.resolve(state).len() > 1 && obj.size.is_some() {
            sel.size = obj.size;
        }
        if sel.resolve(state).len() > 1 {
            sel.id = Some(id);
        }
        sel
    }

    pub fn matches(&self, obj: &crate::world::ObjectInstance) -> bool {
        obj.kind == self.kind
            && self.color.is_none_or(|c| c == obj.color)
            && self.size.is_none_or(|s| Some(s) == obj.size)
            && self.id.is_none_or(|i| i == obj.id)
    }

    pub fn resolve(&self, state: &SceneState) -> BTreeSet<ObjectId> {
        state.objects.iter().filter(|o| self.matches(o)).map(|o| o.id).collect()
    }

    pub fn phrase(&self) -> String {
        let mut words = Vec::new();
        if let Some(s) = self.size {
            words.push(s.as_str().to_string());
        }
        if let Some(c) = self.color {
            words.push(c.as_str().to_string());
        }
        words.push(self.kind.as_str().to_string());
        if let Some(id) = self.id {
            words.push(format!("#{}", id.0));
        }
        words.join(" ")
    }

    fn parse_phrase(s: &str) -> Result<Self, ParseError> {
        let mut words: Vec<&str> = s.split_whitespace().collect();
        let mut id = None;
        if let Some(last) = words.last() {
            if let Some(n) = last.strip_prefix('#') {
                id = Some(ObjectId(n.parse().map_err(|_| ParseError::new(s, "bad object id"))?));
                words.pop();
            }
        }
        let kind = match words.pop() {
            Some("block") => ObjectKind::Block,
            Some("bowl") => ObjectKind::Bowl,
            Some("zone") => ObjectKind::Zone,
            _ => return Err(ParseError::new(s, "expected block, bowl or zone")),
        };
        let mut size = None;
        let mut color = None;
        for w in words {
            if let Ok(sz) = w.parse::<BlockSize>() {
                if size.is_some() || color.is_some() {
                    return Err(ParseError::new(s, "misplaced size"));
                }
                size = Some(sz);
            } else if let Ok(c) = w.parse::<Color>() {
                if color.is_some() {
                    return Err(ParseError::new(s, "two colors"));
                }
                color = Some(c);
            } else {
                return Err(ParseError::new(s, "unknown attribute"));
            }
        }
        Ok(Self { kind, color, size, id })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetSelector {
    /// On a block, or in a bowl or zone.
    Object { object: ObjectSelector },
    Area { area: AbsoluteArea },
    Relative { relation: Relation, reference: ObjectSelector },
    /// Any free spot on the table; used to move blockers out of the way.
    Table,
}

impl TargetSelector {
    pub fn object(sel: ObjectSelector) -> Self {
        TargetSelector::Object { object: sel }
    }

    fn clause(&self) -> String {
        match self {
            TargetSelector::Object { object } => {
                let prep = if object.kind == ObjectKind::Block { "on" } else { "in" };
                format!("{prep} the {}", object.phrase())
            }
            TargetSelector::Area { area } => format!("in the {area} area"),
            TargetSelector::Relative { relation, reference } => {
                format!("{} the {}", relation.clause(), reference.phrase())
            }
            TargetSelector::Table => "on the table".to_string(),
        }
    }

    fn parse_clause(s: &str) -> Result<Self, ParseError> {
        for rel in Relation::ALL {
            if let Some(rest) = s.strip_prefix(rel.clause()).and_then(|r| r.strip_prefix(" the ")) {
                return Ok(TargetSelector::Relative {
                    relation: rel,
                    reference: ObjectSelector::parse_phrase(rest)?,
                });
            }
        }
        let rest = s
            .strip_prefix("on the ")
            .or_else(|| s.strip_prefix("in the "))
            .or_else(|| s.strip_prefix("into the "))
            .ok_or_else(|| ParseError::new(s, "expected a target clause"))?;
        if rest == "table" {
            return Ok(TargetSelector::Table);
        }
        if let Some(area) = rest.strip_suffix(" area") {
            return Ok(TargetSelector::Area {
                area: area.parse().map_err(|e: String| ParseError::new(s, &e))?,
            });
        }
        Ok(TargetSelector::Object {
            object: ObjectSelector::parse_phrase(rest)?,
        })
    }

    /// Structural identity of the place the target refers to, within `state`.
    pub fn region_key(&self, state: &SceneState) -> RegionKey {
        match self {
            TargetSelector::Object { object } => RegionKey::Objects(object.resolve(state)),
            TargetSelector::Area { area } => RegionKey::Area(*area),
            TargetSelector::Relative { relation, reference } => RegionKey::Relative(*relation, reference.resolve(state)),
            TargetSelector::Table => RegionKey::Table,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionKey {
    Objects(BTreeSet<ObjectId>),
    Area(AbsoluteArea),
    Relative(Relation, BTreeSet<ObjectId>),
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    PickPlace,
}

/// One atomic pick-and-place instruction. The structured fields are authoritative; `text` is
/// rendered from them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubTask {
    pub verb: Verb,
    pub source: ObjectSelector,
    pub target: TargetSelector,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse sub-task `{input}`: {reason}")]
pub struct ParseError {
    pub input: String,
    pub reason: String,
}

impl ParseError {
    fn new(input: &str, reason: &str) -> Self {
        Self {
            input: input.to_string(),
            reason: reason.to_string(),
        }
    }
}

impl SubTask {
    pub fn new(source: ObjectSelector, target: TargetSelector) -> Self {
        let text = render_canonical(&source, &target);
        Self {
            verb: Verb::PickPlace,
            source,
            target,
            text,
        }
    }

    /// "Put the ... on the ..." form of the same structure.
    pub fn alternate_text(&self) -> String {
        format!("Put the {} {}.", self.source.phrase(), self.target.clause())
    }

    /// Parses either rendering back into structure.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let norm = text.trim().trim_end_matches('.').to_lowercase();
        let (src, clause) = if let Some(rest) = norm.strip_prefix("pick up the ") {
            rest.split_once(" and place it ")
                .ok_or_else(|| ParseError::new(text, "missing `and place it`"))?
        } else if let Some(rest) = norm.strip_prefix("put the ") {
            split_put(rest).ok_or_else(|| ParseError::new(text, "missing target clause"))?
        } else {
            return Err(ParseError::new(text, "expected `Pick up the` or `Put the`"));
        };
        let source = ObjectSelector::parse_phrase(src)?;
        let target = TargetSelector::parse_clause(clause)?;
        Ok(SubTask::new(source, target))
    }

    /// Re-renders `text` from the structured fields.
    pub fn normalized(mut self) -> Self {
        self.text = render_canonical(&self.source, &self.target);
        self
    }

    pub fn structurally_equal(&self, other: &SubTask) -> bool {
        self.verb == other.verb && self.source == other.source && self.target == other.target
    }
}

impl fmt::Display for SubTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn render_canonical(source: &ObjectSelector, target: &TargetSelector) -> String {
    format!("Pick up the {} and place it {}.", source.phrase(), target.clause())
}

fn split_put(rest: &str) -> Option<(&str, &str)> {
    const MARKERS: [&str; 7] = [
        " on the ",
        " in the ",
        " into the ",
        " to the left of the ",
        " to the right of the ",
        " above the ",
        " below the ",
    ];
    let (pos, _) = MARKERS
        .iter()
        .filter_map(|m| rest.find(m).map(|p| (p, *m)))
        .min_by_key(|(p, _)| *p)?;
    Some((&rest[..pos], &rest[pos + 1..]))
}

/// True iff `predicted` resolves to the same source objects and target region as some element of `valid`.
pub fn subtask_equivalent(predicted: &SubTask, valid: &[SubTask], state: &SceneState) -> bool {
    let src = predicted.source.resolve(state);
    let region = predicted.target.region_key(state);
    valid
        .iter()
        .any(|v| v.verb == predicted.verb && v.source.resolve(state) == src && v.target.region_key(state) == region)
}
