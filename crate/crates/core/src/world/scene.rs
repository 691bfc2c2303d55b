use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::geometry::Rect;
use super::object::{ObjectId, ObjectInstance, ObjectKind};
use super::WorldError;

const Z_EPS: f64 = 1e-9;
const AREA_EPS: f64 = 1e-12;

/// Full symbolic world state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub objects: Vec<ObjectInstance>,
    /// Number of executed steps.
    pub time: u64,
}

impl SceneState {
    pub fn new(objects: Vec<ObjectInstance>) -> Self {
        Self { objects, time: 0 }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new())
    }

    pub fn get(&self, id: ObjectId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn get_mut(&mut self, id: ObjectId) -> Option<&mut ObjectInstance> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn require(&self, id: ObjectId) -> Result<&ObjectInstance, WorldError> {
        self.get(id).ok_or(WorldError::NoSuchObject(id))
    }

    pub fn blocks(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(|o| o.kind == ObjectKind::Block)
    }

    pub fn next_id(&self) -> ObjectId {
        ObjectId(self.objects.iter().map(|o| o.id.0 + 1).max().unwrap_or(0))
    }

    /// Height of the surface the object rests on.
    pub fn base_z(&self, id: ObjectId) -> f64 {
        let mut z = 0.0;
        let mut cur = self.get(id).and_then(|o| o.supported_by);
        let mut guard = 0;
        while let Some(sup) = cur {
            let Some(obj) = self.get(sup) else { break };
            z += obj.height();
            cur = obj.supported_by;
            guard += 1;
            if guard > self.objects.len() {
                break;
            }
        }
        z
    }

    pub fn top_z(&self, id: ObjectId) -> f64 {
        self.get(id).map_or(0.0, |o| self.base_z(id) + o.height())
    }

    /// `upper` rests above `lower` with overlapping footprints.
    pub fn covers(&self, upper: ObjectId, lower: ObjectId) -> bool {
        if upper == lower {
            return false;
        }
        let (Some(u), Some(l)) = (self.get(upper), self.get(lower)) else {
            return false;
        };
        if !u.is_block() || !l.is_block() {
            return false;
        }
        self.base_z(upper) >= self.top_z(lower) - Z_EPS
            && u.footprint().intersection_area(&l.footprint()) > AREA_EPS
    }

    /// Blocks directly covering `id`.
    pub fn covering(&self, id: ObjectId) -> Vec<ObjectId> {
        self.blocks().map(|o| o.id).filter(|&u| self.covers(u, id)).collect()
    }

    pub fn is_clear(&self, id: ObjectId) -> bool {
        self.blocks().all(|o| !self.covers(o.id, id))
    }

    /// Clear blocks that (transitively) cover `id`; these must move before `id` is reachable.
    pub fn clear_coverers(&self, id: ObjectId) -> BTreeSet<ObjectId> {
        let mut seen = BTreeSet::new();
        let mut stack = self.covering(id);
        while let Some(c) = stack.pop() {
            if seen.insert(c) {
                stack.extend(self.covering(c));
            }
        }
        seen.into_iter().filter(|&c| self.is_clear(c)).collect()
    }

    /// The object whose top is highest among those whose footprint contains the point.
    pub fn topmost_at(&self, x: f64, y: f64) -> Option<ObjectId> {
        self.topmost_where(x, y, |_| true)
    }

    fn topmost_where(&self, x: f64, y: f64, filter: impl Fn(&ObjectInstance) -> bool) -> Option<ObjectId> {
        let mut best: Option<(f64, f64, ObjectId)> = None;
        for o in &self.objects {
            if !filter(o) || !o.footprint().contains(x, y) {
                continue;
            }
            let key = (self.top_z(o.id), self.base_z(o.id), o.id);
            let better = match best {
                None => true,
                Some((t, b, id)) => {
                    key.0 > t + Z_EPS
                        || ((key.0 - t).abs() <= Z_EPS && (key.1 > b + Z_EPS || ((key.1 - b).abs() <= Z_EPS && key.2 > id)))
                }
            };
            if better {
                best = Some(key);
            }
        }
        best.map(|(_, _, id)| id)
    }

    /// Topmost block or bowl under the point, ignoring `exclude` and everything resting on it.
    pub fn support_at(&self, x: f64, y: f64, exclude: &[ObjectId]) -> Option<ObjectId> {
        self.topmost_where(x, y, |o| {
            o.can_support() && exclude.iter().all(|&e| o.id != e && !self.rests_on(o.id, e))
        })
    }

    /// True if `id` sits (transitively) on `base` via the support chain.
    pub fn rests_on(&self, id: ObjectId, base: ObjectId) -> bool {
        let mut cur = self.get(id).and_then(|o| o.supported_by);
        let mut guard = 0;
        while let Some(s) = cur {
            if s == base {
                return true;
            }
            cur = self.get(s).and_then(|o| o.supported_by);
            guard += 1;
            if guard > self.objects.len() {
                return false;
            }
        }
        false
    }

    /// Objects whose footprint overlaps `rect` by a positive area.
    pub fn overlapping(&self, rect: &Rect) -> impl Iterator<Item = &ObjectInstance> + '_ {
        let rect = *rect;
        self.objects
            .iter()
            .filter(move |o| o.footprint().intersection_area(&rect) > AREA_EPS)
    }

    /// Checks the structural invariants of a scene.
    pub fn validate(&self, bounds: &Rect) -> Result<(), WorldError> {
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id) {
                return Err(WorldError::InvalidScene(format!("duplicate object id {}", o.id)));
            }
            let (w, h) = o.extent();
            let inflated = bounds.inflate(w.max(h) / 2.0);
            if !inflated.contains(o.pose.x, o.pose.y) {
                return Err(WorldError::InvalidScene(format!("object {} outside workspace", o.id)));
            }
            if o.kind == ObjectKind::Block && o.size.is_none() {
                return Err(WorldError::InvalidScene(format!("block {} has no size", o.id)));
            }
            if let Some(s) = o.supported_by {
                if o.kind != ObjectKind::Block {
                    return Err(WorldError::InvalidScene(format!("{} {} is supported", o.kind, o.id)));
                }
                let sup = self
                    .get(s)
                    .ok_or_else(|| WorldError::InvalidScene(format!("object {} supported by missing {s}", o.id)))?;
                if !sup.can_support() {
                    return Err(WorldError::InvalidScene(format!("object {} supported by a zone", o.id)));
                }
            }
        }
        for o in &self.objects {
            let mut visited = BTreeSet::new();
            let mut cur = Some(o.id);
            while let Some(c) = cur {
                if !visited.insert(c) {
                    return Err(WorldError::InvalidScene(format!("support cycle through {}", o.id)));
                }
                cur = self.get(c).and_then(|x| x.supported_by);
            }
        }
        Ok(())
    }
}
