use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Pose, Rect};
use super::object::{ObjectId, ObjectKind};
use super::scene::SceneState;
use super::WorldError;

/// A suction pick followed by a place, both in workspace coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub pick: Pose,
    pub place: Pose,
}

impl Action {
    pub fn new(pick: Pose, place: Pose) -> Self {
        Self { pick, place }
    }

    /// `(pick.x, pick.y, pick.yaw, place.x, place.y, place.yaw)`.
    pub fn to_array(&self) -> [f64; 6] {
        [self.pick.x, self.pick.y, self.pick.yaw, self.place.x, self.place.y, self.place.yaw]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            pick: Pose::new(v[0], v[1], v[2]),
            place: Pose::new(v[3], v[4], v[5]),
        }
    }

    pub fn validate(&self, bounds: &Rect) -> Result<(), WorldError> {
        for (name, p) in [("pick", &self.pick), ("place", &self.place)] {
            if !p.x.is_finite() || !p.y.is_finite() || !p.yaw.is_finite() {
                return Err(WorldError::InvalidAction(format!("{name} pose is not finite")));
            }
            if !bounds.contains(p.x, p.y) {
                return Err(WorldError::InvalidAction(format!(
                    "{name} pose ({:.4}, {:.4}) outside workspace",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

/// Result of running one pick-and-place through the kinematic model.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub state: SceneState,
    /// The pick attached to a block.
    pub executed: bool,
    /// The carried block was dropped before reaching the place pose.
    pub drop_event: bool,
    pub picked: Option<ObjectId>,
}

/// Transport model for one pick-and-place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    pub drop_probability: f64,
    pub substeps: u32,
}

impl Transport {
    pub const RELIABLE: Transport = Transport {
        drop_probability: 0.0,
        substeps: 0,
    };
}

/// Executes `action` on `state`. The rng is only consulted for drop draws.
pub fn execute<R: Rng + ?Sized>(
    state: &SceneState,
    action: &Action,
    bounds: &Rect,
    transport: Transport,
    rng: &mut R,
) -> Execution {
    let mut next = state.clone();
    next.time += 1;

    let picked = next
        .topmost_at(action.pick.x, action.pick.y)
        .filter(|&id| next.get(id).is_some_and(|o| o.kind == ObjectKind::Block));
    let Some(carried) = picked else {
        return Execution {
            state: next,
            executed: false,
            drop_event: false,
            picked: None,
        };
    };

    // Anything resting on the carried block falls straight down.
    let occupants: Vec<ObjectId> = next
        .objects
        .iter()
        .filter(|o| o.supported_by == Some(carried))
        .map(|o| o.id)
        .collect();
    if let Some(o) = next.get_mut(carried) {
        o.supported_by = None;
    }
    for occ in occupants {
        let (x, y) = {
            let o = next.get(occ).expect("occupant exists");
            (o.pose.x, o.pose.y)
        };
        let support = next.support_at(x, y, &[occ, carried]);
        next.get_mut(occ).expect("occupant exists").supported_by = support;
    }

    let obj = next.get(carried).expect("carried exists").clone();
    let dyaw = action.place.yaw - action.pick.yaw;
    let (s, c) = dyaw.sin_cos();
    let ox = obj.pose.x - action.pick.x;
    let oy = obj.pose.y - action.pick.y;
    let mut target_x = action.place.x + c * ox - s * oy;
    let mut target_y = action.place.y + s * ox + c * oy;
    let mut target_yaw = wrap_angle(obj.pose.yaw + dyaw);

    let mut drop_event = false;
    for _ in 0..transport.substeps {
        let draw: f64 = rng.random();
        if !drop_event && draw < transport.drop_probability {
            drop_event = true;
            let u: f64 = rng.random();
            target_x = action.pick.x + u * (action.place.x - action.pick.x) + ox;
            target_y = action.pick.y + u * (action.place.y - action.pick.y) + oy;
            target_yaw = obj.pose.yaw;
        }
    }

    let (x, y) = bounds.clamp_point(target_x, target_y);
    {
        let o = next.get_mut(carried).expect("carried exists");
        o.pose = Pose::new(x, y, target_yaw);
        o.supported_by = None;
    }
    let support = next.support_at(x, y, &[carried]);
    next.get_mut(carried).expect("carried exists").supported_by = support;

    Execution {
        state: next,
        executed: true,
        drop_event,
        picked: Some(carried),
    }
}
