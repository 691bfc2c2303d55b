use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, wrap_angle_period, Pose, Rect};
use super::object::{ObjectId, ObjectKind};
use super::scene::SceneState;
use super::WorldError;

pub const DEFAULT_ZONE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseTolerance {
    /// Meters.
    pub position: f64,
    /// Radians.
    pub yaw: f64,
    /// Square blocks look identical under quarter turns.
    pub square_symmetry: bool,
}

impl Default for PoseTolerance {
    fn default() -> Self {
        Self {
            position: 0.01,
            yaw: 15f64.to_radians(),
            square_symmetry: true,
        }
    }
}

pub fn yaw_error(actual: f64, target: f64, square_symmetry: bool) -> f64 {
    let e = wrap_angle(actual - target);
    if square_symmetry {
        wrap_angle_period(e, FRAC_PI_2).abs()
    } else {
        e.abs()
    }
}

pub fn pose_within(actual: &Pose, target: &Pose, tol: &PoseTolerance) -> bool {
    actual.distance_xy(target) <= tol.position && yaw_error(actual.yaw, target.yaw, tol.square_symmetry) <= tol.yaw
}

/// Position and orientation agree with `target` within tolerance.
pub fn pose_match(state: &SceneState, id: ObjectId, target: &Pose, tol: &PoseTolerance) -> Result<bool, WorldError> {
    let obj = state.require(id)?;
    let symmetric = tol.square_symmetry && obj.kind == ObjectKind::Block;
    let tol = PoseTolerance {
        square_symmetry: symmetric,
        ..*tol
    };
    Ok(pose_within(&obj.pose, target, &tol))
}

/// Fraction of `object` footprint area lying inside `region`.
pub fn overlap_fraction(object: &Rect, region: &Rect) -> f64 {
    let a = object.area();
    if a <= 0.0 {
        return 0.0;
    }
    object.intersection_area(region) / a
}

/// A block lies in a zone or bowl when its overlap fraction strictly exceeds `threshold`.
pub fn zone_match(state: &SceneState, id: ObjectId, zone: ObjectId, threshold: f64) -> Result<bool, WorldError> {
    let obj = state.require(id)?;
    let region = state.require(zone)?;
    if obj.kind != ObjectKind::Block {
        return Err(WorldError::WrongKind {
            id,
            expected: "block",
            found: obj.kind,
        });
    }
    if !matches!(region.kind, ObjectKind::Zone | ObjectKind::Bowl) {
        return Err(WorldError::WrongKind {
            id: zone,
            expected: "zone or bowl",
            found: region.kind,
        });
    }
    Ok(overlap_fraction(&obj.footprint(), &region.footprint()) > threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::object::{BlockSize, Color, ObjectInstance};
    use std::f64::consts::PI;

    fn scene(block_x: f64) -> SceneState {
        SceneState::new(vec![
            ObjectInstance::block(ObjectId(0), Color::Red, BlockSize::Big, Pose::new(block_x, 0.25, 0.0)),
            ObjectInstance::zone(ObjectId(1), Color::Red, 0.5, 0.25),
        ])
    }

    #[test]
    fn pose_match_examples() {
        let s = scene(0.5);
        let tol = PoseTolerance::default();
        assert!(pose_match(&s, ObjectId(0), &Pose::new(0.5, 0.25, 0.0), &tol).unwrap());
        assert!(pose_match(&s, ObjectId(0), &Pose::new(0.509, 0.25, 0.0), &tol).unwrap());
        assert!(!pose_match(&s, ObjectId(0), &Pose::new(0.511, 0.25, 0.0), &tol).unwrap());
        assert!(pose_match(&s, ObjectId(0), &Pose::new(0.5, 0.25, PI), &tol).unwrap());
        let strict = PoseTolerance {
            square_symmetry: false,
            ..tol
        };
        assert!(!pose_match(&s, ObjectId(0), &Pose::new(0.5, 0.25, PI), &strict).unwrap());
        assert!(matches!(
            pose_match(&s, ObjectId(9), &Pose::new(0.0, 0.0, 0.0), &tol),
            Err(WorldError::NoSuchObject(_))
        ));
    }

    #[test]
    fn zone_match_examples() {
        // centered
        assert!(zone_match(&scene(0.5), ObjectId(0), ObjectId(1), 0.5).unwrap());
        // fully outside
        assert!(!zone_match(&scene(0.9), ObjectId(0), ObjectId(1), 0.5).unwrap());
        // zone spans [0.44, 0.56]; block at 0.56 spans [0.54, 0.58] -> half inside
        let half = scene(0.56);
        let frac = overlap_fraction(&half.get(ObjectId(0)).unwrap().footprint(), &half.get(ObjectId(1)).unwrap().footprint());
        assert_eq!(frac, 0.5);
        assert!(!zone_match(&half, ObjectId(0), ObjectId(1), 0.5).unwrap());
        assert!(zone_match(&half, ObjectId(0), ObjectId(1), 0.49).unwrap());
        assert!(zone_match(&half, ObjectId(1), ObjectId(0), 0.5).is_err());
    }
}
