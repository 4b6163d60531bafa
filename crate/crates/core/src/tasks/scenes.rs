//! Object geometry per task. Dimensions not given by the task descriptions
//! are household-plausible constants.

use alloc::vec;
use core::f64::consts::FRAC_PI_2;

use super::TaskId;
use crate::sim::{Articulation, Ball, Band, Carry, Hinge, HingeDrive, Part, SceneObject, Shape, Slide};
use crate::{Pose, Quat, Result, Vec3};

/// Button dome radius (10 cm diameter).
pub const BUTTON_RADIUS: f64 = 0.05;
const BUTTON_STAND_HEIGHT: f64 = 0.30;

/// Valve wheel radius (40 cm diameter) and axis height.
pub const VALVE_RADIUS: f64 = 0.20;
pub const VALVE_AXIS_HEIGHT: f64 = 0.60;

pub(crate) const TABLE_EDGE_X: f64 = -0.2;
const TABLE_HEIGHT: f64 = 0.30;
const ITEM_HALF: f64 = 0.04;
const ITEM_X: f64 = 0.05;

const DISHWASHER_HINGE_Z: f64 = 0.10;
const DISHWASHER_DOOR: f64 = 0.50;

/// Goal region for the ball in its starting frame: x range and half width.
const GOAL_X: (f64, f64) = (0.6, 3.5);
const GOAL_HALF_WIDTH: f64 = 0.8;

fn cuboid(hx: f64, hy: f64, hz: f64) -> Shape {
    Shape::Box {
        half: Vec3::new(hx, hy, hz),
    }
}

fn hinge(pivot: Vec3, axis: Vec3, reference: Vec3, angle: f64, sign: f64, radial: Band, axial: Band, drive: HingeDrive) -> Hinge {
    Hinge {
        pivot,
        axis,
        reference,
        angle,
        initial: angle,
        min: 0.0,
        max: FRAC_PI_2,
        push_sign: sign,
        radial,
        axial,
        drive,
        gain: 1.0,
    }
}

fn dishwasher(pose: Pose, open: bool) -> Result<SceneObject> {
    let pivot = Vec3::new(0.0, 0.0, DISHWASHER_HINGE_Z);
    let (angle, sign, radial) = if open {
        (FRAC_PI_2, -1.0, Band::new(0.15, 0.53))
    } else {
        (0.0, 1.0, Band::new(0.30, 0.53))
    };
    let h = hinge(
        pivot,
        -Vec3::Y,
        Vec3::Z,
        angle,
        sign,
        radial,
        Band::new(-0.28, 0.28),
        HingeDrive::Edge,
    );
    let body = Part::fixed(cuboid(0.3, 0.3, 0.3), Vec3::new(0.32, 0.0, 0.3));
    let door = Part::moving(
        cuboid(0.01, 0.28, DISHWASHER_DOOR / 2.0),
        Pose::from_translation(Vec3::new(-0.01, 0.0, DISHWASHER_HINGE_Z + DISHWASHER_DOOR / 2.0)),
    );
    SceneObject::new(0, "dishwasher", pose, vec![body, door], Articulation::Hinge(h))
}

/// Builds the task object at `pose` with id 0.
pub fn build_object(task: TaskId, pose: Pose) -> Result<SceneObject> {
    match task {
        TaskId::PressButton => {
            let stand = Part::fixed(
                cuboid(0.1, 0.1, BUTTON_STAND_HEIGHT / 2.0),
                Vec3::new(0.0, 0.0, BUTTON_STAND_HEIGHT / 2.0),
            );
            let center = Vec3::new(0.0, 0.0, BUTTON_STAND_HEIGHT);
            let dome = Part::fixed(Shape::Hemisphere { radius: BUTTON_RADIUS }, center);
            SceneObject::new(
                0,
                "button",
                pose,
                vec![stand, dome],
                Articulation::Button {
                    center,
                    radius: BUTTON_RADIUS,
                    travel: 0.02,
                    pressed: false,
                },
            )
        }
        TaskId::PullHandle => {
            let pivot = Vec3::new(-0.04, 0.06, 0.5);
            let wall = Part::fixed(cuboid(0.02, 0.3, 0.4), Vec3::new(0.02, 0.0, 0.4));
            let lever = Part::moving(
                cuboid(0.015, 0.07, 0.012),
                Pose::from_translation(pivot - Vec3::Y * 0.07),
            );
            let h = hinge(
                pivot,
                Vec3::X,
                -Vec3::Y,
                0.0,
                1.0,
                Band::new(0.03, 0.16),
                Band::new(-0.06, 0.03),
                HingeDrive::Edge,
            );
            SceneObject::new(0, "handle", pose, vec![wall, lever], Articulation::Hinge(h))
        }
        TaskId::PushDoor => {
            let h = hinge(
                Vec3::new(0.0, 0.4, 0.0),
                Vec3::Z,
                -Vec3::Y,
                0.0,
                1.0,
                Band::new(0.05, 0.82),
                Band::new(0.0, 1.0),
                HingeDrive::Edge,
            );
            let post = |y: f64| Part::fixed(cuboid(0.03, 0.03, 0.55), Vec3::new(0.0, y, 0.55));
            let panel = Part::moving(
                cuboid(0.02, 0.39, 0.5),
                Pose::from_translation(Vec3::new(0.0, 0.0, 0.5)),
            );
            SceneObject::new(0, "door", pose, vec![post(0.45), post(-0.45), panel], Articulation::Hinge(h))
        }
        TaskId::LiftBasket => {
            let body = Part::fixed(cuboid(0.15, 0.12, 0.07), Vec3::new(0.0, 0.0, 0.07));
            let bar = Part::fixed(cuboid(0.01, 0.1, 0.01), Vec3::new(0.0, 0.0, 0.26));
            let post = |y: f64| Part::fixed(cuboid(0.01, 0.01, 0.06), Vec3::new(0.0, y, 0.2));
            SceneObject::new(
                0,
                "basket",
                pose,
                vec![body, bar, post(0.1), post(-0.1)],
                Articulation::Carry(Carry {
                    grip: Vec3::new(0.0, 0.0, 0.26),
                    hook_radius: 0.04,
                    held: false,
                    pickup_base: None,
                    carried: 0.0,
                }),
            )
        }
        TaskId::OpenDishwasher => dishwasher(pose, false),
        TaskId::CloseDishwasher => dishwasher(pose, true),
        TaskId::PullObjects => {
            let table = Part::fixed(
                cuboid(0.2, 0.3, TABLE_HEIGHT / 2.0),
                Vec3::new(0.0, 0.0, TABLE_HEIGHT / 2.0),
            );
            let item = Part::moving(
                cuboid(ITEM_HALF, ITEM_HALF, ITEM_HALF),
                Pose::from_translation(Vec3::new(ITEM_X, 0.0, TABLE_HEIGHT + ITEM_HALF)),
            );
            let slide = Slide {
                sign: -1.0,
                offset: 0.0,
                limit: 0.6,
                face_x: ITEM_X + ITEM_HALF,
                y_band: Band::new(-0.06, 0.06),
                z_band: Band::new(TABLE_HEIGHT - 0.02, TABLE_HEIGHT + 0.12),
            };
            SceneObject::new(0, "table", pose, vec![table, item], Articulation::Slide(slide))
        }
        TaskId::TwistValve => {
            let pivot = Vec3::new(0.0, 0.0, VALVE_AXIS_HEIGHT);
            let stem = Part::fixed(
                Shape::Cylinder {
                    radius: 0.03,
                    half_height: VALVE_AXIS_HEIGHT / 2.0,
                },
                Vec3::new(0.05, 0.0, VALVE_AXIS_HEIGHT / 2.0),
            );
            let wheel = Part::moving(
                Shape::Cylinder {
                    radius: VALVE_RADIUS,
                    half_height: 0.015,
                },
                Pose::new(pivot, Quat::from_axis_angle(Vec3::Y, FRAC_PI_2)),
            );
            let mut h = hinge(
                pivot,
                Vec3::X,
                -Vec3::Y,
                0.0,
                1.0,
                Band::new(0.12, 0.24),
                Band::new(-0.06, 0.03),
                HingeDrive::Rim,
            );
            h.max = 2.0 * core::f64::consts::PI;
            SceneObject::new(0, "valve", pose, vec![stem, wheel], Articulation::Hinge(h))
        }
        TaskId::ShootBall => {
            let r = 0.1;
            let mut p = pose;
            p.position.z = r;
            SceneObject::new(
                0,
                "ball",
                p,
                vec![Part::fixed(Shape::Sphere { radius: r }, Vec3::ZERO)],
                Articulation::Ball(Ball {
                    radius: r,
                    velocity: Vec3::ZERO,
                    decay: 1.2,
                    kick_gain: 2.5,
                    kicked: false,
                }),
            )
        }
    }
}

/// Object-frame x of the pulled item's center.
pub(crate) fn item_center_x(s: &Slide) -> f64 {
    ITEM_X + s.offset
}

/// Whether `p` (world) lies in the ball goal defined relative to `start`.
pub(crate) fn in_goal(start: &Pose, p: Vec3) -> bool {
    let local = start.inverse_transform_point(p);
    local.x >= GOAL_X.0 && local.x <= GOAL_X.1 && local.y.abs() <= GOAL_HALF_WIDTH
}
