//! The nine manipulation tasks: randomized scenes, object-frame expert
//! templates, the scripted expert planner and success predicates.

mod scenes;
pub mod template;

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Leg, QuadrupedModel, RobotState};
use crate::params::{express_params, FrameTag, Interval, Manipulator, TrajectoryParams};
use crate::settings::{invalid, unknown_key, Settings};
use crate::sim::{Articulation, Episode, EpisodeHooks, PlanUpdate, Planner, PlannerInput, SimConfig, World};
use crate::{Error, Pose, Result, Vec3};

pub use scenes::{build_object, BUTTON_RADIUS, VALVE_AXIS_HEIGHT, VALVE_RADIUS};
pub use template::{parse_templates, Template, BUILTIN_TEMPLATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskId {
    PressButton,
    PullHandle,
    PushDoor,
    LiftBasket,
    OpenDishwasher,
    CloseDishwasher,
    PullObjects,
    TwistValve,
    ShootBall,
}

impl TaskId {
    pub const ALL: [TaskId; 9] = [
        TaskId::PressButton,
        TaskId::PullHandle,
        TaskId::PushDoor,
        TaskId::LiftBasket,
        TaskId::OpenDishwasher,
        TaskId::CloseDishwasher,
        TaskId::PullObjects,
        TaskId::TwistValve,
        TaskId::ShootBall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::PressButton => "press_button",
            TaskId::PullHandle => "pull_handle",
            TaskId::PushDoor => "push_door",
            TaskId::LiftBasket => "lift_basket",
            TaskId::OpenDishwasher => "open_dishwasher",
            TaskId::CloseDishwasher => "close_dishwasher",
            TaskId::PullObjects => "pull_objects",
            TaskId::TwistValve => "twist_valve",
            TaskId::ShootBall => "shoot_ball",
        }
    }

    pub fn from_name(name: &str) -> Result<TaskId> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| Error::UnknownTask(String::from(name)))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Placement box of the object origin (robot starts at the origin facing +x).
    pub fn placement(self) -> Placement {
        let (x, y) = match self {
            TaskId::PushDoor | TaskId::CloseDishwasher => ((0.95, 1.2), (-0.2, 0.2)),
            TaskId::ShootBall => ((0.8, 1.1), (-0.2, 0.2)),
            _ => ((0.7, 1.1), (-0.25, 0.25)),
        };
        Placement {
            x: Interval::new(x.0, x.1),
            y: Interval::new(y.0, y.1),
            yaw: Interval::new(-0.3, 0.3),
        }
    }
}

impl core::fmt::Display for TaskId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskId::from_name(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub x: Interval,
    pub y: Interval,
    pub yaw: Interval,
}

/// Success thresholds and expert tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSettings {
    pub door_open_deg: f64,
    pub dishwasher_open_deg: f64,
    pub dishwasher_closed_deg: f64,
    pub valve_deg: f64,
    pub handle_deg: f64,
    pub basket_height: f64,
    pub basket_carry: f64,
    /// Toe distance to the template start that ends the approach, m.
    pub approach_tolerance: f64,
    /// Approach time after which the template starts regardless, s.
    pub approach_timeout: f64,
    /// Object displacement that triggers re-planning, m.
    pub replan_distance: f64,
}

impl Default for TaskSettings {
    fn default() -> Self {
        Self {
            door_open_deg: 45.0,
            dishwasher_open_deg: 60.0,
            dishwasher_closed_deg: 5.0,
            valve_deg: 45.0,
            handle_deg: 30.0,
            basket_height: 0.15,
            basket_carry: 1.0,
            approach_tolerance: 0.01,
            approach_timeout: 6.0,
            replan_distance: 0.1,
        }
    }
}

const TASK_KEYS: &[&str] = &[
    "door_open_deg",
    "dishwasher_open_deg",
    "dishwasher_closed_deg",
    "valve_deg",
    "handle_deg",
    "basket_height",
    "basket_carry",
    "approach_tolerance",
    "approach_timeout",
    "replan_distance",
];

impl Settings for TaskSettings {
    fn keys(&self) -> &'static [&'static str] {
        TASK_KEYS
    }

    fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "door_open_deg" => self.door_open_deg,
            "dishwasher_open_deg" => self.dishwasher_open_deg,
            "dishwasher_closed_deg" => self.dishwasher_closed_deg,
            "valve_deg" => self.valve_deg,
            "handle_deg" => self.handle_deg,
            "basket_height" => self.basket_height,
            "basket_carry" => self.basket_carry,
            "approach_tolerance" => self.approach_tolerance,
            "approach_timeout" => self.approach_timeout,
            "replan_distance" => self.replan_distance,
            _ => return None,
        })
    }

    fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(invalid("task settings must be finite and non-negative"));
        }
        match key {
            "door_open_deg" => self.door_open_deg = value,
            "dishwasher_open_deg" => self.dishwasher_open_deg = value,
            "dishwasher_closed_deg" => self.dishwasher_closed_deg = value,
            "valve_deg" => self.valve_deg = value,
            "handle_deg" => self.handle_deg = value,
            "basket_height" => self.basket_height = value,
            "basket_carry" => self.basket_carry = value,
            "approach_tolerance" => self.approach_tolerance = value,
            "approach_timeout" => self.approach_timeout = value,
            "replan_distance" => self.replan_distance = value,
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }
}

/// Id of the task object in every task scene.
pub const TASK_OBJECT: u32 = 0;

/// Samples the object pose for `task` from its placement box; deterministic per seed.
pub fn sample_object_pose(task: TaskId, seed: u64) -> Pose {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7A5C_0000_0000_0000 ^ task.index() as u64);
    let p = task.placement();
    let x = p.x.sample(&mut rng);
    let y = p.y.sample(&mut rng);
    let yaw = p.yaw.sample(&mut rng);
    Pose::from_xy_yaw(x, y, 0.0, yaw)
}

/// Builds the world for `task`: the robot standing at the origin facing +x
/// and the task object at a randomized pose.
pub fn instantiate(task: TaskId, seed: u64, model: &QuadrupedModel, sim: SimConfig) -> Result<World> {
    let pose = sample_object_pose(task, seed);
    let object = build_object(task, pose)?;
    let state = RobotState::standing(model, 0.0, 0.0, 0.0);
    World::new(model.clone(), sim, state, alloc::vec![object])
}

/// The registry of parsed built-in templates, indexed by [`TaskId::index`].
pub fn builtin_templates() -> Result<Vec<Template>> {
    let parsed = parse_templates(BUILTIN_TEMPLATES)?;
    TaskId::ALL
        .iter()
        .map(|t| {
            parsed
                .iter()
                .find(|p| p.task == t.name())
                .cloned()
                .ok_or_else(|| Error::Template {
                    line: 0,
                    msg: alloc::format!("no template for {t}"),
                })
        })
        .collect()
}

/// Nearest forelimb by the object's lateral offset in the body frame; ties go
/// to the front-right leg.
pub fn choose_manipulator(object: &Pose, base: &Pose) -> Manipulator {
    if base.inverse_transform_point(object.position).y > 0.0 {
        Manipulator::FrontLeft
    } else {
        Manipulator::FrontRight
    }
}

/// The template re-expressed in world through the object pose, with the
/// flag chosen from the base pose.
pub fn expert_params(template: &Template, object: &Pose, base: &Pose) -> TrajectoryParams {
    let local = template.params(choose_manipulator(object, base));
    express_params(&local, object, FrameTag::World).expect("object to world is supported")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ExpertPhase {
    Approach { since: u64 },
    Manipulate,
}

/// Scripted expert: walks the toe to the template start, then plays the
/// template. Re-anchors to the object when it is displaced before the toe
/// has engaged it.
#[derive(Debug, Clone)]
pub struct ScriptedExpert {
    template: Template,
    settings: TaskSettings,
    anchor: Option<(Pose, Manipulator)>,
    phase: ExpertPhase,
    replans: u32,
}

impl ScriptedExpert {
    pub fn new(template: Template, settings: TaskSettings) -> Self {
        Self {
            template,
            settings,
            anchor: None,
            phase: ExpertPhase::Approach { since: 0 },
            replans: 0,
        }
    }

    pub fn for_task(task: TaskId, settings: TaskSettings) -> Result<Self> {
        let t = builtin_templates()?.swap_remove(task.index());
        Ok(Self::new(t, settings))
    }

    /// Times the expert re-anchored after the first plan.
    pub fn replans(&self) -> u32 {
        self.replans
    }

    pub fn manipulating(&self) -> bool {
        self.phase == ExpertPhase::Manipulate
    }
}

impl Planner for ScriptedExpert {
    fn plan(&mut self, input: &PlannerInput<'_>) -> Result<Option<PlanUpdate>> {
        let world = input.world;
        let object = world.object(TASK_OBJECT)?;
        let moved = match self.anchor {
            None => true,
            Some((a, _)) => {
                !object.articulation.engaged()
                    && a.position.distance(object.pose.position) > self.settings.replan_distance
            }
        };
        if moved {
            if self.anchor.is_some() {
                self.replans += 1;
            }
            let flag = choose_manipulator(&object.pose, &world.state.base);
            self.anchor = Some((object.pose, flag));
            self.phase = ExpertPhase::Approach { since: input.tick };
        }
        let (anchor, flag) = self.anchor.expect("set above");
        let local = self.template.params(flag);
        let params = express_params(&local, &anchor, FrameTag::World)?;
        match self.phase {
            ExpertPhase::Manipulate => Ok(Some(PlanUpdate {
                params,
                restart_clock: false,
            })),
            ExpertPhase::Approach { since } => {
                let leg = Leg::from_index(flag.leg()).expect("front leg");
                let toe = world.state.toe_pose(&world.model, leg).position;
                let start = params.curve.start();
                let waited = (input.tick - since) as f64 * crate::params::CONTROL_PERIOD;
                if toe.distance(start) < self.settings.approach_tolerance || waited > self.settings.approach_timeout {
                    self.phase = ExpertPhase::Manipulate;
                    Ok(Some(PlanUpdate {
                        params,
                        restart_clock: true,
                    }))
                } else {
                    let hold = TrajectoryParams::hold(flag, start, params.orientation.start, FrameTag::World);
                    Ok(Some(PlanUpdate {
                        params: hold,
                        restart_clock: true,
                    }))
                }
            }
        }
    }
}

/// Episode hook that shoves the task object horizontally away from the
/// robot once, as if it rolled off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushAway {
    pub tick: u64,
    /// m
    pub distance: f64,
    pub applied: bool,
}

impl PushAway {
    pub fn new(tick: u64, distance: f64) -> Self {
        Self {
            tick,
            distance,
            applied: false,
        }
    }
}

impl EpisodeHooks for PushAway {
    fn before_tick(&mut self, tick: u64, world: &mut World) -> Result<()> {
        if tick != self.tick {
            return Ok(());
        }
        let object = world.object(TASK_OBJECT)?.pose.position;
        let base = world.state.base.position;
        let away = Vec3::new(object.x - base.x, object.y - base.y, 0.0)
            .try_normalize()
            .unwrap_or(Vec3::X);
        world.apply_perturbation(TASK_OBJECT, &Pose::from_translation(away * self.distance))?;
        self.applied = true;
        Ok(())
    }
}

fn hinge_angle(a: &Articulation) -> Option<f64> {
    match a {
        Articulation::Hinge(h) => Some(h.angle),
        _ => None,
    }
}

/// Task success on the final scene of a completed episode.
pub fn success(task: TaskId, episode: &Episode, s: &TaskSettings) -> Result<bool> {
    episode.require_complete()?;
    let object = episode.final_world.object(TASK_OBJECT)?;
    let deg = PI / 180.0;
    let a = &object.articulation;
    Ok(match task {
        TaskId::PressButton => matches!(a, Articulation::Button { pressed: true, .. }),
        TaskId::PushDoor => hinge_angle(a).is_some_and(|v| v >= s.door_open_deg * deg),
        TaskId::OpenDishwasher => hinge_angle(a).is_some_and(|v| v >= s.dishwasher_open_deg * deg),
        TaskId::CloseDishwasher => hinge_angle(a).is_some_and(|v| v <= s.dishwasher_closed_deg * deg),
        TaskId::TwistValve => hinge_angle(a).is_some_and(|v| v >= s.valve_deg * deg),
        TaskId::PullHandle => hinge_angle(a).is_some_and(|v| v >= s.handle_deg * deg),
        TaskId::LiftBasket => match a {
            Articulation::Carry(c) => {
                c.held && object.pose.position.z >= s.basket_height && c.carried >= s.basket_carry
            }
            _ => false,
        },
        TaskId::PullObjects => match a {
            Articulation::Slide(sl) => scenes::item_center_x(sl) < scenes::TABLE_EDGE_X,
            _ => false,
        },
        TaskId::ShootBall => {
            let start = episode
                .log
                .first()
                .and_then(|r| r.objects.iter().find(|o| o.id == TASK_OBJECT))
                .map(|o| o.pose)
                .ok_or(Error::UnknownObject(TASK_OBJECT))?;
            scenes::in_goal(&start, object.pose.position)
        }
    })
}
