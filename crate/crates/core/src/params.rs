//! Trajectory parameters: the record a planner hands to the tracking controller.

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curves::{lookahead_points, OrientationTrack, PhaseClock, TrajectoryCurve, CONTROL_POINTS};
use crate::geometry::{Pose, Quat};
use crate::math::{acos, Vec3};
use crate::{Error, Result};

/// Number of `f64` slots in the flat parameter layout.
pub const PARAM_SLOTS: usize = 1 + 3 * CONTROL_POINTS + CONTROL_POINTS + 4 + 4 + 1 + 1;

/// Default trajectory duration in seconds.
pub const DEFAULT_DURATION: f64 = 4.0;

/// Control period of the tracking loop (50 Hz).
pub const CONTROL_PERIOD: f64 = 0.02;

/// Number of lookahead points in a command.
pub const LOOKAHEAD: usize = 3;

/// Which front foot manipulates. Encoded as 0 (front left) / 1 (front right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manipulator {
    FrontLeft = 0,
    FrontRight = 1,
}

impl Manipulator {
    pub fn from_flag(flag: u8) -> Result<Self> {
        match flag {
            0 => Ok(Manipulator::FrontLeft),
            1 => Ok(Manipulator::FrontRight),
            other => Err(Error::InvalidFlag(other)),
        }
    }

    pub fn flag(self) -> u8 {
        self as u8
    }

    /// Leg index in `[FL, FR, RL, RR]` order.
    pub fn leg(self) -> usize {
        self as usize
    }
}

/// Frame a parameter set is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameTag {
    Object = 0,
    World = 1,
    Body = 2,
}

impl FrameTag {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FrameTag::Object),
            1 => Some(FrameTag::World),
            2 => Some(FrameTag::Body),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameTag::Object => "object",
            FrameTag::World => "world",
            FrameTag::Body => "body",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "object" => Some(FrameTag::Object),
            "world" => Some(FrameTag::World),
            "body" => Some(FrameTag::Body),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryParams {
    pub flag: Manipulator,
    pub curve: TrajectoryCurve,
    pub orientation: OrientationTrack,
    pub duration: f64,
    pub frame: FrameTag,
}

impl TrajectoryParams {
    pub fn new(
        flag: Manipulator,
        curve: TrajectoryCurve,
        orientation: OrientationTrack,
        duration: f64,
        frame: FrameTag,
    ) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidDuration(duration));
        }
        Ok(Self {
            flag,
            curve,
            orientation,
            duration,
            frame,
        })
    }

    /// A trajectory that holds `point` with a constant orientation.
    pub fn hold(flag: Manipulator, point: Vec3, orientation: Quat, frame: FrameTag) -> Self {
        Self {
            flag,
            curve: TrajectoryCurve::polynomial([point; CONTROL_POINTS])
                .expect("finite point with unit weights"),
            orientation: OrientationTrack::constant(orientation),
            duration: DEFAULT_DURATION,
            frame,
        }
    }

    /// Flat layout: flag, 7 points row-major, 7 weights, start and end
    /// quaternions (w, x, y, z), duration, frame code.
    pub fn to_flat(&self) -> [f64; PARAM_SLOTS] {
        let mut out = [0.0; PARAM_SLOTS];
        out[0] = self.flag.flag() as f64;
        let mut k = 1;
        for p in self.curve.points() {
            out[k..k + 3].copy_from_slice(&p.to_array());
            k += 3;
        }
        out[k..k + CONTROL_POINTS].copy_from_slice(self.curve.weights());
        k += CONTROL_POINTS;
        out[k..k + 4].copy_from_slice(&self.orientation.start.to_array());
        k += 4;
        out[k..k + 4].copy_from_slice(&self.orientation.end.to_array());
        k += 4;
        out[k] = self.duration;
        out[k + 1] = self.frame.code() as f64;
        out
    }

    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if v.len() != PARAM_SLOTS {
            return Err(Error::InvalidCurve("parameter record must have 39 slots"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("parameter record"));
        }
        let flag = flag_from_f64(v[0])?;
        let mut points = [Vec3::ZERO; CONTROL_POINTS];
        for (i, p) in points.iter_mut().enumerate() {
            *p = Vec3::new(v[1 + 3 * i], v[2 + 3 * i], v[3 + 3 * i]);
        }
        let mut k = 1 + 3 * CONTROL_POINTS;
        let mut weights = [0.0; CONTROL_POINTS];
        weights.copy_from_slice(&v[k..k + CONTROL_POINTS]);
        k += CONTROL_POINTS;
        let start = Quat::new(v[k], v[k + 1], v[k + 2], v[k + 3])?;
        let end = Quat::new(v[k + 4], v[k + 5], v[k + 6], v[k + 7])?;
        k += 8;
        let frame = FrameTag::from_code(v[k + 1] as u8)
            .filter(|_| libm::trunc(v[k + 1]) == v[k + 1])
            .ok_or(Error::InvalidCurve("unknown frame code"))?;
        Self::new(
            flag,
            TrajectoryCurve::new(points, weights)?,
            OrientationTrack::new(start, end)?,
            v[k],
            frame,
        )
    }
}

fn flag_from_f64(v: f64) -> Result<Manipulator> {
    if v == 0.0 {
        Ok(Manipulator::FrontLeft)
    } else if v == 1.0 {
        Ok(Manipulator::FrontRight)
    } else {
        Err(Error::InvalidFlag(if v > 255.0 || v < 0.0 { 255 } else { v as u8 }))
    }
}

/// Closed interval used by the randomization ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::DegenerateInterval {
                name,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        rng.random_range(self.lo..=self.hi)
    }
}

/// A parameter value outside its allowed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub field: &'static str,
    pub index: Option<usize>,
    pub value: f64,
    pub bound: Interval,
}

impl core::fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}] = {}", self.field, i, self.value)?,
            None => write!(f, "{} = {}", self.field, self.value)?,
        }
        write!(f, " outside [{}, {}]", self.bound.lo, self.bound.hi)
    }
}

/// Sampling ranges for random trajectory parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizationRanges {
    /// Control point x and y, meters.
    pub p_xy: Interval,
    /// Control point z, meters.
    pub p_z: Interval,
    /// Control point weights.
    pub w: Interval,
    /// Roll-like twist and yaw angles of the target orientations, radians.
    pub ori_phi_psi: Interval,
    /// Cosine of the tilt of the target orientations.
    pub ori_cos_theta: Interval,
}

impl Default for RandomizationRanges {
    fn default() -> Self {
        Self {
            p_xy: Interval::new(-2.0, 2.0),
            p_z: Interval::new(0.01, 1.2),
            w: Interval::new(1.0, 2000.0),
            ori_phi_psi: Interval::new(0.0, 2.0 * PI),
            ori_cos_theta: Interval::new(0.0, 1.0),
        }
    }
}

impl RandomizationRanges {
    pub fn validate(&self) -> Result<()> {
        self.p_xy.validate("p_xy")?;
        self.p_z.validate("p_z")?;
        self.w.validate("w")?;
        self.ori_phi_psi.validate("ori_phi_psi")?;
        self.ori_cos_theta.validate("ori_cos_theta")?;
        if self.w.lo <= 0.0 {
            return Err(Error::DegenerateInterval {
                name: "w",
                lo: self.w.lo,
                hi: self.w.hi,
            });
        }
        if self.ori_cos_theta.lo < -1.0 || self.ori_cos_theta.hi > 1.0 {
            return Err(Error::DegenerateInterval {
                name: "ori_cos_theta",
                lo: self.ori_cos_theta.lo,
                hi: self.ori_cos_theta.hi,
            });
        }
        Ok(())
    }

    pub fn check_point(&self, index: usize, p: Vec3) -> core::result::Result<(), BoundViolation> {
        let field_check = |field: &'static str, v: f64, b: Interval| {
            if b.contains(v) {
                Ok(())
            } else {
                Err(BoundViolation {
                    field,
                    index: Some(index),
                    value: v,
                    bound: b,
                })
            }
        };
        field_check("p_x", p.x, self.p_xy)?;
        field_check("p_y", p.y, self.p_xy)?;
        field_check("p_z", p.z, self.p_z)
    }

    pub fn check_weight(&self, index: usize, w: f64) -> core::result::Result<(), BoundViolation> {
        if self.w.contains(w) {
            Ok(())
        } else {
            Err(BoundViolation {
                field: "w",
                index: Some(index),
                value: w,
                bound: self.w,
            })
        }
    }

    /// Checks every control point and weight of `params`.
    pub fn check_params(&self, params: &TrajectoryParams) -> core::result::Result<(), BoundViolation> {
        for (i, p) in params.curve.points().iter().enumerate() {
            self.check_point(i, *p)?;
        }
        for (i, w) in params.curve.weights().iter().enumerate() {
            self.check_weight(i, *w)?;
        }
        Ok(())
    }

    /// Orientation from the `(phi, psi, cos theta)` parameterization: the toe
    /// direction is tilted `theta` from vertical toward heading `psi`, and
    /// twisted `phi` about itself.
    pub fn orientation_from_angles(phi: f64, psi: f64, cos_theta: f64) -> Quat {
        let theta = acos(cos_theta.clamp(-1.0, 1.0));
        Quat::from_yaw(psi) * Quat::from_axis_angle(Vec3::Y, theta) * Quat::from_yaw(phi)
    }
}

/// Draws a random body-frame parameter set; deterministic per seed.
pub fn sample_random_params(seed: u64, ranges: &RandomizationRanges) -> Result<TrajectoryParams> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = [Vec3::ZERO; CONTROL_POINTS];
    for p in points.iter_mut() {
        let x = ranges.p_xy.sample(&mut rng);
        let y = ranges.p_xy.sample(&mut rng);
        let z = ranges.p_z.sample(&mut rng);
        *p = Vec3::new(x, y, z);
    }
    let mut weights = [0.0; CONTROL_POINTS];
    for w in weights.iter_mut() {
        *w = ranges.w.sample(&mut rng);
    }
    let flag = if rng.random_bool(0.5) {
        Manipulator::FrontRight
    } else {
        Manipulator::FrontLeft
    };
    let mut ori = || {
        let phi = ranges.ori_phi_psi.sample(&mut rng);
        let psi = ranges.ori_phi_psi.sample(&mut rng);
        let c = ranges.ori_cos_theta.sample(&mut rng);
        RandomizationRanges::orientation_from_angles(phi, psi, c)
    };
    let start = ori();
    let end = ori();
    TrajectoryParams::new(
        flag,
        TrajectoryCurve::new(points, weights)?,
        OrientationTrack::new(start, end)?,
        DEFAULT_DURATION,
        FrameTag::Body,
    )
}

/// Applies a rigid transform to the parameters: control points are mapped
/// through `pose`, orientations are left-multiplied by its rotation. Weights,
/// flag, duration and frame tag are untouched.
pub fn transform_params(params: &TrajectoryParams, pose: &Pose) -> TrajectoryParams {
    let curve = params.curve.map_points(|p| pose.transform_point(p));
    let orientation = OrientationTrack {
        start: pose.orientation * params.orientation.start,
        end: pose.orientation * params.orientation.end,
    };
    TrajectoryParams {
        curve,
        orientation,
        ..*params
    }
}

/// Re-expresses `params` in `target`.
///
/// Supported hops are object <-> world (with `frame_pose` the object pose in
/// world) and world <-> body (with `frame_pose` the base pose in world).
/// Object <-> body has to go through world.
pub fn express_params(
    params: &TrajectoryParams,
    frame_pose: &Pose,
    target: FrameTag,
) -> Result<TrajectoryParams> {
    use FrameTag::*;
    let applied = match (params.frame, target) {
        (a, b) if a == b => return Ok(*params),
        (Object, World) | (Body, World) => *frame_pose,
        (World, Object) | (World, Body) => frame_pose.inverse(),
        (from, to) => return Err(Error::UnsupportedFrameHop { from, to }),
    };
    let mut out = transform_params(params, &applied);
    out.frame = target;
    Ok(out)
}

/// Per-tick controller input, all in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulationCommand {
    pub flag: Manipulator,
    pub desired_point: Vec3,
    pub lookahead: [Vec3; LOOKAHEAD],
    pub desired_orientation: Quat,
}

impl ManipulationCommand {
    /// A command that holds `point` (no motion ahead).
    pub fn stationary(flag: Manipulator, point: Vec3, orientation: Quat) -> Self {
        Self {
            flag,
            desired_point: point,
            lookahead: [point; LOOKAHEAD],
            desired_orientation: orientation,
        }
    }
}

/// Evaluates body-frame parameters at `t_now`.
pub fn build_command(
    params: &TrajectoryParams,
    clock: &PhaseClock,
    t_now: f64,
    dt: f64,
) -> Result<ManipulationCommand> {
    if params.frame != FrameTag::Body {
        return Err(Error::WrongFrame {
            expected: FrameTag::Body,
            found: params.frame,
        });
    }
    let s = clock.phase(t_now);
    let ahead = lookahead_points(&params.curve, clock, t_now, dt, LOOKAHEAD)?;
    Ok(ManipulationCommand {
        flag: params.flag,
        desired_point: params.curve.eval(s)?,
        lookahead: [ahead[0], ahead[1], ahead[2]],
        desired_orientation: params.orientation.slerp(s)?,
    })
}
