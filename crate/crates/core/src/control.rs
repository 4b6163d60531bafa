//! The 50 Hz tracking layer.
//!
//! [`OracleController`] stands in for a learned tracking policy: it solves
//! damped least-squares inverse kinematics for the manipulating leg, holds the
//! other legs in stance, steers the base so the target stays reachable, low-pass
//! filters the joint targets and reports PD torques. [`compute_reward`]
//! implements the tracking reward so it can be regression tested and logged.

use crate::geometry::Pose;
use crate::math::{atan2, exp, sqrt, Mat3, Vec3};
use crate::model::{leg_joints, set_leg_joints, JointVector, Leg, QuadrupedModel, RobotState, NUM_JOINTS};
use crate::params::{ManipulationCommand, CONTROL_PERIOD};
use crate::settings::{invalid, unknown_key, Settings};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Damping of the least-squares solve, rad^2.
    pub damping: f64,
    /// Inner IK iterations per control tick.
    pub max_iters: usize,
    /// Position-only iterations closing each tick, after the orientation pass.
    pub polish_iters: usize,
    /// Largest joint step of a single inner iteration, rad.
    pub max_step: f64,
    pub kp: f64,
    pub kd: f64,
    pub torque_limit: f64,
    pub lowpass_alpha: f64,
    pub pos_weight: f64,
    pub ori_weight: f64,
    pub control_period: f64,
    /// Feed-forward horizon covering filter plus actuator lag, s.
    pub lead_time: f64,
    pub gait: GaitLimits,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            damping: 1e-3,
            max_iters: 12,
            polish_iters: 4,
            max_step: 0.5,
            kp: 60.0,
            kd: 2.0,
            torque_limit: 44.0,
            lowpass_alpha: 0.2,
            pos_weight: 1.0,
            ori_weight: 0.1,
            control_period: CONTROL_PERIOD,
            // filter lag (1 - a) / a ticks plus first-order actuator lag at tau = 0.06 s
            lead_time: 0.13,
            gait: GaitLimits::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0) {
            return Err(invalid("damping must be positive"));
        }
        if !(self.lowpass_alpha > 0.0 && self.lowpass_alpha <= 1.0) {
            return Err(invalid("lowpass_alpha must lie in (0, 1]"));
        }
        if self.control_period != CONTROL_PERIOD {
            return Err(invalid("control period is fixed at 0.02 s"));
        }
        if self.max_iters == 0 || self.polish_iters > self.max_iters {
            return Err(invalid("need 0 < polish_iters <= max_iters"));
        }
        if !(self.max_step > 0.0 && self.torque_limit > 0.0 && self.lead_time >= 0.0) {
            return Err(invalid("max_step, torque_limit must be positive, lead_time non-negative"));
        }
        if !(self.pos_weight > 0.0 && self.ori_weight >= 0.0) {
            return Err(invalid("pos_weight must be positive, ori_weight non-negative"));
        }
        self.gait.validate()
    }
}

/// Saturation and gains of the base pursuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitLimits {
    pub max_lin: f64,
    pub max_yaw: f64,
    pub lin_gain: f64,
    pub yaw_gain: f64,
    /// Comfortable hip-to-target distance as a fraction of leg reach.
    pub comfort_ratio: f64,
    /// Horizontal distance under which the target always counts as comfortable, m.
    pub comfort_floor: f64,
    /// Distance over which yaw pursuit ramps in beyond the comfort radius, m.
    pub yaw_ramp: f64,
    /// Hip-to-target distance, as a fraction of leg reach, under which the
    /// base backs away.
    pub inner_ratio: f64,
    /// Sideways distance from the leg's neutral toe line tolerated without strafing, m.
    pub lateral_band: f64,
}

impl Default for GaitLimits {
    fn default() -> Self {
        Self {
            max_lin: 0.6,
            max_yaw: 1.0,
            lin_gain: 3.0,
            yaw_gain: 2.0,
            comfort_ratio: 0.7,
            comfort_floor: 0.2,
            yaw_ramp: 0.1,
            inner_ratio: 0.4,
            lateral_band: 0.02,
        }
    }
}

impl GaitLimits {
    fn validate(&self) -> Result<()> {
        let all_positive = [
            self.max_lin,
            self.max_yaw,
            self.lin_gain,
            self.yaw_gain,
            self.comfort_ratio,
            self.yaw_ramp,
        ]
        .iter()
        .all(|v| *v > 0.0);
        if !all_positive || self.comfort_floor < 0.0 || self.lateral_band < 0.0 || self.inner_ratio < 0.0 {
            return Err(invalid("gait gains and limits must be positive"));
        }
        Ok(())
    }
}

/// Body-frame base velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BaseCommand {
    /// Planar velocity in the body frame (z ignored), m/s.
    pub lin: Vec3,
    pub yaw_rate: f64,
}

impl BaseCommand {
    pub const ZERO: BaseCommand = BaseCommand {
        lin: Vec3::ZERO,
        yaw_rate: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub q_desired: JointVector,
    /// The target lies outside the leg's workspace shell; `q_desired` is the
    /// best-effort posture.
    pub out_of_reach: bool,
    /// Remaining toe position error of the solution against the IK target, m.
    pub residual: f64,
}

/// Desired toe direction encoded by a desired orientation.
pub fn desired_direction(q: crate::Quat) -> Vec3 {
    q.rotate(Vec3::Z)
}

/// Position target for this tick: the desired point advanced along the
/// lookahead by `lead_time`, compensated for base motion over that horizon.
fn feedforward_target(state: &RobotState, cmd: &ManipulationCommand, cfg: &ControllerConfig) -> Vec3 {
    let span = cmd.lookahead.len() as f64 * cfg.control_period;
    let curve_vel = (cmd.lookahead[cmd.lookahead.len() - 1] - cmd.desired_point) * (1.0 / span);
    let inv = state.base.orientation.inverse();
    let v_body = inv.rotate(state.base_lin_vel);
    let w_body = inv.rotate(state.base_ang_vel);
    let apparent = v_body + w_body.cross(cmd.desired_point);
    cmd.desired_point + (curve_vel - apparent) * cfg.lead_time
}

const BACKTRACK_STEPS: usize = 6;
/// Position error, m, the orientation objective may introduce.
const ORIENTATION_SLACK: f64 = 2e-4;

fn limit_step(dq: Vec3, max_step: f64) -> Vec3 {
    let step = dq.max_abs();
    if step > max_step {
        dq * (max_step / step)
    } else {
        dq
    }
}

/// Solves the manipulating leg toward `target` (body frame), starting from `seed`.
pub fn solve_leg(
    model: &QuadrupedModel,
    leg: Leg,
    seed: [f64; 3],
    target: Vec3,
    desired_dir: Option<Vec3>,
    cfg: &ControllerConfig,
) -> ([f64; 3], f64) {
    let mut ql = model.clamp_leg(leg, seed);
    let ori_gain = cfg.ori_weight / cfg.pos_weight;
    for iter in 0..cfg.max_iters {
        let e = target - model.toe_in_body(leg, ql);
        let orient_pass = iter < cfg.max_iters - cfg.polish_iters;
        if e.norm() < 1e-12 && !orient_pass {
            break;
        }
        let j = model.jacobian(leg, ql);
        let lambda = if j.determinant().abs() < 1e-6 {
            cfg.damping * 10.0
        } else {
            cfg.damping
        };
        let jt = j.transpose();
        let Some(inv) = (jt * j + Mat3::IDENTITY.scale(lambda)).inverse() else {
            break;
        };
        let pinv = inv * jt;
        let mut dq = limit_step(pinv * e, cfg.max_step);
        // the position step must reduce the error; halve until it does
        let now = e.norm();
        let mut moved = false;
        for _ in 0..BACKTRACK_STEPS {
            let next = model.clamp_leg(leg, [ql[0] + dq.x, ql[1] + dq.y, ql[2] + dq.z]);
            if (target - model.toe_in_body(leg, next)).norm() < now {
                ql = next;
                moved = true;
                break;
            }
            dq = dq * 0.5;
        }
        if let (true, Some(d)) = (orient_pass && ori_gain > 0.0, desired_dir) {
            // secondary objective, projected through the damped nullspace
            let j = model.jacobian(leg, ql);
            let jt = j.transpose();
            if let Some(inv) = (jt * j + Mat3::IDENTITY.scale(lambda)).inverse() {
                let u = model.toe_direction_in_body(leg, ql);
                let g = model.direction_jacobian(leg, ql).transpose() * (d - u) * ori_gain;
                let dn = limit_step((Mat3::IDENTITY - inv * jt * j) * g, cfg.max_step);
                let next = model.clamp_leg(leg, [ql[0] + dn.x, ql[1] + dn.y, ql[2] + dn.z]);
                let before = (target - model.toe_in_body(leg, ql)).norm();
                let after = (target - model.toe_in_body(leg, next)).norm();
                // position dominates: orientation may only cost a sliver of it
                if after <= before.max(ORIENTATION_SLACK) {
                    ql = next;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
    let residual = (target - model.toe_in_body(leg, ql)).norm();
    (ql, residual)
}

/// Residual improvement, m, needed before the solver abandons the posture
/// continued from the previous action.
const BRANCH_SWITCH: f64 = 1e-4;

/// One damped least-squares IK tick: desired joint positions for all legs.
///
/// The manipulating leg is solved toward the feed-forward target seeded from
/// the previous action; the other legs hold the nominal stance.
pub fn ik_tick(
    model: &QuadrupedModel,
    state: &RobotState,
    cmd: &ManipulationCommand,
    cfg: &ControllerConfig,
) -> IkSolution {
    let leg = Leg::from_index(cmd.flag.leg()).expect("flag maps onto a front leg");
    let target = feedforward_target(state, cmd, cfg);
    let dir = desired_direction(cmd.desired_orientation);
    let seed = leg_joints(&state.prev_action, leg);
    let (mut ql, mut residual) = solve_leg(model, leg, seed, target, Some(dir), cfg);
    if residual > BRANCH_SWITCH {
        // the previous posture may sit on a joint-limited local minimum
        let fresh = model.analytic_leg_ik(leg, target);
        let (q2, r2) = solve_leg(model, leg, fresh, target, Some(dir), cfg);
        if r2 + BRANCH_SWITCH < residual {
            (ql, residual) = (q2, r2);
        }
    }
    let mut q = model.stance;
    set_leg_joints(&mut q, leg, ql);
    IkSolution {
        q_desired: model.clamp_limits(&q),
        out_of_reach: !model.in_workspace(&Pose::IDENTITY, leg, target),
        residual,
    }
}

/// Proportional pursuit keeping the desired point within a comfortable
/// distance of the manipulating leg's hip.
///
/// Distances are measured from a line just outboard of the leg's neutral toe
/// line, and the base strafes whenever the point drifts sideways off it by
/// more than `lateral_band`.
pub fn gait_base_update(
    model: &QuadrupedModel,
    cmd: &ManipulationCommand,
    limits: &GaitLimits,
) -> BaseCommand {
    let leg = Leg::from_index(cmd.flag.leg()).expect("flag maps onto a front leg");
    let point = cmd.lookahead[cmd.lookahead.len() - 1];
    // centred one band outboard of the leg plane: the zone within the hip
    // offset of the abduction axis is unreachable near hip height
    let lateral = model.lateral(leg) + leg.side() * limits.lateral_band;
    let anchor = model.mounts[leg.index()].position + Vec3::new(0.0, lateral, 0.0);
    let rel = point - anchor;
    let horizontal = sqrt(rel.x * rel.x + rel.y * rel.y);
    let comfort = limits.comfort_ratio * model.reach();
    let radius = sqrt((comfort * comfort - rel.z * rel.z).max(0.0)).max(limits.comfort_floor);
    let excess = horizontal - radius;
    let side = rel.y.abs() - limits.lateral_band;
    let crowding = limits.inner_ratio * model.reach() - rel.norm();
    if excess <= 0.0 && side <= 0.0 && crowding <= 0.0 {
        return BaseCommand::ZERO;
    }
    let mut lin = Vec3::ZERO;
    if excess > 0.0 {
        lin = Vec3::new(rel.x, rel.y, 0.0) * (limits.lin_gain * excess / horizontal);
    } else if crowding > 0.0 {
        // back off along the horizontal line of sight, straight back when the
        // point is right above or below the anchor
        let away = Vec3::new(rel.x, rel.y, 0.0).try_normalize().unwrap_or(Vec3::X);
        lin = away * (-limits.lin_gain * crowding);
    }
    if side > 0.0 {
        let strafe = limits.lin_gain * side * rel.y.signum();
        if strafe.abs() > lin.y.abs() {
            lin.y = strafe;
        }
    }
    let speed = lin.norm();
    if speed > limits.max_lin {
        lin = lin * (limits.max_lin / speed);
    }
    // aim the anchor line at points ahead, the body centre at points behind
    let blend = (point.x / model.reach()).clamp(0.0, 1.0);
    let bearing = atan2(point.y - blend * anchor.y, point.x);
    let ramp = (excess / limits.yaw_ramp).clamp(0.0, 1.0);
    let yaw_rate = (limits.yaw_gain * bearing * ramp).clamp(-limits.max_yaw, limits.max_yaw);
    BaseCommand { lin, yaw_rate }
}

/// `alpha * raw + (1 - alpha) * prev`, componentwise.
pub fn lowpass(prev: &JointVector, raw: &JointVector, alpha: f64) -> JointVector {
    core::array::from_fn(|i| alpha * raw[i] + (1.0 - alpha) * prev[i])
}

/// `Kp (q_d - q) - Kd qd`, clamped to `±limit`.
pub fn pd_torque(
    q_d: &JointVector,
    q: &JointVector,
    qd: &JointVector,
    kp: f64,
    kd: f64,
    limit: f64,
) -> JointVector {
    core::array::from_fn(|i| (kp * (q_d[i] - q[i]) - kd * qd[i]).clamp(-limit, limit))
}

/// Tracking reward weights and scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub pos_xy: f64,
    pub pos_z: f64,
    pub ori: f64,
    pub ee_accel: f64,
    pub base_accel: f64,
    /// m^2
    pub sigma_xy: f64,
    /// m^2; a fifth of `sigma_xy` makes the z term five times as sensitive.
    pub sigma_z: f64,
    pub sigma_theta: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            pos_xy: 0.8,
            pos_z: 0.8,
            ori: 0.3,
            ee_accel: -5.0,
            base_accel: -5.0,
            sigma_xy: 0.25,
            sigma_z: 0.25 / 5.0,
            sigma_theta: 0.25,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_xy > 0.0 && self.sigma_z > 0.0 && self.sigma_theta > 0.0) {
            return Err(invalid("reward scales must be positive"));
        }
        Ok(())
    }
}

/// Weighted reward contributions; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardTerms {
    pub pos_xy: f64,
    pub pos_z: f64,
    pub ori: f64,
    pub ee_accel: f64,
    pub base_accel: f64,
    pub total: f64,
}

/// One tick of tracked quantities in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingSample {
    pub toe: Vec3,
    /// Unit toe direction.
    pub toe_dir: Vec3,
    pub base: Vec3,
}

/// Errors entering the exponential tracking terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingErrors {
    pub xy_sq: f64,
    pub z_sq: f64,
    /// `1 - toe_dir . desired_dir`
    pub misalignment: f64,
}

/// Reward from squared errors and accelerations.
pub fn reward_from_errors(
    err: &TrackingErrors,
    ee_accel_sq: f64,
    base_accel_sq: f64,
    w: &RewardWeights,
) -> RewardTerms {
    let pos_xy = w.pos_xy * exp(-err.xy_sq / w.sigma_xy);
    let pos_z = w.pos_z * exp(-err.z_sq / w.sigma_z);
    let ori = w.ori * exp(-err.misalignment / w.sigma_theta);
    let ee_accel = w.ee_accel * ee_accel_sq;
    let base_accel = w.base_accel * base_accel_sq;
    RewardTerms {
        pos_xy,
        pos_z,
        ori,
        ee_accel,
        base_accel,
        total: pos_xy + pos_z + ori + ee_accel + base_accel,
    }
}

/// Tracking reward at the newest sample of `window` (oldest first).
/// Accelerations are second differences over the last three samples.
pub fn compute_reward(
    window: &[TrackingSample],
    desired_point: Vec3,
    desired_dir: Vec3,
    weights: &RewardWeights,
    dt: f64,
) -> Result<RewardTerms> {
    if window.len() < 3 {
        return Err(Error::WindowTooShort {
            needed: 3,
            got: window.len(),
        });
    }
    let n = window.len();
    let (a, b, c) = (&window[n - 3], &window[n - 2], &window[n - 1]);
    let accel = |x0: Vec3, x1: Vec3, x2: Vec3| (x2 - x1 * 2.0 + x0) * (1.0 / (dt * dt));
    let ee = accel(a.toe, b.toe, c.toe);
    let base = accel(a.base, b.base, c.base);
    let e = c.toe - desired_point;
    let err = TrackingErrors {
        xy_sq: e.x * e.x + e.y * e.y,
        z_sq: e.z * e.z,
        misalignment: 1.0 - c.toe_dir.dot(desired_dir.normalize()),
    };
    Ok(reward_from_errors(&err, ee.norm_squared(), base.norm_squared(), weights))
}

/// Everything the controller produced in one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Raw policy action: desired joint positions.
    pub action: JointVector,
    /// Action after the low-pass filter; what the joints track.
    pub filtered: JointVector,
    pub torque: JointVector,
    pub base: BaseCommand,
    pub out_of_reach: bool,
}

/// IK-based stand-in for a learned tracking policy. Holds the filter memory
/// of one episode.
#[derive(Debug, Clone)]
pub struct OracleController {
    model: QuadrupedModel,
    cfg: ControllerConfig,
    filtered: Option<JointVector>,
}

impl OracleController {
    pub fn new(model: QuadrupedModel, cfg: ControllerConfig) -> Result<Self> {
        model.validate()?;
        cfg.validate()?;
        Ok(Self {
            model,
            cfg,
            filtered: None,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn model(&self) -> &QuadrupedModel {
        &self.model
    }

    pub fn reset(&mut self) {
        self.filtered = None;
    }

    pub fn act(&mut self, state: &RobotState, cmd: &ManipulationCommand) -> ControlOutput {
        let ik = ik_tick(&self.model, state, cmd, &self.cfg);
        let prev = self.filtered.unwrap_or(state.q);
        let filtered = lowpass(&prev, &ik.q_desired, self.cfg.lowpass_alpha);
        self.filtered = Some(filtered);
        let torque = pd_torque(
            &filtered,
            &state.q,
            &state.qd,
            self.cfg.kp,
            self.cfg.kd,
            self.cfg.torque_limit,
        );
        ControlOutput {
            action: ik.q_desired,
            filtered,
            torque,
            base: gait_base_update(&self.model, cmd, &self.cfg.gait),
            out_of_reach: ik.out_of_reach,
        }
    }
}

const CONTROLLER_KEYS: &[&str] = &[
    "damping",
    "max_iters",
    "polish_iters",
    "max_step",
    "kp",
    "kd",
    "torque_limit",
    "lowpass_alpha",
    "pos_weight",
    "ori_weight",
    "lead_time",
    "gait.max_lin",
    "gait.max_yaw",
    "gait.lin_gain",
    "gait.yaw_gain",
    "gait.comfort_ratio",
    "gait.comfort_floor",
    "gait.lateral_band",
    "gait.inner_ratio",
];

impl Settings for ControllerConfig {
    fn keys(&self) -> &'static [&'static str] {
        CONTROLLER_KEYS
    }

    fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "damping" => self.damping,
            "max_iters" => self.max_iters as f64,
            "polish_iters" => self.polish_iters as f64,
            "max_step" => self.max_step,
            "kp" => self.kp,
            "kd" => self.kd,
            "torque_limit" => self.torque_limit,
            "lowpass_alpha" => self.lowpass_alpha,
            "pos_weight" => self.pos_weight,
            "ori_weight" => self.ori_weight,
            "lead_time" => self.lead_time,
            "gait.max_lin" => self.gait.max_lin,
            "gait.max_yaw" => self.gait.max_yaw,
            "gait.lin_gain" => self.gait.lin_gain,
            "gait.yaw_gain" => self.gait.yaw_gain,
            "gait.comfort_ratio" => self.gait.comfort_ratio,
            "gait.comfort_floor" => self.gait.comfort_floor,
            "gait.lateral_band" => self.gait.lateral_band,
            "gait.inner_ratio" => self.gait.inner_ratio,
            _ => return None,
        })
    }

    fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(invalid("value must be finite"));
        }
        let mut c = *self;
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && libm::trunc(v) == v && v <= 10_000.0 {
                Ok(v as usize)
            } else {
                Err(invalid("iteration counts must be non-negative integers"))
            }
        };
        match key {
            "damping" => c.damping = value,
            "max_iters" => c.max_iters = count(value)?,
            "polish_iters" => c.polish_iters = count(value)?,
            "max_step" => c.max_step = value,
            "kp" => c.kp = value,
            "kd" => c.kd = value,
            "torque_limit" => c.torque_limit = value,
            "lowpass_alpha" => c.lowpass_alpha = value,
            "pos_weight" => c.pos_weight = value,
            "ori_weight" => c.ori_weight = value,
            "lead_time" => c.lead_time = value,
            "gait.max_lin" => c.gait.max_lin = value,
            "gait.max_yaw" => c.gait.max_yaw = value,
            "gait.lin_gain" => c.gait.lin_gain = value,
            "gait.yaw_gain" => c.gait.yaw_gain = value,
            "gait.comfort_ratio" => c.gait.comfort_ratio = value,
            "gait.comfort_floor" => c.gait.comfort_floor = value,
            "gait.lateral_band" => c.gait.lateral_band = value,
            "gait.inner_ratio" => c.gait.inner_ratio = value,
            _ => return Err(unknown_key(key)),
        }
        c.validate()?;
        *self = c;
        Ok(())
    }
}

const REWARD_KEYS: &[&str] = &[
    "pos_xy",
    "pos_z",
    "ori",
    "ee_accel",
    "base_accel",
    "sigma_xy",
    "sigma_z",
    "sigma_theta",
];

impl Settings for RewardWeights {
    fn keys(&self) -> &'static [&'static str] {
        REWARD_KEYS
    }

    fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "pos_xy" => self.pos_xy,
            "pos_z" => self.pos_z,
            "ori" => self.ori,
            "ee_accel" => self.ee_accel,
            "base_accel" => self.base_accel,
            "sigma_xy" => self.sigma_xy,
            "sigma_z" => self.sigma_z,
            "sigma_theta" => self.sigma_theta,
            _ => return None,
        })
    }

    fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(invalid("value must be finite"));
        }
        let mut w = *self;
        match key {
            "pos_xy" => w.pos_xy = value,
            "pos_z" => w.pos_z = value,
            "ori" => w.ori = value,
            "ee_accel" => w.ee_accel = value,
            "base_accel" => w.base_accel = value,
            "sigma_xy" => w.sigma_xy = value,
            "sigma_z" => w.sigma_z = value,
            "sigma_theta" => w.sigma_theta = value,
            _ => return Err(unknown_key(key)),
        }
        w.validate()?;
        *self = w;
        Ok(())
    }
}

/// Number of joints, re-exported for callers sizing action buffers.
pub const ACTION_DIM: usize = NUM_JOINTS;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Manipulator;
    use crate::Quat;

    fn stationary(point: Vec3) -> ManipulationCommand {
        ManipulationCommand::stationary(Manipulator::FrontRight, point, Quat::IDENTITY)
    }

    #[test]
    fn zero_error_is_a_fixed_point() {
        let m = QuadrupedModel::default();
        let cfg = ControllerConfig::default();
        let mut s = RobotState::standing(&m, 0.0, 0.0, 0.0);
        set_leg_joints(&mut s.q, Leg::FrontRight, [0.2, 0.5, -1.1]);
        s.prev_action = s.q;
        let toe = m.toe_in_body(Leg::FrontRight, leg_joints(&s.q, Leg::FrontRight));
        let cmd = ManipulationCommand::stationary(
            Manipulator::FrontRight,
            toe,
            Quat::from_yaw(2.0) * Quat::from_axis_angle(Vec3::X, 1.0),
        );
        let sol = ik_tick(&m, &s, &cmd, &cfg);
        for j in 3..6 {
            assert!((sol.q_desired[j] - s.q[j]).abs() < 1e-6);
        }
        assert!(!sol.out_of_reach);
    }

    #[test]
    fn reachable_target_converges() {
        let m = QuadrupedModel::default();
        let cfg = ControllerConfig::default();
        let mut s = RobotState::standing(&m, 0.0, 0.0, 0.0);
        let target = m.toe_in_body(Leg::FrontRight, [-0.3, 1.9, -0.9]);
        let cmd = stationary(target);
        for _ in 0..50 {
            let sol = ik_tick(&m, &s, &cmd, &cfg);
            s.q = sol.q_desired;
            s.prev_action = sol.q_desired;
        }
        let toe = m.toe_in_body(Leg::FrontRight, leg_joints(&s.q, Leg::FrontRight));
        assert!(toe.distance(target) < 1e-3);
        assert!(m.within_limits(&s.q));
    }

    #[test]
    fn far_target_signals_out_of_reach() {
        let m = QuadrupedModel::default();
        let cfg = ControllerConfig::default();
        let s = RobotState::standing(&m, 0.0, 0.0, 0.0);
        let sol = ik_tick(&m, &s, &stationary(Vec3::new(10.0, 0.0, 0.0)), &cfg);
        assert!(sol.out_of_reach);
        assert!(m.within_limits(&sol.q_desired));
    }

    #[test]
    fn gait_cases() {
        let m = QuadrupedModel::default();
        let lim = GaitLimits::default();
        let hip = m.mounts[Leg::FrontRight.index()].position;
        let under = stationary(hip + Vec3::new(0.0, m.lateral(Leg::FrontRight) - 0.02, -0.3));
        assert_eq!(gait_base_update(&m, &under, &lim), BaseCommand::ZERO);
        let ahead = gait_base_update(&m, &stationary(Vec3::new(3.0, 0.0, 0.0)), &lim);
        assert!((ahead.lin.norm() - 0.6).abs() < 1e-12);
        assert!(ahead.lin.x > 0.59);
        for k in 1..36 {
            // sampled headings behind the robot, away from the exact +-pi tie
            let heading = core::f64::consts::PI * (0.5 + k as f64 / 72.0);
            for sign in [1.0, -1.0] {
                let a = sign * heading;
                let p = Vec3::new(2.0 * libm::cos(a), 2.0 * libm::sin(a), 0.0);
                let c = gait_base_update(&m, &stationary(p), &lim);
                assert_eq!(c.yaw_rate.signum(), sign, "heading {a}");
            }
        }
    }

    #[test]
    fn lowpass_cases() {
        let prev = [0.5; 12];
        let raw = [1.5; 12];
        assert_eq!(lowpass(&prev, &raw, 1.0), raw);
        assert_eq!(lowpass(&prev, &prev, 0.3), prev);
        let mut y = prev;
        let alpha = 0.2;
        for k in 1..30 {
            y = lowpass(&y, &raw, alpha);
            let expect = 1.5 - 1.0 * (1.0f64 - alpha).powi(k);
            assert!((y[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn lowpass_is_convex_combination() {
        let prev: JointVector = core::array::from_fn(|i| (i as f64 * 0.37).sin());
        let raw: JointVector = core::array::from_fn(|i| (i as f64 * 1.1).cos());
        for alpha in [0.01, 0.2, 0.5, 0.99, 1.0] {
            let out = lowpass(&prev, &raw, alpha);
            for i in 0..12 {
                assert!(out[i] >= prev[i].min(raw[i]) - 1e-15);
                assert!(out[i] <= prev[i].max(raw[i]) + 1e-15);
            }
        }
    }

    #[test]
    fn pd_cases() {
        let q = [0.3; 12];
        let zero = [0.0; 12];
        assert_eq!(pd_torque(&q, &q, &zero, 60.0, 2.0, 1e9), zero);
        let qd: JointVector = core::array::from_fn(|i| q[i] + 1.0);
        let t = pd_torque(&qd, &q, &zero, 60.0, 2.0, 1e9);
        assert!(t.iter().all(|v| (v - 60.0).abs() < 1e-12));
        let t2 = pd_torque(&qd, &q, &zero, 120.0, 2.0, 1e9);
        assert!(t2.iter().zip(t.iter()).all(|(a, b)| (a - 2.0 * b).abs() < 1e-12));
        let clamped = pd_torque(&qd, &q, &zero, 60.0, 2.0, 44.0);
        assert!(clamped.iter().all(|v| *v == 44.0));
    }

    fn still(toe: Vec3, dir: Vec3) -> [TrackingSample; 3] {
        [TrackingSample {
            toe,
            toe_dir: dir,
            base: Vec3::new(1.0, 2.0, 0.4),
        }; 3]
    }

    #[test]
    fn perfect_tracking_scores_sum_of_weights() {
        let w = RewardWeights::default();
        let p = Vec3::new(0.5, 0.1, 0.3);
        let r = compute_reward(&still(p, Vec3::Z), p, Vec3::Z, &w, CONTROL_PERIOD).unwrap();
        assert!((r.total - 1.9).abs() < 1e-12);
        assert_eq!((r.pos_xy, r.pos_z, r.ori), (0.8, 0.8, 0.3));
    }

    #[test]
    fn xy_error_at_sigma() {
        let w = RewardWeights::default();
        let p = Vec3::new(0.5, 0.1, 0.3);
        let toe = p + Vec3::new(0.3, 0.4, 0.0);
        let r = compute_reward(&still(toe, Vec3::Z), p, Vec3::Z, &w, CONTROL_PERIOD).unwrap();
        let expect = 0.8 * (-1.0f64).exp() + 0.8 + 0.3;
        assert!((r.total - expect).abs() < 1e-12);
    }

    #[test]
    fn short_window_rejected() {
        let w = RewardWeights::default();
        let s = still(Vec3::ZERO, Vec3::Z);
        assert_eq!(
            compute_reward(&s[..2], Vec3::ZERO, Vec3::Z, &w, CONTROL_PERIOD),
            Err(Error::WindowTooShort { needed: 3, got: 2 })
        );
    }

    #[test]
    fn accelerations_penalized() {
        let w = RewardWeights::default();
        let dt = CONTROL_PERIOD;
        let mk = |x: f64| TrackingSample {
            toe: Vec3::new(x, 0.0, 0.0),
            toe_dir: Vec3::Z,
            base: Vec3::ZERO,
        };
        // x = t^2 / 2 sampled at dt has second difference dt^2 -> accel 1
        let win = [mk(0.0), mk(0.5 * dt * dt), mk(2.0 * dt * dt)];
        let r = compute_reward(&win, win[2].toe, Vec3::Z, &w, dt).unwrap();
        assert!((r.ee_accel + 5.0).abs() < 1e-9);
        assert_eq!(r.base_accel, 0.0);
    }
}
