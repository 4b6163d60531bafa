//! Kinematic model of a 12-DoF quadruped.
//!
//! Legs are ordered `[FL, FR, RL, RR]`, each with joints
//! `[hip abduction, hip flexion, knee]`. In a leg's hip frame the abduction
//! axis is x, flexion and knee axes are y after abduction, and the toe of a
//! straight leg at zero angles sits at `(0, ±hip_offset, -(thigh + shank))`.
//!
//! The toe has no orientation of its own. Its direction is the unit shank
//! axis pointing from toe to knee, and its orientation is the minimal
//! rotation taking world `+z` onto that direction.

use crate::geometry::{Pose, Quat};
use crate::math::{acos, atan2, cos, sin, sqrt, wrap_angle, Mat3, Vec3};
use crate::settings::{invalid, unknown_key, Settings};
use crate::Result;

pub const NUM_LEGS: usize = 4;
pub const NUM_JOINTS: usize = 12;

pub type JointVector = [f64; NUM_JOINTS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    FrontLeft = 0,
    FrontRight = 1,
    RearLeft = 2,
    RearRight = 3,
}

impl Leg {
    pub const ALL: [Leg; NUM_LEGS] = [Leg::FrontLeft, Leg::FrontRight, Leg::RearLeft, Leg::RearRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Leg> {
        Self::ALL.get(i).copied()
    }

    /// +1 for left legs, -1 for right legs.
    pub fn side(self) -> f64 {
        match self {
            Leg::FrontLeft | Leg::RearLeft => 1.0,
            Leg::FrontRight | Leg::RearRight => -1.0,
        }
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::FrontLeft | Leg::FrontRight)
    }

    /// Index of this leg's first joint in a [`JointVector`].
    pub fn joint_offset(self) -> usize {
        3 * self.index()
    }
}

pub fn leg_joints(q: &JointVector, leg: Leg) -> [f64; 3] {
    let o = leg.joint_offset();
    [q[o], q[o + 1], q[o + 2]]
}

pub fn set_leg_joints(q: &mut JointVector, leg: Leg, v: [f64; 3]) {
    let o = leg.joint_offset();
    q[o..o + 3].copy_from_slice(&v);
}

/// Evenly spaced abduction angles tried by the closed-form solver.
const ABDUCTION_SAMPLES: usize = 17;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupedModel {
    /// Hip (abduction joint) frames on the base, `[FL, FR, RL, RR]`.
    pub mounts: [Pose; NUM_LEGS],
    pub hip_offset: f64,
    pub thigh: f64,
    pub shank: f64,
    pub limits: [(f64, f64); NUM_JOINTS],
    pub stance: JointVector,
    mount_x: f64,
    mount_y: f64,
}

/// Approximate Aliengo-like geometry; the real constants are not published.
impl Default for QuadrupedModel {
    fn default() -> Self {
        let mut m = Self {
            mounts: [Pose::IDENTITY; NUM_LEGS],
            hip_offset: 0.083,
            thigh: 0.25,
            shank: 0.25,
            limits: [(0.0, 0.0); NUM_JOINTS],
            stance: [0.0; NUM_JOINTS],
            mount_x: 0.24,
            mount_y: 0.05,
        };
        m.set_symmetric_limits(0.87, 3.35, 2.7);
        m.set_symmetric_stance(0.0, 0.8, -1.5);
        m.rebuild_mounts();
        m
    }
}

impl QuadrupedModel {
    pub fn reach(&self) -> f64 {
        self.thigh + self.shank
    }

    fn rebuild_mounts(&mut self) {
        for leg in Leg::ALL {
            let sx = if leg.is_front() { 1.0 } else { -1.0 };
            self.mounts[leg.index()] =
                Pose::from_translation(Vec3::new(sx * self.mount_x, leg.side() * self.mount_y, 0.0));
        }
    }

    fn set_symmetric_limits(&mut self, abduction: f64, flexion: f64, knee: f64) {
        for leg in Leg::ALL {
            let o = leg.joint_offset();
            self.limits[o] = (-abduction, abduction);
            self.limits[o + 1] = (-flexion, flexion);
            // the knee folds one way only
            self.limits[o + 2] = (-knee, 0.0);
        }
    }

    fn set_symmetric_stance(&mut self, abduction: f64, flexion: f64, knee: f64) {
        for leg in Leg::ALL {
            set_leg_joints(&mut self.stance, leg, [abduction, flexion, knee]);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thigh > 0.0 && self.shank > 0.0 && self.hip_offset > 0.0) {
            return Err(invalid("link lengths must be positive"));
        }
        if self.limits.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(invalid("joint limits need lo < hi"));
        }
        if self
            .stance
            .iter()
            .zip(self.limits.iter())
            .any(|(q, (lo, hi))| q < lo || q > hi)
        {
            return Err(invalid("stance outside joint limits"));
        }
        Ok(())
    }

    /// Signed lateral offset of the toe from the abduction axis.
    /// Signed lateral offset of the leg plane from the abduction axis.
    pub fn lateral(&self, leg: Leg) -> f64 {
        leg.side() * self.hip_offset
    }

    /// Closed-form leg posture placing the toe at `target` (base frame) with
    /// the knee folded the permitted way. For targets the limits make
    /// unreachable it returns a posture near the closest reachable point, so
    /// it is a good seed for a local solver.
    pub fn analytic_leg_ik(&self, leg: Leg, target: Vec3) -> [f64; 3] {
        let p = self.mounts[leg.index()].inverse_transform_point(target);
        let d = self.lateral(leg);
        let o = leg.joint_offset();
        let (lo, hi) = self.limits[o];
        let plane = sqrt((p.y * p.y + p.z * p.z - d * d).max(0.0));
        let mut candidates = [0.0; 2 + ABDUCTION_SAMPLES];
        candidates[0] = wrap_angle(atan2(p.z, p.y) - atan2(-plane, d));
        candidates[1] = wrap_angle(atan2(p.z, p.y) - atan2(plane, d));
        for k in 0..ABDUCTION_SAMPLES {
            candidates[2 + k] = lo + (hi - lo) * k as f64 / (ABDUCTION_SAMPLES - 1) as f64;
        }
        let solve = |q1: f64| {
            let q = self.sagittal_ik(leg, q1.clamp(lo, hi), p);
            (self.toe_in_hip(leg, q).distance(p), q)
        };
        let mut best = (f64::INFINITY, [0.0; 3]);
        for q1 in candidates {
            let c = solve(q1);
            if c.0 < best.0 {
                best = c;
            }
        }
        // golden-section refinement of the abduction around the best sample
        let spacing = (hi - lo) / (ABDUCTION_SAMPLES - 1) as f64;
        let (mut a, mut b) = ((best.1[0] - spacing).max(lo), (best.1[0] + spacing).min(hi));
        let g = 0.5 * (sqrt(5.0) - 1.0);
        for _ in 0..40 {
            let (x1, x2) = (b - g * (b - a), a + g * (b - a));
            if solve(x1).0 < solve(x2).0 {
                b = x2;
            } else {
                a = x1;
            }
        }
        let refined = solve(0.5 * (a + b));
        if refined.0 < best.0 {
            best = refined;
        }
        best.1
    }

    /// Flexion and knee for a fixed abduction `q1`, aiming the two-link
    /// chain at the projection of `p` (hip frame) onto the leg plane.
    fn sagittal_ik(&self, leg: Leg, q1: f64, p: Vec3) -> [f64; 3] {
        let (s1, c1) = (sin(q1), cos(q1));
        let (x, z) = (p.x, c1 * p.z - s1 * p.y);
        let (l1, l2) = (self.thigh, self.shank);
        let fold_limit = -self.limits[leg.joint_offset() + 2].0;
        let c3 = ((x * x + z * z - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
        let q3 = -acos(c3).min(fold_limit);
        let q2 = wrap_angle(atan2(-x, -z) - atan2(l2 * sin(q3), l1 + l2 * cos(q3)));
        self.clamp_leg(leg, [q1, q2, q3])
    }

    /// Toe position in the leg's hip frame.
    pub fn toe_in_hip(&self, leg: Leg, q: [f64; 3]) -> Vec3 {
        let (s1, c1) = (sin(q[0]), cos(q[0]));
        let px = -self.thigh * sin(q[1]) - self.shank * sin(q[1] + q[2]);
        let pz = -self.thigh * cos(q[1]) - self.shank * cos(q[1] + q[2]);
        let d = self.lateral(leg);
        Vec3::new(px, d * c1 - pz * s1, d * s1 + pz * c1)
    }

    pub fn knee_in_hip(&self, leg: Leg, q: [f64; 3]) -> Vec3 {
        let (s1, c1) = (sin(q[0]), cos(q[0]));
        let px = -self.thigh * sin(q[1]);
        let pz = -self.thigh * cos(q[1]);
        let d = self.lateral(leg);
        Vec3::new(px, d * c1 - pz * s1, d * s1 + pz * c1)
    }

    /// Toe position in the base frame.
    pub fn toe_in_body(&self, leg: Leg, q: [f64; 3]) -> Vec3 {
        self.mounts[leg.index()].transform_point(self.toe_in_hip(leg, q))
    }

    /// Unit shank direction (toe to knee) in the base frame.
    pub fn toe_direction_in_body(&self, leg: Leg, q: [f64; 3]) -> Vec3 {
        let (s1, c1) = (sin(q[0]), cos(q[0]));
        let (s23, c23) = (sin(q[1] + q[2]), cos(q[1] + q[2]));
        self.mounts[leg.index()].transform_vector(Vec3::new(s23, -c23 * s1, c23 * c1))
    }

    /// Hip joint position in the world.
    pub fn hip_in_world(&self, base: &Pose, leg: Leg) -> Vec3 {
        base.transform_point(self.mounts[leg.index()].position)
    }

    /// Toe pose of one leg in the world.
    pub fn toe_pose(&self, q: &JointVector, base: &Pose, leg: Leg) -> Pose {
        let lq = leg_joints(q, leg);
        let p = base.transform_point(self.toe_in_body(leg, lq));
        let u = base.transform_vector(self.toe_direction_in_body(leg, lq));
        Pose::new(p, Quat::from_two_vectors(Vec3::Z, u))
    }

    /// Toe poses of all four legs in the world frame.
    pub fn forward_kinematics(&self, q: &JointVector, base: &Pose) -> [Pose; NUM_LEGS] {
        Leg::ALL.map(|leg| self.toe_pose(q, base, leg))
    }

    /// Analytic 3x3 Jacobian of the toe position (base frame) with respect to
    /// the leg's three joints.
    pub fn jacobian(&self, leg: Leg, q: [f64; 3]) -> Mat3 {
        let (s1, c1) = (sin(q[0]), cos(q[0]));
        let (s2, c2) = (sin(q[1]), cos(q[1]));
        let (s23, c23) = (sin(q[1] + q[2]), cos(q[1] + q[2]));
        let px = -self.thigh * s2 - self.shank * s23;
        let pz = -self.thigh * c2 - self.shank * c23;
        let d = self.lateral(leg);
        let col1 = Vec3::new(0.0, -d * s1 - pz * c1, d * c1 - pz * s1);
        let col2 = Vec3::new(pz, px * s1, -px * c1);
        let col3 = Vec3::new(
            -self.shank * c23,
            -s1 * self.shank * s23,
            c1 * self.shank * s23,
        );
        let r = self.mounts[leg.index()].orientation.to_mat3();
        r * Mat3::from_cols(col1, col2, col3)
    }

    /// Jacobian of the toe direction (base frame) with respect to the leg joints.
    pub fn direction_jacobian(&self, leg: Leg, q: [f64; 3]) -> Mat3 {
        let (s1, c1) = (sin(q[0]), cos(q[0]));
        let (s23, c23) = (sin(q[1] + q[2]), cos(q[1] + q[2]));
        let col1 = Vec3::new(0.0, -c23 * c1, -c23 * s1);
        let col23 = Vec3::new(c23, s23 * s1, -s23 * c1);
        let r = self.mounts[leg.index()].orientation.to_mat3();
        r * Mat3::from_cols(col1, col23, col23)
    }

    /// True iff the hip-to-point distance lies strictly inside
    /// `(0.05 reach, 0.98 reach)`.
    pub fn in_workspace(&self, base: &Pose, leg: Leg, point: Vec3) -> bool {
        let d = point.distance(self.hip_in_world(base, leg));
        let r = self.reach();
        d > 0.05 * r && d < 0.98 * r
    }

    pub fn clamp_limits(&self, q: &JointVector) -> JointVector {
        let mut out = *q;
        for (v, (lo, hi)) in out.iter_mut().zip(self.limits.iter()) {
            *v = v.clamp(*lo, *hi);
        }
        out
    }

    pub fn clamp_leg(&self, leg: Leg, q: [f64; 3]) -> [f64; 3] {
        let o = leg.joint_offset();
        core::array::from_fn(|j| q[j].clamp(self.limits[o + j].0, self.limits[o + j].1))
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        q.iter()
            .zip(self.limits.iter())
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Base height that puts the stance toes on the ground.
    pub fn nominal_base_height(&self) -> f64 {
        -self.toe_in_hip(Leg::FrontLeft, leg_joints(&self.stance, Leg::FrontLeft)).z
    }

    /// Horizontal distance from hip to toe in the nominal stance.
    pub fn stance_radius(&self) -> f64 {
        let p = self.toe_in_hip(Leg::FrontLeft, leg_joints(&self.stance, Leg::FrontLeft));
        sqrt(p.x * p.x + p.y * p.y)
    }
}

const MODEL_KEYS: &[&str] = &[
    "hip_offset",
    "thigh",
    "shank",
    "mount_x",
    "mount_y",
    "limit.abduction",
    "limit.flexion",
    "limit.knee",
    "stance.abduction",
    "stance.flexion",
    "stance.knee",
];

impl Settings for QuadrupedModel {
    fn keys(&self) -> &'static [&'static str] {
        MODEL_KEYS
    }

    fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "hip_offset" => self.hip_offset,
            "thigh" => self.thigh,
            "shank" => self.shank,
            "mount_x" => self.mount_x,
            "mount_y" => self.mount_y,
            "limit.abduction" => self.limits[0].1,
            "limit.flexion" => self.limits[1].1,
            "limit.knee" => -self.limits[2].0,
            "stance.abduction" => self.stance[0],
            "stance.flexion" => self.stance[1],
            "stance.knee" => self.stance[2],
            _ => return None,
        })
    }

    fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let mut m = self.clone();
        let (a, f, k) = (m.limits[0].1, m.limits[1].1, -m.limits[2].0);
        let (sa, sf, sk) = (m.stance[0], m.stance[1], m.stance[2]);
        match key {
            "hip_offset" => m.hip_offset = value,
            "thigh" => m.thigh = value,
            "shank" => m.shank = value,
            "mount_x" => m.mount_x = value,
            "mount_y" => m.mount_y = value,
            "limit.abduction" => m.set_symmetric_limits(value, f, k),
            "limit.flexion" => m.set_symmetric_limits(a, value, k),
            "limit.knee" => m.set_symmetric_limits(a, f, value),
            "stance.abduction" => m.set_symmetric_stance(value, sf, sk),
            "stance.flexion" => m.set_symmetric_stance(sa, value, sk),
            "stance.knee" => m.set_symmetric_stance(sa, sf, value),
            _ => return Err(unknown_key(key)),
        }
        if !value.is_finite() {
            return Err(invalid("value must be finite"));
        }
        m.rebuild_mounts();
        m.validate()?;
        *self = m;
        Ok(())
    }
}

/// Gravity magnitude used in the proprioceptive gravity vector.
pub const GRAVITY: f64 = 9.81;

/// Full robot state. `gravity_body` is world gravity `(0, 0, -9.81)`
/// expressed in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub base: Pose,
    /// World frame, m/s.
    pub base_lin_vel: Vec3,
    /// World frame, rad/s.
    pub base_ang_vel: Vec3,
    pub q: JointVector,
    pub qd: JointVector,
    pub prev_action: JointVector,
    pub gravity_body: Vec3,
}

impl RobotState {
    /// Standing at rest in the nominal stance at `(x, y)` with heading `yaw`.
    pub fn standing(model: &QuadrupedModel, x: f64, y: f64, yaw: f64) -> Self {
        let base = Pose::from_xy_yaw(x, y, model.nominal_base_height(), yaw);
        Self {
            base,
            base_lin_vel: Vec3::ZERO,
            base_ang_vel: Vec3::ZERO,
            q: model.stance,
            qd: [0.0; NUM_JOINTS],
            prev_action: model.stance,
            gravity_body: base.orientation.inverse().rotate(Vec3::new(0.0, 0.0, -GRAVITY)),
        }
    }

    pub fn toe_pose(&self, model: &QuadrupedModel, leg: Leg) -> Pose {
        model.toe_pose(&self.q, &self.base, leg)
    }
}
