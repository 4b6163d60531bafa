use alloc::vec::Vec;

use crate::control::BaseCommand;
use crate::geometry::Pose;
use crate::math::{exp, Vec3};
use crate::model::{JointVector, Leg, QuadrupedModel, RobotState, GRAVITY, NUM_JOINTS};
use crate::params::{Manipulator, CONTROL_PERIOD};
use crate::settings::{invalid, unknown_key, Settings};
use crate::sim::scene::{sample_cloud, SceneObject};
use crate::{Error, Quat, Result};

/// Actuator and base integration parameters of the kinematic simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// First-order joint lag time constant, s.
    pub joint_tau: f64,
    /// Joint speed limit, rad/s.
    pub joint_rate_limit: f64,
    /// Base planar speed saturation, m/s.
    pub base_max_lin: f64,
    /// Base yaw-rate saturation, rad/s.
    pub base_max_yaw: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            joint_tau: 0.06,
            joint_rate_limit: 10.0,
            base_max_lin: 1.0,
            base_max_yaw: 1.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.joint_tau,
            self.joint_rate_limit,
            self.base_max_lin,
            self.base_max_yaw,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(invalid("simulator constants must be positive"))
        }
    }

    /// Per-tick fraction of the remaining joint error closed by the lag.
    pub fn joint_blend(&self) -> f64 {
        1.0 - exp(-CONTROL_PERIOD / self.joint_tau)
    }
}

const SIM_KEYS: &[&str] = &["joint_tau", "joint_rate_limit", "base_max_lin", "base_max_yaw"];

impl Settings for SimConfig {
    fn keys(&self) -> &'static [&'static str] {
        SIM_KEYS
    }

    fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "joint_tau" => self.joint_tau,
            "joint_rate_limit" => self.joint_rate_limit,
            "base_max_lin" => self.base_max_lin,
            "base_max_yaw" => self.base_max_yaw,
            _ => return None,
        })
    }

    fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let mut c = *self;
        match key {
            "joint_tau" => c.joint_tau = value,
            "joint_rate_limit" => c.joint_rate_limit = value,
            "base_max_lin" => c.base_max_lin = value,
            "base_max_yaw" => c.base_max_yaw = value,
            _ => return Err(unknown_key(key)),
        }
        c.validate()?;
        *self = c;
        Ok(())
    }
}

/// Robot plus scene. Only the manipulating toe touches objects.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub model: QuadrupedModel,
    pub config: SimConfig,
    pub state: RobotState,
    pub objects: Vec<SceneObject>,
    pub manipulator: Manipulator,
    tick: u64,
    prev_toe: Option<Vec3>,
}

impl World {
    pub fn new(model: QuadrupedModel, config: SimConfig, state: RobotState, objects: Vec<SceneObject>) -> Result<Self> {
        model.validate()?;
        config.validate()?;
        Ok(Self {
            model,
            config,
            state,
            objects,
            manipulator: Manipulator::FrontRight,
            tick: 0,
            prev_toe: None,
        })
    }

    /// Ticks stepped so far.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn manipulating_leg(&self) -> Leg {
        Leg::from_index(self.manipulator.leg()).expect("front leg")
    }

    /// World pose of the manipulating toe.
    pub fn toe_pose(&self) -> Pose {
        self.state.toe_pose(&self.model, self.manipulating_leg())
    }

    pub fn object(&self, id: u32) -> Result<&SceneObject> {
        self.objects.iter().find(|o| o.id == id).ok_or(Error::UnknownObject(id))
    }

    /// Advances one 20 ms tick.
    ///
    /// Joints close a fixed fraction of their error toward `q_desired`
    /// (first-order lag), capped by the rate limit and joint limits; the base
    /// integrates the saturated body-frame velocity command at fixed height.
    pub fn step(&mut self, q_desired: &JointVector, base_cmd: &BaseCommand) -> Result<&RobotState> {
        if q_desired.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("desired joint positions"));
        }
        if !(base_cmd.lin.is_finite() && base_cmd.yaw_rate.is_finite()) {
            return Err(Error::NonFinite("base velocity command"));
        }
        let dt = CONTROL_PERIOD;
        let blend = self.config.joint_blend();
        let max_dq = self.config.joint_rate_limit * dt;
        let target = self.model.clamp_limits(q_desired);
        let s = &mut self.state;
        let mut q = [0.0; NUM_JOINTS];
        for i in 0..NUM_JOINTS {
            let dq = (blend * (target[i] - s.q[i])).clamp(-max_dq, max_dq);
            q[i] = s.q[i] + dq;
        }
        let q = self.model.clamp_limits(&q);
        for i in 0..NUM_JOINTS {
            s.qd[i] = (q[i] - s.q[i]) / dt;
        }
        s.q = q;

        let mut lin = Vec3::new(base_cmd.lin.x, base_cmd.lin.y, 0.0);
        let speed = lin.norm();
        if speed > self.config.base_max_lin {
            lin = lin * (self.config.base_max_lin / speed);
        }
        let yaw_rate = base_cmd.yaw_rate.clamp(-self.config.base_max_yaw, self.config.base_max_yaw);
        let v_world = s.base.orientation.rotate(lin);
        let yaw = s.base.orientation.yaw() + yaw_rate * dt;
        let mut position = s.base.position + v_world * dt;
        position.z = self.model.nominal_base_height();
        s.base = Pose::new(position, Quat::from_yaw(yaw));
        s.base_lin_vel = v_world;
        s.base_ang_vel = Vec3::new(0.0, 0.0, yaw_rate);
        s.gravity_body = s.base.orientation.inverse().rotate(Vec3::new(0.0, 0.0, -GRAVITY));
        self.tick += 1;

        let toe = self.toe_pose().position;
        let prev = self.prev_toe.unwrap_or(toe);
        let base = self.state.base.position;
        for o in &mut self.objects {
            o.interact(prev, toe, base, dt);
            o.advance(dt);
        }
        self.prev_toe = Some(toe);
        Ok(&self.state)
    }

    /// Switches the manipulating leg; contact history restarts.
    pub fn set_manipulator(&mut self, m: Manipulator) {
        if m != self.manipulator {
            self.manipulator = m;
            self.prev_toe = None;
        }
    }

    pub fn point_cloud(&self, n: usize, seed: u64) -> Result<Vec<Vec3>> {
        sample_cloud(&self.objects, n, seed)
    }

    /// Composes a world-frame displacement onto object `id`.
    pub fn apply_perturbation(&mut self, id: u32, delta: &Pose) -> Result<()> {
        if !delta.is_finite() {
            return Err(Error::NonFinite("perturbation"));
        }
        let o = self
            .objects
            .iter_mut()
            .find(|o| o.id == id)
            .ok_or(Error::UnknownObject(id))?;
        o.perturb(delta);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{set_leg_joints, Leg};
    use crate::sim::scene::{Articulation, Part, Shape};
    use alloc::vec;

    fn world() -> World {
        let m = QuadrupedModel::default();
        let s = RobotState::standing(&m, 0.0, 0.0, 0.0);
        World::new(m, SimConfig::default(), s, Vec::new()).unwrap()
    }

    #[test]
    fn holding_current_posture_is_a_fixed_point() {
        let mut w = world();
        let before = w.state;
        let q = before.q;
        w.step(&q, &BaseCommand::ZERO).unwrap();
        assert_eq!(w.state, before);
        assert_eq!(w.tick(), 1);
    }

    #[test]
    fn step_response_is_first_order() {
        let mut w = world();
        w.config.joint_rate_limit = 1e9;
        let start = w.state.q;
        let mut target = start;
        set_leg_joints(&mut target, Leg::FrontRight, [0.1, 0.9, -1.3]);
        let beta = w.config.joint_blend();
        let tau_ticks = (w.config.joint_tau / CONTROL_PERIOD).ceil() as i32;
        for k in 1..=5 * tau_ticks {
            w.step(&target, &BaseCommand::ZERO).unwrap();
            let expect = target[4] + (start[4] - target[4]) * (1.0 - beta).powi(k);
            assert!((w.state.q[4] - expect).abs() < 1e-12);
        }
        let remaining = (w.state.q[4] - target[4]).abs() / (start[4] - target[4]).abs();
        assert!(remaining < 0.05);
    }

    #[test]
    fn rate_limit_caps_joint_speed() {
        let mut w = world();
        let mut target = w.state.q;
        target[4] += 2.0;
        w.step(&target, &BaseCommand::ZERO).unwrap();
        assert!((w.state.qd[4] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn nan_inputs_rejected() {
        let mut w = world();
        let mut q = w.state.q;
        q[0] = f64::NAN;
        assert!(w.step(&q, &BaseCommand::ZERO).is_err());
        let cmd = BaseCommand {
            lin: Vec3::new(f64::INFINITY, 0.0, 0.0),
            yaw_rate: 0.0,
        };
        assert!(w.step(&w.state.q.clone(), &cmd).is_err());
        assert_eq!(w.tick(), 0);
    }

    #[test]
    fn base_integrates_saturated_command() {
        let mut w = world();
        let cmd = BaseCommand {
            lin: Vec3::new(5.0, 0.0, 0.0),
            yaw_rate: 0.0,
        };
        let q = w.state.q;
        for _ in 0..50 {
            w.step(&q, &cmd).unwrap();
        }
        assert!((w.state.base.position.x - 1.0).abs() < 1e-12);
        let turn = BaseCommand {
            lin: Vec3::ZERO,
            yaw_rate: 0.5,
        };
        for _ in 0..50 {
            w.step(&q, &turn).unwrap();
        }
        assert!((w.state.base.orientation.yaw() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn joints_stay_within_limits() {
        let mut w = world();
        let wild = [9.0; NUM_JOINTS];
        for _ in 0..100 {
            w.step(&wild, &BaseCommand::ZERO).unwrap();
            assert!(w.model.within_limits(&w.state.q));
        }
    }

    #[test]
    fn perturbation_moves_cloud_centroid() {
        let mut w = world();
        w.objects.push(
            SceneObject::new(
                3,
                "crate",
                Pose::from_translation(Vec3::new(1.0, 0.0, 0.1)),
                vec![Part::fixed(
                    Shape::Box {
                        half: Vec3::splat(0.1),
                    },
                    Vec3::ZERO,
                )],
                Articulation::Fixed,
            )
            .unwrap(),
        );
        let centroid = |c: &[Vec3]| c.iter().fold(Vec3::ZERO, |a, p| a + *p) * (1.0 / c.len() as f64);
        let before = centroid(&w.point_cloud(768, 1).unwrap());
        w.apply_perturbation(3, &Pose::IDENTITY).unwrap();
        assert_eq!(centroid(&w.point_cloud(768, 1).unwrap()), before);
        w.apply_perturbation(3, &Pose::from_translation(Vec3::new(1.5, 0.0, 0.0))).unwrap();
        let after = centroid(&w.point_cloud(768, 1).unwrap());
        // same seed, so the samples are the same surface points shifted
        assert!((after - before - Vec3::new(1.5, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(w.apply_perturbation(9, &Pose::IDENTITY), Err(Error::UnknownObject(9)));
    }
}
