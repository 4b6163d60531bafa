//! Reference computations shared by the integration tests. Nothing here calls
//! the routine it is used to check.
#![allow(dead_code)]

use pedi_core::control::{ik_tick, ControllerConfig, OracleController};
use pedi_core::curves::TrajectoryCurve;
use pedi_core::model::{leg_joints, Leg, QuadrupedModel, RobotState};
use pedi_core::curves::CONTROL_POINTS;
use pedi_core::params::{ManipulationCommand, Manipulator};
use pedi_core::sim::{run_episode, Episode, EpisodeConfig, EpisodeHooks, SimConfig};
use pedi_core::tasks::{instantiate, success, ScriptedExpert, TaskId, TaskSettings};
use pedi_core::{Pose, Quat, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec3 {
    Vec3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi))
}

/// Points in the sampling box, weights log-uniform over [1, 2000].
pub fn random_curve(rng: &mut ChaCha8Rng) -> TrajectoryCurve {
    let points: [Vec3; CONTROL_POINTS] = core::array::from_fn(|_| {
        Vec3::new(
            rng.random_range(-2.0..=2.0),
            rng.random_range(-2.0..=2.0),
            rng.random_range(0.01..=1.2),
        )
    });
    let weights: [f64; CONTROL_POINTS] = core::array::from_fn(|_| 2000f64.powf(rng.random_range(0.0..=1.0)));
    TrajectoryCurve::new(points, weights).unwrap()
}

/// Rational curve point by repeated linear interpolation of the homogeneous
/// control points `(w p, w)`.
pub fn de_casteljau(points: &[Vec3], weights: &[f64], t: f64) -> Vec3 {
    let mut h: Vec<[f64; 4]> = points
        .iter()
        .zip(weights)
        .map(|(p, &w)| [w * p.x, w * p.y, w * p.z, w])
        .collect();
    while h.len() > 1 {
        h = h
            .windows(2)
            .map(|pair| core::array::from_fn(|c| (1.0 - t) * pair[0][c] + t * pair[1][c]))
            .collect();
    }
    let [x, y, z, w] = h[0];
    Vec3::new(x / w, y / w, z / w)
}

pub fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
    loop {
        let v: [f64; 4] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return Quat::new(v[0] / n, v[1] / n, v[2] / n, v[3] / n).unwrap();
        }
    }
}

pub fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    Pose::new(random_vec(rng, -5.0, 5.0), random_quat(rng))
}

/// Rotation angle between two unit quaternions, identifying q and -q.
pub fn rotation_angle(a: Quat, b: Quat) -> f64 {
    let d = (a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z).abs().min(1.0);
    2.0 * d.acos()
}

/// Rotates `v` by the matrix form of a unit quaternion.
pub fn rotate(q: Quat, v: Vec3) -> Vec3 {
    let Quat { w, x, y, z } = q;
    let r = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ];
    Vec3::new(
        r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
        r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
        r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
    )
}

pub fn leg_limits(m: &QuadrupedModel, leg: Leg) -> [(f64, f64); 3] {
    core::array::from_fn(|i| m.limits[leg.joint_offset() + i])
}

pub fn random_leg_q(rng: &mut ChaCha8Rng, m: &QuadrupedModel, leg: Leg) -> [f64; 3] {
    leg_limits(m, leg).map(|(lo, hi)| rng.random_range(lo..hi))
}

/// Central-difference Jacobian of the body-frame toe position; column `j` is
/// the derivative with respect to joint `j`.
pub fn fd_jacobian(m: &QuadrupedModel, leg: Leg, q: [f64; 3], h: f64) -> [Vec3; 3] {
    core::array::from_fn(|j| {
        let (mut a, mut b) = (q, q);
        a[j] += h;
        b[j] -= h;
        (m.toe_in_body(leg, a) - m.toe_in_body(leg, b)) * (0.5 / h)
    })
}

/// Runs the IK stage alone for `ticks` ticks on a standing robot, applying each
/// solution directly as the new joint state. Returns the body-frame toe.
pub fn settle_ik(m: &QuadrupedModel, leg: Leg, target: Vec3, ticks: usize) -> (Vec3, f64) {
    let cfg = ControllerConfig::default();
    let mut s = RobotState::standing(m, 0.0, 0.0, 0.0);
    let flag = if leg == Leg::FrontLeft {
        Manipulator::FrontLeft
    } else {
        Manipulator::FrontRight
    };
    let cmd = ManipulationCommand::stationary(flag, target, Quat::IDENTITY);
    for _ in 0..ticks {
        let sol = ik_tick(m, &s, &cmd, &cfg);
        s.q = sol.q_desired;
        s.prev_action = sol.q_desired;
    }
    let q = leg_joints(&s.q, leg);
    let dir = m.toe_direction_in_body(leg, q);
    (m.toe_in_body(leg, q), dir.z.clamp(-1.0, 1.0).acos())
}

/// Distance from `target` to the nearest toe position the leg can reach within
/// its joint limits: a dense grid over joint space, refined by coordinate
/// descent.
pub fn distance_to_workspace(m: &QuadrupedModel, leg: Leg, target: Vec3) -> f64 {
    let lim = leg_limits(m, leg);
    let n = 40;
    let at = |i: usize, k: usize| lim[k].0 + (lim[k].1 - lim[k].0) * i as f64 / n as f64;
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let q = [at(i, 0), at(j, 1), at(k, 2)];
                let d = m.toe_in_body(leg, q).distance(target);
                if d < best.0 {
                    best = (d, q);
                }
            }
        }
    }
    let mut step = 0.05;
    while step > 1e-10 {
        let mut improved = false;
        for a in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut q = best.1;
                q[a] = (q[a] + sign * step).clamp(lim[a].0, lim[a].1);
                let d = m.toe_in_body(leg, q).distance(target);
                if d < best.0 {
                    best = (d, q);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best.0
}

/// A target strictly outside the leg's reach.
pub fn unreachable_target(rng: &mut ChaCha8Rng, m: &QuadrupedModel, leg: Leg) -> Vec3 {
    let dir = loop {
        let v = random_vec(rng, -1.0, 1.0);
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            break v.normalize();
        }
    };
    m.mounts[leg.index()].position + dir * rng.random_range(0.6..1.5)
}

/// The tracking reward as tabulated: weighted exponentials of the squared
/// position errors and the direction misalignment, plus weighted squared
/// accelerations.
pub fn reward_reference(xy_sq: f64, z_sq: f64, misalignment: f64, ee_acc_sq: f64, base_acc_sq: f64) -> f64 {
    let (sigma_xy, sigma_z, sigma_theta) = (0.25, 0.05, 0.25);
    0.8 * (-xy_sq / sigma_xy).exp() + 0.8 * (-z_sq / sigma_z).exp() + 0.3 * (-misalignment / sigma_theta).exp()
        - 5.0 * ee_acc_sq
        - 5.0 * base_acc_sq
}

pub struct ExpertRun {
    pub episode: Episode,
    pub success: bool,
}

pub fn expert_run(task: TaskId, seed: u64, hooks: &mut dyn EpisodeHooks) -> ExpertRun {
    let m = QuadrupedModel::default();
    let world = instantiate(task, seed, &m, SimConfig::default()).unwrap();
    let controller = OracleController::new(m, ControllerConfig::default()).unwrap();
    let mut planner = ScriptedExpert::for_task(task, TaskSettings::default()).unwrap();
    let episode = run_episode(world, controller, &mut planner, EpisodeConfig::default(), seed, hooks).unwrap();
    let success = success(task, &episode, &TaskSettings::default()).unwrap_or(false);
    ExpertRun { episode, success }
}
