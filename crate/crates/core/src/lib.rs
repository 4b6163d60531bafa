//! Trajectory parameterization and kinematic loco-manipulation simulation for a
//! 12-DoF quadruped that manipulates objects with one of its front feet.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. Layering, bottom up:
//!
//! * [`math`], [`geometry`]: vectors, 3x3 matrices, unit quaternions and rigid poses.
//! * [`curves`]: weighted (rational) Bezier position curves, SLERP orientation
//!   tracks and the phase clock.
//! * [`params`]: the trajectory-parameter record exchanged between planner and
//!   controller, frame re-expression, randomization and per-tick commands.
//! * [`model`]: quadruped leg kinematics (forward kinematics, Jacobians, limits).
//! * [`control`]: the damped least-squares tracking controller, action filter,
//!   PD law, base pursuit and the tracking reward.
//! * [`sim`]: the deterministic 50 Hz kinematic world, point-cloud synthesis and
//!   the episode runner.
//! * [`tasks`]: the nine manipulation tasks, their expert templates and success
//!   predicates.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
pub mod curves;
pub mod error;
pub mod geometry;
pub mod math;
pub mod model;
pub mod params;
pub mod settings;
pub mod sim;
pub mod tasks;

pub use error::{Error, Result};
pub use geometry::{Pose, Quat};
pub use math::{Mat3, Vec3};
