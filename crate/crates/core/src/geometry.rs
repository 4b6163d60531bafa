//! Unit quaternions and rigid poses.
//!
//! Quaternions are stored scalar-first `(w, x, y, z)`. Every product is
//! renormalized so long 50 Hz integrations do not drift off the unit sphere.

use core::ops::Mul;

use crate::math::{cos, sin, sqrt, Mat3, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a unit quaternion from raw components, normalizing them.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Quat> {
        Quat { w, x, y, z }.try_normalized()
    }

    pub(crate) const fn raw(w: f64, x: f64, y: f64, z: f64) -> Quat {
        Quat { w, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Result<Quat> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Quat {
        let a = axis.normalize();
        let (s, c) = (sin(0.5 * angle), cos(0.5 * angle));
        Quat::raw(c, a.x * s, a.y * s, a.z * s).normalized()
    }

    pub fn from_yaw(yaw: f64) -> Quat {
        Self::from_axis_angle(Vec3::Z, yaw)
    }

    /// Intrinsic z-y-x rotation: yaw `psi` about z, then pitch `theta` about the
    /// new y, then roll `phi` about the new x.
    pub fn from_euler_zyx(psi: f64, theta: f64, phi: f64) -> Quat {
        Self::from_yaw(psi)
            * Self::from_axis_angle(Vec3::Y, theta)
            * Self::from_axis_angle(Vec3::X, phi)
    }

    /// Minimal rotation taking unit `from` onto unit `to`.
    pub fn from_two_vectors(from: Vec3, to: Vec3) -> Quat {
        let a = from.normalize();
        let b = to.normalize();
        let d = a.dot(b);
        if d < -1.0 + 1e-12 {
            // antiparallel: rotate pi about any axis orthogonal to `a`
            let mut axis = Vec3::X.cross(a);
            if axis.norm() < 1e-6 {
                axis = Vec3::Y.cross(a);
            }
            return Quat::from_axis_angle(axis, core::f64::consts::PI);
        }
        let c = a.cross(b);
        Quat::raw(1.0 + d, c.x, c.y, c.z).normalized()
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn try_normalized(self) -> Result<Quat> {
        let n = self.norm();
        if !(n.is_finite() && n > 1e-12) {
            return Err(Error::InvalidQuaternion);
        }
        let s = 1.0 / n;
        Ok(Quat::raw(self.w * s, self.x * s, self.y * s, self.z * s))
    }

    /// Normalized copy; panics only on a zero quaternion, which no constructor produces.
    pub fn normalized(self) -> Quat {
        self.try_normalized()
            .expect("quaternion product collapsed to zero")
    }

    pub fn conjugate(self) -> Quat {
        Quat::raw(self.w, -self.x, -self.y, -self.z)
    }

    pub fn inverse(self) -> Quat {
        self.conjugate()
    }

    pub fn neg(self) -> Quat {
        Quat::raw(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn to_mat3(self) -> Mat3 {
        Mat3::from_cols(
            self.rotate(Vec3::X),
            self.rotate(Vec3::Y),
            self.rotate(Vec3::Z),
        )
    }

    /// Heading angle of the rotated x-axis in the horizontal plane.
    pub fn yaw(self) -> f64 {
        let f = self.rotate(Vec3::X);
        crate::math::atan2(f.y, f.x)
    }

    /// Geodesic angle in `[0, pi]` between two rotations, accounting for `q ~ -q`.
    pub fn angle_between(self, o: Quat) -> f64 {
        // atan2 of the relative rotation stays accurate near zero, where acos(|dot|) does not
        let a = self.conjugate();
        let w = a.w * o.w - a.x * o.x - a.y * o.y - a.z * o.z;
        let v = Vec3::new(
            a.w * o.x + a.x * o.w + a.y * o.z - a.z * o.y,
            a.w * o.y - a.x * o.z + a.y * o.w + a.z * o.x,
            a.w * o.z + a.x * o.y - a.y * o.x + a.z * o.w,
        );
        2.0 * crate::math::atan2(v.norm(), w.abs())
    }

    /// Componentwise comparison up to the double cover.
    pub fn approx_eq(self, o: Quat, tol: f64) -> bool {
        let same = (self.w - o.w).abs() <= tol
            && (self.x - o.x).abs() <= tol
            && (self.y - o.y).abs() <= tol
            && (self.z - o.z).abs() <= tol;
        let flipped = (self.w + o.w).abs() <= tol
            && (self.x + o.x).abs() <= tol
            && (self.y + o.y).abs() <= tol
            && (self.z + o.z).abs() <= tol;
        same || flipped
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::raw(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
        .normalized()
    }
}

/// Geodesic angle between two orientations.
pub fn quat_angle_between(a: Quat, b: Quat) -> f64 {
    a.angle_between(b)
}

/// Rigid transform: maps points of a child frame into its parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vec3::ZERO,
        orientation: Quat::IDENTITY,
    };

    pub fn new(position: Vec3, orientation: Quat) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(t, Quat::IDENTITY)
    }

    pub fn from_xy_yaw(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self::new(Vec3::new(x, y, z), Quat::from_yaw(yaw))
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.position + self.orientation.rotate(other.position),
            orientation: self.orientation * other.orientation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: -inv.rotate(self.position),
            orientation: inv,
        }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.orientation.rotate(p) + self.position
    }

    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.orientation.rotate(v)
    }

    pub fn inverse_transform_point(&self, p: Vec3) -> Vec3 {
        self.orientation.inverse().rotate(p - self.position)
    }

    pub fn approx_eq(&self, o: &Pose, tol: f64) -> bool {
        (self.position - o.position).max_abs() <= tol
            && self.orientation.approx_eq(o.orientation, tol)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.orientation.to_array().iter().all(|v| v.is_finite())
    }
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn invert(p: &Pose) -> Pose {
    p.inverse()
}

pub fn transform_point(pose: &Pose, p: Vec3) -> Vec3 {
    pose.transform_point(p)
}
