//! Scene objects: primitive geometry, articulation state and the toe contact
//! rules that drive it.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{atan2, cos, exp, sin, sqrt, wrap_angle};
use crate::{Error, Pose, Quat, Result, Vec3};

/// Primitive surface, expressed in its part frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box { half: Vec3 },
    /// Axis along local z, centered at the origin.
    Cylinder { radius: f64, half_height: f64 },
    /// Dome above the local z = 0 plane; the flat disk is not part of the surface.
    Hemisphere { radius: f64 },
    Sphere { radius: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Box { half } => half.x > 0.0 && half.y > 0.0 && half.z > 0.0,
            Shape::Cylinder {
                radius,
                half_height,
            } => radius > 0.0 && half_height > 0.0,
            Shape::Hemisphere { radius } | Shape::Sphere { radius } => radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(String::from("primitive dimensions must be positive")))
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Box { half: h } => 8.0 * (h.x * h.y + h.y * h.z + h.x * h.z),
            Shape::Cylinder {
                radius: r,
                half_height: h,
            } => 2.0 * PI * r * (2.0 * h) + 2.0 * PI * r * r,
            Shape::Hemisphere { radius: r } => 2.0 * PI * r * r,
            Shape::Sphere { radius: r } => 4.0 * PI * r * r,
        }
    }

    /// Uniform point on the surface.
    pub fn sample_surface<R: Rng>(&self, rng: &mut R) -> Vec3 {
        match *self {
            Shape::Box { half: h } => {
                let faces = [h.y * h.z, h.x * h.z, h.x * h.y];
                let total = faces[0] + faces[1] + faces[2];
                let mut pick = rng.random::<f64>() * total;
                let mut axis = 2;
                for (i, a) in faces.iter().enumerate() {
                    if pick < *a {
                        axis = i;
                        break;
                    }
                    pick -= a;
                }
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let u = 2.0 * rng.random::<f64>() - 1.0;
                let v = 2.0 * rng.random::<f64>() - 1.0;
                match axis {
                    0 => Vec3::new(sign * h.x, u * h.y, v * h.z),
                    1 => Vec3::new(u * h.x, sign * h.y, v * h.z),
                    _ => Vec3::new(u * h.x, v * h.y, sign * h.z),
                }
            }
            Shape::Cylinder {
                radius: r,
                half_height: h,
            } => {
                let side = 2.0 * r * 2.0 * h;
                let caps = 2.0 * r * r;
                let phi = 2.0 * PI * rng.random::<f64>();
                if rng.random::<f64>() * (side + caps) < side {
                    let z = (2.0 * rng.random::<f64>() - 1.0) * h;
                    Vec3::new(r * cos(phi), r * sin(phi), z)
                } else {
                    let rho = r * sqrt(rng.random::<f64>());
                    let z = if rng.random_bool(0.5) { h } else { -h };
                    Vec3::new(rho * cos(phi), rho * sin(phi), z)
                }
            }
            Shape::Hemisphere { radius: r } => {
                let z = rng.random::<f64>();
                sphere_point(r, z, 2.0 * PI * rng.random::<f64>())
            }
            Shape::Sphere { radius: r } => {
                let z = 2.0 * rng.random::<f64>() - 1.0;
                sphere_point(r, z, 2.0 * PI * rng.random::<f64>())
            }
        }
    }

    /// Distance from `p` (part frame) to the surface.
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        match *self {
            Shape::Box { half: h } => {
                let d = Vec3::new(p.x.abs() - h.x, p.y.abs() - h.y, p.z.abs() - h.z);
                let outside = d.component_max(Vec3::ZERO).norm();
                let inside = d.x.max(d.y).max(d.z).min(0.0);
                outside + inside.abs()
            }
            Shape::Cylinder {
                radius: r,
                half_height: h,
            } => {
                let rho = sqrt(p.x * p.x + p.y * p.y);
                let dr = rho - r;
                let dz = p.z.abs() - h;
                if dr <= 0.0 && dz <= 0.0 {
                    dr.max(dz).abs()
                } else {
                    sqrt(sq(dr.max(0.0)) + sq(dz.max(0.0)))
                }
            }
            Shape::Hemisphere { radius: r } => {
                if p.z >= 0.0 {
                    (p.norm() - r).abs()
                } else {
                    let rho = sqrt(p.x * p.x + p.y * p.y);
                    sqrt(sq(rho - r) + p.z * p.z)
                }
            }
            Shape::Sphere { radius: r } => (p.norm() - r).abs(),
        }
    }
}

fn sq(v: f64) -> f64 {
    v * v
}

fn sphere_point(r: f64, z: f64, phi: f64) -> Vec3 {
    let rho = sqrt((1.0 - z * z).max(0.0));
    Vec3::new(r * rho * cos(phi), r * rho * sin(phi), r * z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part {
    pub shape: Shape,
    /// Pose of the part in the object frame (before articulation motion).
    pub offset: Pose,
    /// Whether the part follows the articulation (door panel, lever, item).
    pub moving: bool,
}

impl Part {
    pub fn fixed(shape: Shape, center: Vec3) -> Self {
        Self {
            shape,
            offset: Pose::from_translation(center),
            moving: false,
        }
    }

    pub fn moving(shape: Shape, offset: Pose) -> Self {
        Self {
            shape,
            offset,
            moving: true,
        }
    }
}

/// Closed range on one contact coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// How a hinge responds to the toe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HingeDrive {
    /// A panel or lever edge: the toe pushes it from behind and the angle
    /// follows the toe's angular position.
    Edge,
    /// A wheel rim: angular motion of the toe while touching the rim is
    /// transferred with the hinge gain.
    Rim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hinge {
    /// Point on the axis, object frame.
    pub pivot: Vec3,
    /// Unit axis, object frame.
    pub axis: Vec3,
    /// Unit direction of the moving part at zero angle, orthogonal to `axis`.
    pub reference: Vec3,
    pub angle: f64,
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    /// +1 if pushing increases the angle, -1 if it decreases it.
    pub push_sign: f64,
    /// Distance from the axis at which contact happens.
    pub radial: Band,
    /// Coordinate along the axis (relative to `pivot`) at which contact happens.
    pub axial: Band,
    pub drive: HingeDrive,
    pub gain: f64,
}

impl Hinge {
    /// Toe coordinates in the hinge frame: (angular position, radial, axial).
    pub fn coordinates(&self, local: Vec3) -> (f64, f64, f64) {
        let v = local - self.pivot;
        let axial = v.dot(self.axis);
        let perp = v - self.axis * axial;
        let side = self.axis.cross(self.reference);
        (atan2(side.dot(perp), self.reference.dot(perp)), perp.norm(), axial)
    }

    fn in_band(&self, radial: f64, axial: f64) -> bool {
        self.radial.contains(radial) && self.axial.contains(axial)
    }

    fn update(&mut self, prev: Vec3, now: Vec3) {
        let (b_prev, r_prev, a_prev) = self.coordinates(prev);
        let (b_now, r_now, a_now) = self.coordinates(now);
        if !self.in_band(r_now, a_now) {
            return;
        }
        let s = self.push_sign;
        let next = match self.drive {
            HingeDrive::Edge => {
                let behind = s * b_prev <= s * self.angle + CONTACT_SLACK;
                if behind && s * b_now > s * self.angle {
                    self.angle + self.gain * (b_now - self.angle)
                } else {
                    return;
                }
            }
            HingeDrive::Rim => {
                if !self.in_band(r_prev, a_prev) {
                    return;
                }
                let delta = wrap_angle(b_now - b_prev);
                if s * delta <= 0.0 {
                    return;
                }
                self.angle + self.gain * delta
            }
        };
        self.angle = next.clamp(self.min, self.max);
    }

    fn transform(&self) -> Pose {
        let r = Quat::from_axis_angle(self.axis, self.angle);
        Pose::new(self.pivot - r.rotate(self.pivot), r)
    }
}

/// Straight-line slide along the object x axis, driven from the face
/// opposite to the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slide {
    /// +1 slides toward object +x, -1 toward -x.
    pub sign: f64,
    pub offset: f64,
    /// Largest travel magnitude, m.
    pub limit: f64,
    /// Object-frame x of the driven face at zero offset.
    pub face_x: f64,
    pub y_band: Band,
    pub z_band: Band,
}

impl Slide {
    fn update(&mut self, prev: Vec3, now: Vec3) {
        if !(self.y_band.contains(now.y) && self.z_band.contains(now.z)) {
            return;
        }
        let s = self.sign;
        let face = self.face_x + self.offset;
        if s * prev.x <= s * face + CONTACT_SLACK && s * now.x > s * face {
            self.offset = (self.offset + (now.x - face)).clamp(-self.limit, self.limit);
        }
    }
}

/// A free ball kicked by the toe; rolls with exponential speed decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub radius: f64,
    /// World frame, m/s.
    pub velocity: Vec3,
    /// Rolling speed decay time constant, s.
    pub decay: f64,
    pub kick_gain: f64,
    pub kicked: bool,
}

/// An object the toe can hook by its grip point and carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Carry {
    /// Grip point, object frame.
    pub grip: Vec3,
    pub hook_radius: f64,
    pub held: bool,
    /// Base position when the object was hooked.
    pub pickup_base: Option<Vec3>,
    /// Largest horizontal base displacement from `pickup_base` while held.
    pub carried: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Articulation {
    Fixed,
    Button {
        /// Dome center, object frame.
        center: Vec3,
        radius: f64,
        /// Press depth below the dome top that latches the button.
        travel: f64,
        pressed: bool,
    },
    Hinge(Hinge),
    Slide(Slide),
    Ball(Ball),
    Carry(Carry),
}

/// Slack on the "toe was behind the driven face" test, in the contact
/// coordinate's unit.
const CONTACT_SLACK: f64 = 0.005;

/// Horizontal hook margin beyond the ball radius for a kick.
const KICK_MARGIN: f64 = 0.03;

impl Articulation {
    /// Scalar the success predicates look at: hinge angle, slide offset,
    /// 1/0 for the button and carry latches, ball speed.
    pub fn value(&self) -> f64 {
        match self {
            Articulation::Fixed => 0.0,
            Articulation::Button { pressed, .. } => *pressed as u8 as f64,
            Articulation::Hinge(h) => h.angle,
            Articulation::Slide(s) => s.offset,
            Articulation::Ball(b) => b.velocity.norm(),
            Articulation::Carry(c) => c.held as u8 as f64,
        }
    }

    /// The toe has changed the articulation's state.
    pub fn engaged(&self) -> bool {
        match self {
            Articulation::Fixed => false,
            Articulation::Button { pressed, .. } => *pressed,
            Articulation::Hinge(h) => (h.angle - h.initial).abs() > 0.02,
            Articulation::Slide(s) => s.offset.abs() > 0.01,
            Articulation::Ball(b) => b.kicked,
            Articulation::Carry(c) => c.held,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: u32,
    pub name: String,
    /// Object frame in world.
    pub pose: Pose,
    pub parts: Vec<Part>,
    pub articulation: Articulation,
}

impl SceneObject {
    pub fn new(id: u32, name: &str, pose: Pose, parts: Vec<Part>, articulation: Articulation) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config(String::from("scene object needs at least one part")));
        }
        for p in &parts {
            p.shape.validate()?;
        }
        if !pose.is_finite() {
            return Err(Error::NonFinite("object pose"));
        }
        Ok(Self {
            id,
            name: String::from(name),
            pose,
            parts,
            articulation,
        })
    }

    /// Local motion of the moving parts.
    pub fn articulation_transform(&self) -> Pose {
        match &self.articulation {
            Articulation::Hinge(h) => h.transform(),
            Articulation::Slide(s) => Pose::from_translation(Vec3::new(s.offset, 0.0, 0.0)),
            _ => Pose::IDENTITY,
        }
    }

    /// World pose of part `i`.
    pub fn part_pose(&self, i: usize) -> Pose {
        let part = &self.parts[i];
        if part.moving {
            self.pose
                .compose(&self.articulation_transform())
                .compose(&part.offset)
        } else {
            self.pose.compose(&part.offset)
        }
    }

    /// Distance from a world point to the nearest part surface.
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        (0..self.parts.len())
            .map(|i| {
                let local = self.part_pose(i).inverse_transform_point(p);
                self.parts[i].shape.surface_distance(local)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn area(&self) -> f64 {
        self.parts.iter().map(|p| p.shape.area()).sum()
    }

    /// Applies toe motion from `prev` to `now` (world), one tick of `dt`.
    pub(crate) fn interact(&mut self, prev: Vec3, now: Vec3, base: Vec3, dt: f64) {
        let inv = self.pose.inverse();
        let (lp, ln) = (inv.transform_point(prev), inv.transform_point(now));
        match &mut self.articulation {
            Articulation::Fixed => {}
            Articulation::Button {
                center,
                radius,
                travel,
                pressed,
            } => {
                let d = ln - *center;
                let horizontal = sqrt(d.x * d.x + d.y * d.y);
                if horizontal < *radius && d.z < *radius - *travel {
                    *pressed = true;
                }
            }
            Articulation::Hinge(h) => h.update(lp, ln),
            Articulation::Slide(s) => s.update(lp, ln),
            Articulation::Ball(b) => {
                let c = self.pose.position;
                let to_center = c - now;
                if !b.kicked && to_center.norm() < b.radius + KICK_MARGIN {
                    let v = (now - prev) * (1.0 / dt);
                    let v = Vec3::new(v.x, v.y, 0.0);
                    if v.dot(to_center) > 0.0 {
                        b.velocity = v * b.kick_gain;
                        b.kicked = true;
                    }
                }
            }
            Articulation::Carry(c) => {
                let grip = self.pose.transform_point(c.grip);
                if !c.held && grip.distance(now) < c.hook_radius {
                    c.held = true;
                    c.pickup_base = Some(base);
                }
                if c.held {
                    self.pose.position = now - self.pose.orientation.rotate(c.grip);
                    if let Some(start) = c.pickup_base {
                        let d = base - start;
                        c.carried = c.carried.max(sqrt(d.x * d.x + d.y * d.y));
                    }
                }
            }
        }
    }

    /// Passive dynamics, independent of the toe.
    pub(crate) fn advance(&mut self, dt: f64) {
        if let Articulation::Ball(b) = &mut self.articulation {
            self.pose.position += b.velocity * dt;
            b.velocity = b.velocity * exp(-dt / b.decay);
        }
    }

    /// Composes a world-frame displacement onto the object pose. A carried
    /// object is knocked out of the grip.
    pub fn perturb(&mut self, delta: &Pose) {
        self.pose = delta.compose(&self.pose);
        if let Articulation::Carry(c) = &mut self.articulation {
            c.held = false;
            c.pickup_base = None;
            c.carried = 0.0;
        }
    }
}

/// Area-weighted uniform surface samples over every part of every object.
pub fn sample_cloud(objects: &[SceneObject], n: usize, seed: u64) -> Result<Vec<Vec3>> {
    let parts: Vec<(Pose, Shape)> = objects
        .iter()
        .flat_map(|o| (0..o.parts.len()).map(move |i| (o.part_pose(i), o.parts[i].shape)))
        .collect();
    if parts.is_empty() {
        return Err(Error::EmptyScene);
    }
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    let mut cumulative = Vec::with_capacity(parts.len());
    let mut total = 0.0;
    for (_, s) in &parts {
        total += s.area();
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|c| *c <= u).min(parts.len() - 1);
        let (pose, shape) = &parts[idx];
        out.push(pose.transform_point(shape.sample_surface(&mut rng)));
    }
    Ok(out)
}
