//! Position and orientation curves driven by a shared phase in `[0, 1]`.
//!
//! Positions follow a rational Bezier curve
//!
//! ```text
//!          sum_i C(n,i) t^i (1-t)^(n-i) w_i p_i
//! x(t) = ----------------------------------------
//!            sum_i C(n,i) t^i (1-t)^(n-i) w_i
//! ```
//!
//! and orientations a SLERP between a start and an end quaternion. Both are
//! pure functions of the phase; clamping wall time into a phase happens in
//! [`PhaseClock::phase`], never inside the evaluators.

use alloc::vec::Vec;

use crate::geometry::Quat;
use crate::math::{atan2, binomial, sin, sqrt, Vec3};
use crate::{Error, Result};

/// Number of control points of the trajectory curve (order 6).
pub const CONTROL_POINTS: usize = 7;

/// Rational Bezier curve with `K` weighted control points (order `K - 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalBezier<const K: usize> {
    points: [Vec3; K],
    weights: [f64; K],
}

/// The order-6 curve carried by trajectory parameters.
pub type TrajectoryCurve = RationalBezier<CONTROL_POINTS>;

impl<const K: usize> RationalBezier<K> {
    pub fn new(points: [Vec3; K], weights: [f64; K]) -> Result<Self> {
        if K < 2 {
            return Err(Error::InvalidCurve("need at least two control points"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidCurve("weights must be finite and strictly positive"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidCurve("control points must be finite"));
        }
        Ok(Self { points, weights })
    }

    /// Equal unit weights: an ordinary Bezier curve.
    pub fn polynomial(points: [Vec3; K]) -> Result<Self> {
        Self::new(points, [1.0; K])
    }

    pub fn points(&self) -> &[Vec3; K] {
        &self.points
    }

    pub fn weights(&self) -> &[f64; K] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        K - 1
    }

    pub fn start(&self) -> Vec3 {
        self.points[0]
    }

    pub fn end(&self) -> Vec3 {
        self.points[K - 1]
    }

    /// Same curve with every weight multiplied by `c > 0`.
    pub fn with_scaled_weights(&self, c: f64) -> Result<Self> {
        let mut w = self.weights;
        w.iter_mut().for_each(|v| *v *= c);
        Self::new(self.points, w)
    }

    pub fn map_points(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        let mut points = self.points;
        points.iter_mut().for_each(|p| *p = f(*p));
        Self {
            points,
            weights: self.weights,
        }
    }

    /// Replaces control point `i`. Out-of-range indices and non-finite
    /// points are rejected and leave the curve unchanged.
    pub fn set_point(&mut self, i: usize, p: Vec3) -> Result<()> {
        if i >= K {
            return Err(Error::InvalidCurve("control point index out of range"));
        }
        if !p.is_finite() {
            return Err(Error::InvalidCurve("control points must be finite"));
        }
        self.points[i] = p;
        Ok(())
    }

    /// Replaces weight `i`; weights must be finite and positive.
    pub fn set_weight(&mut self, i: usize, w: f64) -> Result<()> {
        if i >= K {
            return Err(Error::InvalidCurve("weight index out of range"));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidCurve("weights must be finite and positive"));
        }
        self.weights[i] = w;
        Ok(())
    }

    /// Axis-aligned bounds of the control polygon.
    pub fn control_bounds(&self) -> (Vec3, Vec3) {
        self.points.iter().fold(
            (Vec3::splat(f64::INFINITY), Vec3::splat(f64::NEG_INFINITY)),
            |(lo, hi), p| (lo.component_min(*p), hi.component_max(*p)),
        )
    }

    /// Evaluates the curve with the Bernstein-sum form.
    pub fn eval(&self, t: f64) -> Result<Vec3> {
        check_phase(t)?;
        let n = K - 1;
        let s = 1.0 - t;
        let mut num = Vec3::ZERO;
        let mut den = 0.0;
        for i in 0..K {
            let b = binomial(n, i) * powi(t, i) * powi(s, n - i) * self.weights[i];
            num += self.points[i] * b;
            den += b;
        }
        Ok(num * (1.0 / den))
    }

    /// Evaluates the curve by de Casteljau recursion on homogeneous points
    /// `(w p, w)`, projecting at the end. Shares no code with [`Self::eval`].
    pub fn eval_oracle(&self, t: f64) -> Result<Vec3> {
        check_phase(t)?;
        let mut h: [[f64; 4]; K] = [[0.0; 4]; K];
        for (dst, (p, w)) in h.iter_mut().zip(self.points.iter().zip(self.weights.iter())) {
            *dst = [p.x * w, p.y * w, p.z * w, *w];
        }
        for level in 1..K {
            for i in 0..K - level {
                for c in 0..4 {
                    h[i][c] = (1.0 - t) * h[i][c] + t * h[i + 1][c];
                }
            }
        }
        let [x, y, z, w] = h[0];
        Ok(Vec3::new(x / w, y / w, z / w))
    }
}

fn powi(x: f64, k: usize) -> f64 {
    let mut r = 1.0;
    for _ in 0..k {
        r *= x;
    }
    r
}

fn check_phase(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::PhaseOutOfRange(t))
    }
}

pub fn bezier_eval<const K: usize>(curve: &RationalBezier<K>, t: f64) -> Result<Vec3> {
    curve.eval(t)
}

pub fn bezier_eval_oracle<const K: usize>(curve: &RationalBezier<K>, t: f64) -> Result<Vec3> {
    curve.eval_oracle(t)
}

/// Start and end orientation of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationTrack {
    pub start: Quat,
    pub end: Quat,
}

/// Below this subtended angle SLERP falls back to normalized lerp.
const SLERP_EPS: f64 = 1e-6;

impl OrientationTrack {
    pub fn new(start: Quat, end: Quat) -> Result<Self> {
        Ok(Self {
            start: start.try_normalized()?,
            end: end.try_normalized()?,
        })
    }

    pub fn constant(q: Quat) -> Self {
        Self { start: q, end: q }
    }

    /// Spherical linear interpolation along the shorter arc.
    pub fn slerp(&self, t: f64) -> Result<Quat> {
        check_phase(t)?;
        let q0 = self.start.to_array();
        let mut q1 = self.end.to_array();
        let mut d: f64 = q0.iter().zip(q1.iter()).map(|(a, b)| a * b).sum();
        if d < 0.0 {
            q1.iter_mut().for_each(|v| *v = -*v);
            d = -d;
        }
        // sin(theta) from the component of q1 orthogonal to q0
        let sin_theta = sqrt(q0
            .iter()
            .zip(q1.iter())
            .map(|(a, b)| {
                let o = b - d * a;
                o * o
            })
            .sum::<f64>());
        let theta = atan2(sin_theta, d);
        let (a, b) = if theta < SLERP_EPS {
            (1.0 - t, t)
        } else {
            (sin((1.0 - t) * theta) / sin_theta, sin(t * theta) / sin_theta)
        };
        let mut r = [0.0; 4];
        for c in 0..4 {
            r[c] = a * q0[c] + b * q1[c];
        }
        Quat::from_array(r)
    }
}

pub fn slerp(track: &OrientationTrack, t: f64) -> Result<Quat> {
    track.slerp(t)
}

/// Maps wall time onto the phase of a trajectory that started at `t_start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseClock {
    t_start: f64,
    duration: f64,
}

impl PhaseClock {
    pub fn new(t_start: f64, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidDuration(duration));
        }
        if !t_start.is_finite() {
            return Err(Error::NonFinite("clock start"));
        }
        Ok(Self { t_start, duration })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// `clamp((t_now - t_start) / duration, 0, 1)`.
    pub fn phase(&self, t_now: f64) -> f64 {
        ((t_now - self.t_start) / self.duration).clamp(0.0, 1.0)
    }

    pub fn finished(&self, t_now: f64) -> bool {
        t_now >= self.t_start + self.duration
    }
}

pub fn phase(clock: &PhaseClock, t_now: f64) -> f64 {
    clock.phase(t_now)
}

/// Curve positions `dt, 2 dt, .., k dt` ahead of `t_now`, holding at the end.
pub fn lookahead_points<const K: usize>(
    curve: &RationalBezier<K>,
    clock: &PhaseClock,
    t_now: f64,
    dt: f64,
    k: usize,
) -> Result<Vec<Vec3>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidDuration(dt));
    }
    (1..=k)
        .map(|j| curve.eval(clock.phase(t_now + j as f64 * dt)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::quat_angle_between;
    use core::f64::consts::FRAC_PI_2;

    fn linear_curve() -> TrajectoryCurve {
        let mut p = [Vec3::ZERO; 7];
        for (i, v) in p.iter_mut().enumerate() {
            *v = Vec3::new(i as f64, 0.0, 0.0);
        }
        RationalBezier::polynomial(p).unwrap()
    }

    fn cube_curve() -> TrajectoryCurve {
        let corners = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
        ];
        RationalBezier::new(corners, [1.0, 2000.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn endpoints() {
        let c = cube_curve();
        assert!((c.eval(0.0).unwrap() - c.start()).max_abs() <= 1e-12);
        assert!((c.eval(1.0).unwrap() - c.end()).max_abs() <= 1e-12);
        assert!((c.eval_oracle(0.0).unwrap() - c.start()).max_abs() <= 1e-12);
    }

    #[test]
    fn linear_reproduction() {
        let c = linear_curve();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let v = c.eval(t).unwrap();
            assert!((v - Vec3::new(6.0 * t, 0.0, 0.0)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn heavy_weight_cube_matches_frozen_oracle_value() {
        // Frozen from the homogeneous de Casteljau recursion (see eval_oracle):
        // numerator sums 0.75^6 .. 0.25^6 Bernstein terms with w1 = 2000.
        let c = cube_curve();
        let got = c.eval(0.25).unwrap();
        let oracle = c.eval_oracle(0.25).unwrap();
        assert!((got - oracle).max_abs() < 1e-9);
        let b: [f64; 7] = core::array::from_fn(|i| {
            binomial(6, i) * 0.25f64.powi(i as i32) * 0.75f64.powi(6 - i as i32)
        });
        let w = [1.0, 2000.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let den: f64 = (0..7).map(|i| b[i] * w[i]).sum();
        let x = (b[1] * 2000.0 + b[2] + b[5] + b[6]) / den;
        let y = (b[2] + b[3] + b[4] + b[5]) / den;
        let z = (b[4] + b[5] + b[6]) / den;
        assert!((got - Vec3::new(x, y, z)).max_abs() < 1e-12);
        // the heavy corner pulls the point almost onto p1
        assert!(got.distance(Vec3::X) < 0.01);
    }

    #[test]
    fn out_of_range_phase_is_an_error() {
        let c = linear_curve();
        assert_eq!(c.eval(1.5), Err(Error::PhaseOutOfRange(1.5)));
        assert!(c.eval(-1e-9).is_err());
        assert!(c.eval_oracle(f64::NAN).is_err());
    }

    #[test]
    fn invalid_weights_rejected() {
        let p = [Vec3::ZERO; 7];
        assert!(RationalBezier::new(p, [1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(RationalBezier::new(p, [1.0, -2.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn doubled_weights_identical() {
        let c = cube_curve();
        let d = c.with_scaled_weights(2.0).unwrap();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!((c.eval_oracle(t).unwrap() - d.eval_oracle(t).unwrap()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn slerp_cases() {
        let q0 = Quat::IDENTITY;
        let q1 = Quat::from_yaw(FRAC_PI_2);
        let tr = OrientationTrack::new(q0, q1).unwrap();
        assert!(tr.slerp(0.0).unwrap().approx_eq(q0, 1e-15));
        assert!(tr.slerp(1.0).unwrap().approx_eq(q1, 1e-15));
        let mid = tr.slerp(0.5).unwrap();
        assert!(mid.approx_eq(Quat::from_yaw(FRAC_PI_2 / 2.0), 1e-12));
        assert!(tr.slerp(1.1).is_err());
    }

    #[test]
    fn slerp_takes_short_arc() {
        let q0 = Quat::from_yaw(0.1);
        let q1 = Quat::from_yaw(0.3).neg();
        let tr = OrientationTrack::new(q0, q1).unwrap();
        let mid = tr.slerp(0.5).unwrap();
        assert!(quat_angle_between(mid, Quat::from_yaw(0.2)) < 1e-12);
    }

    #[test]
    fn slerp_degenerate_pair_is_finite() {
        let q0 = Quat::from_euler_zyx(0.2, 0.3, 0.4);
        let q1 = (q0 * Quat::from_axis_angle(Vec3::X, 1e-9)).neg();
        let tr = OrientationTrack::new(q0, q1).unwrap();
        for k in 0..=10 {
            let q = tr.slerp(k as f64 / 10.0).unwrap();
            assert!(q.to_array().iter().all(|v| v.is_finite()));
            assert!((q.norm() - 1.0).abs() < 1e-12);
        }
        let same = OrientationTrack::constant(q0).slerp(0.5).unwrap();
        assert!(same.approx_eq(q0, 1e-15));
    }

    #[test]
    fn phase_clamps() {
        let c = PhaseClock::new(2.0, 4.0).unwrap();
        assert_eq!(c.phase(2.0), 0.0);
        assert_eq!(c.phase(6.0), 1.0);
        assert_eq!(c.phase(100.0), 1.0);
        assert_eq!(c.phase(0.0), 0.0);
        assert_eq!(c.phase(3.0), 0.25);
        assert!(PhaseClock::new(0.0, 0.0).is_err());
        assert!(PhaseClock::new(0.0, -1.0).is_err());
    }

    #[test]
    fn lookahead_cases() {
        let c = linear_curve();
        let clock = PhaseClock::new(0.0, 4.0).unwrap();
        let past = lookahead_points(&c, &clock, 10.0, 0.02, 3).unwrap();
        assert_eq!(past.len(), 3);
        assert!(past.iter().all(|p| *p == c.end()));
        let pts = lookahead_points(&c, &clock, 1.0, 0.02, 3).unwrap();
        assert_eq!(pts.len(), 3);
        // x(t) = 6 t_now / duration on the linear curve
        for (j, p) in pts.iter().enumerate() {
            let expect = 6.0 * (1.0 + (j + 1) as f64 * 0.02) / 4.0;
            assert!((p.x - expect).abs() < 1e-12);
        }
        assert!(lookahead_points(&c, &clock, 1.0, 0.0, 3).is_err());
    }
}
