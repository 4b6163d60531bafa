mod support;

use pedi_core::curves::{lookahead_points, OrientationTrack, PhaseClock, TrajectoryCurve};
use pedi_core::curves::CONTROL_POINTS;
use pedi_core::{Quat, Vec3};
use proptest::prelude::*;
use rand::Rng;
use support::{de_casteljau, random_curve, random_quat, rng, rotation_angle};

#[test]
fn matches_de_casteljau_on_ten_thousand_samples() {
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let c = random_curve(&mut r);
        let t = r.random_range(0.0..=1.0);
        let got = c.eval(t).unwrap();
        let want = de_casteljau(c.points(), c.weights(), t);
        worst = worst.max((got - want).max_abs());
    }
    assert!(worst <= 1e-9, "worst deviation {worst}");
}

#[test]
fn endpoints_interpolate_exactly() {
    let mut r = rng(12);
    for _ in 0..1000 {
        let c = random_curve(&mut r);
        assert!((c.eval(0.0).unwrap() - c.points()[0]).max_abs() <= 1e-12);
        assert!((c.eval(1.0).unwrap() - c.points()[CONTROL_POINTS - 1]).max_abs() <= 1e-12);
    }
}

#[test]
fn phase_outside_unit_interval_is_rejected() {
    let c = random_curve(&mut rng(1));
    for t in [-1e-9, 1.0 + 1e-9, f64::NAN] {
        assert!(c.eval(t).is_err());
    }
}

#[test]
fn heavy_weight_pulls_curve_toward_its_point() {
    let pts: [Vec3; CONTROL_POINTS] = core::array::from_fn(|i| Vec3::new(i as f64 * 0.1, 0.0, if i == 3 { 1.0 } else { 0.1 }));
    let light = TrajectoryCurve::new(pts, [1.0; CONTROL_POINTS]).unwrap();
    let mut w = [1.0; CONTROL_POINTS];
    w[3] = 2000.0;
    let heavy = TrajectoryCurve::new(pts, w).unwrap();
    let d_light = light.eval(0.5).unwrap().distance(pts[3]);
    let d_heavy = heavy.eval(0.5).unwrap().distance(pts[3]);
    assert!(d_heavy < 0.01 && d_heavy < d_light, "{d_heavy} vs {d_light}");
}

#[test]
fn non_positive_weights_are_rejected() {
    let pts = [Vec3::ZERO; CONTROL_POINTS];
    let mut w = [1.0; CONTROL_POINTS];
    w[2] = 0.0;
    assert!(TrajectoryCurve::new(pts, w).is_err());
    w[2] = -1.0;
    assert!(TrajectoryCurve::new(pts, w).is_err());
}

#[test]
fn lookahead_points_follow_the_clock() {
    let c = random_curve(&mut rng(5));
    let clock = PhaseClock::new(1.0, 4.0).unwrap();
    let ahead = lookahead_points(&c, &clock, 2.0, 0.02, 3).unwrap();
    for (k, p) in ahead.iter().enumerate() {
        let t = clock.phase(2.0 + 0.02 * (k + 1) as f64);
        assert!((*p - de_casteljau(c.points(), c.weights(), t)).max_abs() < 1e-9);
    }
    assert_eq!(clock.phase(0.0), 0.0);
    assert_eq!(clock.phase(9.0), 1.0);
}

#[test]
fn slerp_properties() {
    let mut r = rng(13);
    for _ in 0..1000 {
        let tr = OrientationTrack::new(random_quat(&mut r), random_quat(&mut r)).unwrap();
        let total = rotation_angle(tr.start, tr.end);
        assert!(rotation_angle(tr.slerp(0.0).unwrap(), tr.start) <= 1e-7);
        assert!(rotation_angle(tr.slerp(1.0).unwrap(), tr.end) <= 1e-7);
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let q = tr.slerp(t).unwrap();
            assert!((q.norm() - 1.0).abs() <= 1e-9);
            assert!((rotation_angle(tr.start, q) - t * total).abs() <= 1e-7, "t {t}");
        }
    }
}

#[test]
fn slerp_degenerate_inputs_stay_finite() {
    let q = Quat::from_axis_angle(Vec3::new(0.3, -0.2, 0.9).normalize(), 0.7);
    let nudged = Quat::new(q.w + 1e-12, q.x, q.y, q.z - 1e-12).unwrap();
    for end in [q, nudged, Quat::new(-q.w, -q.x, -q.y, -q.z).unwrap()] {
        let tr = OrientationTrack::new(q, end).unwrap();
        for k in 0..=10 {
            let s = tr.slerp(k as f64 / 10.0).unwrap();
            assert!(s.to_array().iter().all(|v| v.is_finite()));
            assert!(rotation_angle(s, q) < 1e-6);
        }
    }
}

proptest! {
    #[test]
    fn weight_scaling_leaves_the_curve_unchanged(seed in any::<u64>(), c in 1e-3f64..1e3, t in 0.0f64..=1.0) {
        let curve = random_curve(&mut rng(seed));
        let scaled = curve.with_scaled_weights(c).unwrap();
        prop_assert!((curve.eval(t).unwrap() - scaled.eval(t).unwrap()).max_abs() <= 1e-9);
    }

    #[test]
    fn curve_stays_in_control_point_box(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let curve = random_curve(&mut rng(seed));
        let (lo, hi) = curve.control_bounds();
        let p = curve.eval(t).unwrap();
        for (v, (l, h)) in p.to_array().into_iter().zip(lo.to_array().into_iter().zip(hi.to_array())) {
            prop_assert!(v >= l - 1e-12 && v <= h + 1e-12);
        }
    }

    #[test]
    fn slerp_is_unit_and_between_ends(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let tr = OrientationTrack::new(random_quat(&mut r), random_quat(&mut r)).unwrap();
        let q = tr.slerp(t).unwrap();
        prop_assert!((q.norm() - 1.0).abs() <= 1e-9);
        let total = rotation_angle(tr.start, tr.end);
        prop_assert!(rotation_angle(tr.start, q) <= total + 1e-9);
        prop_assert!(rotation_angle(q, tr.end) <= total + 1e-9);
    }
}
