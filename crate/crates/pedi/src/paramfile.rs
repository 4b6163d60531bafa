//! Text form of trajectory parameters used by `pedi eval-curve`.
//!
//! One field per line, `#` starts a comment:
//!
//! ```text
//! flag 1
//! frame object
//! p0 0.30 -0.10 0.05
//! ...
//! p6 0.45 -0.10 0.30
//! weights 1 1 1 1 1 1 1
//! orientation_start 1 0 0 0
//! orientation_end 0.7071 0 0.7071 0
//! duration 4
//! ```
//!
//! `frame` defaults to `object` and `duration` to 4 s. Quaternions are
//! `w x y z` and are normalized on load.

use pedi_core::curves::{OrientationTrack, RationalBezier};
use pedi_core::params::{FrameTag, Manipulator, TrajectoryParams, DEFAULT_DURATION};
use pedi_core::{Quat, Vec3};

use crate::{Error, Result};

const N: usize = 7;

pub fn parse_params(text: &str, path: &str) -> Result<TrajectoryParams> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut flag = None;
    let mut frame = FrameTag::Object;
    let mut points: [Option<Vec3>; N] = [None; N];
    let mut weights = None;
    let mut q_start = None;
    let mut q_end = None;
    let mut duration = DEFAULT_DURATION;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let key = words.next().expect("non-empty line");
        let rest: Vec<&str> = words.collect();
        let numbers = |want: usize| -> Result<Vec<f64>> {
            if rest.len() != want {
                return Err(err(line, format!("{key} expects {want} numbers, found {}", rest.len())));
            }
            rest.iter()
                .enumerate()
                .map(|(j, w)| match w.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(err(line, format!("{key} value {} is not a finite number: {w:?}", j + 1))),
                })
                .collect()
        };
        match key {
            "flag" => {
                flag = Some(match numbers(1)?[0] {
                    v if v == 0.0 => Manipulator::FrontLeft,
                    v if v == 1.0 => Manipulator::FrontRight,
                    v => return Err(err(line, format!("flag must be 0 or 1, found {v}"))),
                })
            }
            "frame" => {
                let name = rest.first().copied().unwrap_or("");
                frame = FrameTag::from_name(name)
                    .filter(|_| rest.len() == 1)
                    .ok_or_else(|| err(line, format!("frame must be object, world or body, found {:?}", rest.join(" "))))?;
            }
            "weights" => {
                let w = numbers(N)?;
                if let Some(j) = w.iter().position(|&v| v <= 0.0) {
                    return Err(err(line, format!("weight {j} must be positive, found {}", w[j])));
                }
                weights = Some(<[f64; N]>::try_from(w).expect("length checked"));
            }
            "orientation_start" | "orientation_end" => {
                let v = numbers(4)?;
                let q = Quat::new(v[0], v[1], v[2], v[3]).map_err(|e| err(line, format!("{key}: {e}")))?;
                if key == "orientation_start" {
                    q_start = Some(q);
                } else {
                    q_end = Some(q);
                }
            }
            "duration" => {
                duration = numbers(1)?[0];
                if duration <= 0.0 {
                    return Err(err(line, format!("duration must be positive, found {duration}")));
                }
            }
            k if k.starts_with('p') && k[1..].parse::<usize>().is_ok_and(|j| j < N) => {
                let j: usize = k[1..].parse().expect("checked");
                let v = numbers(3)?;
                points[j] = Some(Vec3::new(v[0], v[1], v[2]));
            }
            other => return Err(err(line, format!("unknown field {other:?}"))),
        }
    }
    let end = last_line.max(1);
    let missing = |what: &str| err(end, format!("missing field {what}"));
    let flag = flag.ok_or_else(|| missing("flag"))?;
    let mut pts = [Vec3::ZERO; N];
    for (j, p) in points.iter().enumerate() {
        pts[j] = p.ok_or_else(|| missing(&format!("p{j}")))?;
    }
    let weights = weights.unwrap_or([1.0; N]);
    let q_start = q_start.ok_or_else(|| missing("orientation_start"))?;
    let q_end = q_end.unwrap_or(q_start);
    let curve = RationalBezier::new(pts, weights).map_err(|e| err(end, e.to_string()))?;
    let track = OrientationTrack::new(q_start, q_end).map_err(|e| err(end, e.to_string()))?;
    TrajectoryParams::new(flag, curve, track, duration, frame).map_err(|e| err(end, e.to_string()))
}

pub fn render_params(p: &TrajectoryParams) -> String {
    let mut s = format!("flag {}\nframe {}\n", p.flag.flag(), p.frame.name());
    for (j, pt) in p.curve.points().iter().enumerate() {
        s.push_str(&format!("p{j} {:?} {:?} {:?}\n", pt.x, pt.y, pt.z));
    }
    let w: Vec<String> = p.curve.weights().iter().map(|w| format!("{w:?}")).collect();
    s.push_str(&format!("weights {}\n", w.join(" ")));
    for (name, q) in [("orientation_start", p.orientation.start), ("orientation_end", p.orientation.end)] {
        let a = q.to_array();
        s.push_str(&format!("{name} {:?} {:?} {:?} {:?}\n", a[0], a[1], a[2], a[3]));
    }
    s.push_str(&format!("duration {:?}\n", p.duration));
    s
}

/// Rows of `t x y z qw qx qy qz`, plus the oracle point when requested.
pub fn evaluate(p: &TrajectoryParams, ts: &[f64], oracle: bool) -> Result<Vec<Vec<f64>>> {
    ts.iter()
        .map(|&t| {
            let x = p.curve.eval(t)?;
            let q = p.orientation.slerp(t)?.to_array();
            let mut row = vec![t, x.x, x.y, x.z, q[0], q[1], q[2], q[3]];
            if oracle {
                let o = p.curve.eval_oracle(t)?;
                row.extend([o.x, o.y, o.z]);
            }
            Ok(row)
        })
        .collect()
}

pub fn eval_columns(oracle: bool) -> Vec<&'static str> {
    let mut c = vec!["t", "x", "y", "z", "qw", "qx", "qy", "qz"];
    if oracle {
        c.extend(["oracle_x", "oracle_y", "oracle_z"]);
    }
    c
}
