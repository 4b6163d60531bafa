//! Parser for the line-oriented template data file.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::curves::{OrientationTrack, TrajectoryCurve, CONTROL_POINTS};
use crate::params::{FrameTag, Manipulator, TrajectoryParams};
use crate::{Error, Quat, Result, Vec3};

/// The built-in templates shipped with the crate.
pub const BUILTIN_TEMPLATES: &str = include_str!("../../data/templates.txt");

/// An object-frame expert trajectory. The flag is chosen per episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub task: String,
    pub curve: TrajectoryCurve,
    pub dir_start: Vec3,
    pub dir_end: Vec3,
    pub duration: f64,
}

impl Template {
    /// Object-frame parameters for manipulator `flag`.
    pub fn params(&self, flag: Manipulator) -> TrajectoryParams {
        TrajectoryParams {
            flag,
            curve: self.curve,
            orientation: OrientationTrack {
                start: Quat::from_two_vectors(Vec3::Z, self.dir_start),
                end: Quat::from_two_vectors(Vec3::Z, self.dir_end),
            },
            duration: self.duration,
            frame: FrameTag::Object,
        }
    }
}

#[derive(Default)]
struct Draft {
    task: Option<(String, usize)>,
    duration: Option<f64>,
    points: Vec<(Vec3, f64)>,
    dir_start: Option<Vec3>,
    dir_end: Option<Vec3>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Template { line, msg: msg.into() }
}

fn numbers<const N: usize>(line: usize, key: &str, fields: &[&str]) -> Result<[f64; N]> {
    if fields.len() != N {
        return Err(err(line, format!("{key} expects {N} numbers, found {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (i, f) in fields.iter().enumerate() {
        out[i] = f
            .parse::<f64>()
            .map_err(|_| err(line, format!("{key} field {}: {f:?} is not a number", i + 1)))?;
        if !out[i].is_finite() {
            return Err(err(line, format!("{key} field {}: value must be finite", i + 1)));
        }
    }
    Ok(out)
}

fn direction(line: usize, key: &str, fields: &[&str]) -> Result<Vec3> {
    Vec3::from_array(numbers::<3>(line, key, fields)?)
        .try_normalize()
        .ok_or_else(|| err(line, format!("{key} must be a nonzero vector")))
}

impl Draft {
    fn finish(self, line: usize) -> Result<Template> {
        let (task, start) = self.task.ok_or_else(|| err(line, "end without task"))?;
        if self.points.len() != CONTROL_POINTS {
            return Err(err(
                start,
                format!("task {task} has {} points, expected {CONTROL_POINTS}", self.points.len()),
            ));
        }
        let mut pts = [Vec3::ZERO; CONTROL_POINTS];
        let mut ws = [0.0; CONTROL_POINTS];
        for (i, (p, w)) in self.points.into_iter().enumerate() {
            pts[i] = p;
            ws[i] = w;
        }
        let curve = TrajectoryCurve::new(pts, ws).map_err(|e| err(start, e.to_string()))?;
        let duration = self.duration.ok_or_else(|| err(start, format!("task {task} has no duration")))?;
        let dir_start = self.dir_start.ok_or_else(|| err(start, format!("task {task} has no dir_start")))?;
        let dir_end = self.dir_end.ok_or_else(|| err(start, format!("task {task} has no dir_end")))?;
        Ok(Template {
            task,
            curve,
            dir_start,
            dir_end,
            duration,
        })
    }
}

/// Parses template blocks. Line numbers in errors are 1-based.
pub fn parse_templates(text: &str) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    let mut draft: Option<Draft> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let (key, rest) = (fields[0], &fields[1..]);
        if key == "task" {
            if draft.is_some() {
                return Err(err(line, "task starts before the previous block's end"));
            }
            let [name] = rest else {
                return Err(err(line, "task expects one name"));
            };
            if out.iter().any(|t: &Template| t.task == *name) {
                return Err(err(line, format!("duplicate task {name}")));
            }
            draft = Some(Draft {
                task: Some((name.to_string(), line)),
                ..Draft::default()
            });
            continue;
        }
        let d = draft.as_mut().ok_or_else(|| err(line, format!("{key} outside a task block")))?;
        match key {
            "duration" => {
                let [v] = numbers::<1>(line, key, rest)?;
                if v <= 0.0 {
                    return Err(err(line, "duration must be positive"));
                }
                d.duration = Some(v);
            }
            "point" => {
                let [x, y, z, w] = numbers::<4>(line, key, rest)?;
                if w <= 0.0 {
                    return Err(err(line, "point field 4: weight must be positive"));
                }
                if d.points.len() == CONTROL_POINTS {
                    return Err(err(line, format!("more than {CONTROL_POINTS} points")));
                }
                d.points.push((Vec3::new(x, y, z), w));
            }
            "dir_start" => d.dir_start = Some(direction(line, key, rest)?),
            "dir_end" => d.dir_end = Some(direction(line, key, rest)?),
            "end" => {
                if !rest.is_empty() {
                    return Err(err(line, "end takes no fields"));
                }
                out.push(draft.take().expect("checked above").finish(line)?);
            }
            other => return Err(err(line, format!("unknown key {other:?}"))),
        }
    }
    if let Some(d) = draft {
        let line = d.task.as_ref().map(|t| t.1).unwrap_or(0);
        return Err(err(line, "block is missing its end"));
    }
    Ok(out)
}
