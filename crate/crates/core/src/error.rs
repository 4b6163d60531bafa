use alloc::string::String;

use crate::params::FrameTag;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("phase {0} outside [0, 1]")]
    PhaseOutOfRange(f64),
    #[error("invalid curve: {0}")]
    InvalidCurve(&'static str),
    #[error("quaternion has zero or non-finite norm")]
    InvalidQuaternion,
    #[error("degenerate interval for {name}: [{lo}, {hi}]")]
    DegenerateInterval { name: &'static str, lo: f64, hi: f64 },
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("unsupported frame hop {from:?} -> {to:?}")]
    UnsupportedFrameHop { from: FrameTag, to: FrameTag },
    #[error("parameters are in frame {found:?}, expected {expected:?}")]
    WrongFrame { expected: FrameTag, found: FrameTag },
    #[error("manipulator flag must be 0 or 1, got {0}")]
    InvalidFlag(u8),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("reward window needs at least {needed} samples, got {got}")]
    WindowTooShort { needed: usize, got: usize },
    #[error("unknown scene object id {0}")]
    UnknownObject(u32),
    #[error("scene has no surfaces to sample")]
    EmptyScene,
    #[error("point count must be at least 1")]
    EmptyCloud,
    #[error("unknown task {0:?}; valid tasks: press_button, pull_handle, push_door, lift_basket, open_dishwasher, close_dishwasher, pull_objects, twist_valve, shoot_ball")]
    UnknownTask(String),
    #[error("episode is incomplete ({ticks} of {expected} ticks)")]
    IncompleteEpisode { ticks: usize, expected: usize },
    #[error("planner fault: {0}")]
    Planner(String),
    #[error("template data line {line}: {msg}")]
    Template { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}
