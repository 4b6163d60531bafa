//! Deterministic 50 Hz kinematic simulation: the world, its scene objects and
//! the episode runner.

pub mod episode;
pub mod metrics;
pub mod scene;
pub mod world;

pub use episode::{
    mix_seed, run_episode, Episode, EpisodeConfig, EpisodeHooks, EpisodeRunner, NoHooks, NullPlanner, PlanUpdate,
    Planner, PlannerInput, PlannerRecord, TickRecord, CLOUD_POINTS, EPISODE_SECONDS, PLANNER_PERIOD_TICKS,
};
pub use scene::{sample_cloud, Articulation, Band, Ball, Carry, Hinge, HingeDrive, Part, SceneObject, Shape, Slide};
pub use world::{SimConfig, World};
pub use metrics::{tracking_metrics, TrackingMetrics};
