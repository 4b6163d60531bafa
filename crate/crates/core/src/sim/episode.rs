use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::control::{
    compute_reward, desired_direction, ControlOutput, OracleController, RewardTerms, RewardWeights, TrackingSample,
};
use crate::curves::PhaseClock;
use crate::geometry::{quat_angle_between, Pose};
use crate::model::{JointVector, RobotState};
use crate::params::{build_command, express_params, FrameTag, Manipulator, TrajectoryParams, CONTROL_PERIOD};
use crate::sim::world::World;
use crate::{Error, Quat, Result, Vec3};

/// Control ticks between planner invocations (50 Hz / 10 Hz).
pub const PLANNER_PERIOD_TICKS: u64 = 5;

/// Default episode length, s.
pub const EPISODE_SECONDS: f64 = 20.0;

/// Points per planner observation cloud.
pub const CLOUD_POINTS: usize = 768;

/// What a planner sees on each 10 Hz tick.
pub struct PlannerInput<'a> {
    pub tick: u64,
    pub time: f64,
    /// World-frame observation cloud.
    pub cloud: &'a [Vec3],
    pub world: &'a World,
}

/// A planner's answer: new world-frame parameters, optionally restarting the
/// phase clock at the current time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanUpdate {
    pub params: TrajectoryParams,
    pub restart_clock: bool,
}

pub trait Planner {
    /// `None` keeps the active parameters.
    fn plan(&mut self, input: &PlannerInput<'_>) -> Result<Option<PlanUpdate>>;
}

/// Holds the manipulating toe wherever it is on the first planner tick.
#[derive(Debug, Default, Clone)]
pub struct NullPlanner {
    flag: Option<Manipulator>,
}

impl NullPlanner {
    pub fn new(flag: Manipulator) -> Self {
        Self { flag: Some(flag) }
    }
}

impl Planner for NullPlanner {
    fn plan(&mut self, input: &PlannerInput<'_>) -> Result<Option<PlanUpdate>> {
        if input.tick > 0 {
            return Ok(None);
        }
        let flag = self.flag.unwrap_or(input.world.manipulator);
        let leg = crate::model::Leg::from_index(flag.leg()).expect("front leg");
        let toe = input.world.state.toe_pose(&input.world.model, leg);
        Ok(Some(PlanUpdate {
            params: TrajectoryParams::hold(flag, toe.position, toe.orientation, FrameTag::World),
            restart_clock: true,
        }))
    }
}

/// Planner-tick snapshot handed to hooks.
pub struct PlannerRecord<'a> {
    pub planner_tick: u64,
    pub tick: u64,
    pub cloud: &'a [Vec3],
    pub state: &'a RobotState,
    pub params: &'a TrajectoryParams,
}

/// Observation points of an episode. Every method defaults to a no-op.
pub trait EpisodeHooks {
    /// Runs before tick `tick` is computed; may perturb the world.
    fn before_tick(&mut self, _tick: u64, _world: &mut World) -> Result<()> {
        Ok(())
    }

    fn on_planner_tick(&mut self, _record: &PlannerRecord<'_>) {}

    fn after_control(&mut self, _tick: u64, _output: &ControlOutput) {}
}

pub struct NoHooks;

impl EpisodeHooks for NoHooks {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    pub seconds: f64,
    pub cloud_points: usize,
    pub reward: RewardWeights,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            seconds: EPISODE_SECONDS,
            cloud_points: CLOUD_POINTS,
            reward: RewardWeights::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn control_ticks(&self) -> u64 {
        libm::round(self.seconds / CONTROL_PERIOD) as u64
    }

    pub fn planner_ticks(&self) -> u64 {
        self.control_ticks().div_ceil(PLANNER_PERIOD_TICKS)
    }
}

/// Object state at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSnapshot {
    pub id: u32,
    pub pose: Pose,
    pub value: f64,
}

/// Everything logged for one control tick, measured before the tick's
/// action is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub base: Pose,
    pub q: JointVector,
    pub flag: Manipulator,
    /// Seconds since the active trajectory's clock started.
    pub phase_time: f64,
    /// Manipulating toe, world frame.
    pub toe: Pose,
    pub desired_point: Vec3,
    pub desired_orientation: Quat,
    pub position_error: f64,
    pub orientation_error: f64,
    pub reward: RewardTerms,
    pub action: JointVector,
    pub out_of_reach: bool,
    pub objects: Vec<ObjectSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub seed: u64,
    pub expected_ticks: u64,
    pub planner_ticks: u64,
    pub log: Vec<TickRecord>,
    /// Diagnostic when a planner or controller fault ended the episode early.
    pub fault: Option<String>,
    pub final_world: World,
}

impl Episode {
    pub fn complete(&self) -> bool {
        self.fault.is_none() && self.log.len() as u64 == self.expected_ticks
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.complete() {
            Ok(())
        } else {
            Err(Error::IncompleteEpisode {
                ticks: self.log.len(),
                expected: self.expected_ticks as usize,
            })
        }
    }

    /// Canonical little-endian encoding of the log, for determinism checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.log.len() * 512);
        let mut f = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        f(self.seed as f64);
        f(self.planner_ticks as f64);
        for r in &self.log {
            f(r.tick as f64);
            pose_values(&r.base).into_iter().for_each(&mut f);
            r.q.iter().copied().for_each(&mut f);
            f(r.flag.flag() as f64);
            f(r.phase_time);
            pose_values(&r.toe).into_iter().for_each(&mut f);
            r.desired_point.to_array().into_iter().for_each(&mut f);
            r.desired_orientation.to_array().into_iter().for_each(&mut f);
            f(r.position_error);
            f(r.orientation_error);
            let rw = &r.reward;
            [rw.pos_xy, rw.pos_z, rw.ori, rw.ee_accel, rw.base_accel, rw.total]
                .into_iter()
                .for_each(&mut f);
            r.action.iter().copied().for_each(&mut f);
            f(r.out_of_reach as u8 as f64);
            for o in &r.objects {
                f(o.id as f64);
                pose_values(&o.pose).into_iter().for_each(&mut f);
                f(o.value);
            }
        }
        out
    }
}

fn pose_values(p: &Pose) -> [f64; 7] {
    let q = p.orientation.to_array();
    [p.position.x, p.position.y, p.position.z, q[0], q[1], q[2], q[3]]
}

/// splitmix64 finalizer; derives independent stream seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Tick-by-tick episode driver. [`run_episode`] loops it to completion; the
/// teleoperation session drives it one tick at a time.
#[derive(Debug, Clone)]
pub struct EpisodeRunner {
    pub world: World,
    pub controller: OracleController,
    pub config: EpisodeConfig,
    seed: u64,
    params: Option<TrajectoryParams>,
    clock: Option<PhaseClock>,
    window: Vec<TrackingSample>,
    log: Vec<TickRecord>,
    fault: Option<String>,
}

impl EpisodeRunner {
    pub fn new(world: World, controller: OracleController, config: EpisodeConfig, seed: u64) -> Result<Self> {
        config.reward.validate()?;
        if !(config.seconds > 0.0) || config.cloud_points == 0 {
            return Err(Error::Config(String::from("episode needs positive length and cloud size")));
        }
        Ok(Self {
            world,
            controller,
            config,
            seed,
            params: None,
            clock: None,
            window: Vec::with_capacity(3),
            log: Vec::new(),
            fault: None,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn log(&self) -> &[TickRecord] {
        &self.log
    }

    pub fn active_params(&self) -> Option<&TrajectoryParams> {
        self.params.as_ref()
    }

    pub fn clock(&self) -> Option<&PhaseClock> {
        self.clock.as_ref()
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    pub fn finished(&self) -> bool {
        self.fault.is_some() || self.log.len() as u64 >= self.config.control_ticks()
    }

    /// Time of the next tick, s.
    pub fn time(&self) -> f64 {
        self.log.len() as f64 * CONTROL_PERIOD
    }

    /// Installs parameters outside the planner cadence (teleoperation).
    pub fn set_params(&mut self, update: PlanUpdate) -> Result<()> {
        self.install(update)
    }

    fn install(&mut self, update: PlanUpdate) -> Result<()> {
        if update.params.frame != FrameTag::World {
            return Err(Error::WrongFrame {
                expected: FrameTag::World,
                found: update.params.frame,
            });
        }
        let t = self.time();
        match (&self.clock, update.restart_clock) {
            (Some(c), false) => {
                self.clock = Some(PhaseClock::new(c.t_start(), update.params.duration)?);
            }
            _ => self.clock = Some(PhaseClock::new(t, update.params.duration)?),
        }
        self.world.set_manipulator(update.params.flag);
        self.params = Some(update.params);
        Ok(())
    }

    /// Runs one control tick. A fault is recorded and also returned.
    pub fn step(&mut self, planner: &mut dyn Planner, hooks: &mut dyn EpisodeHooks) -> Result<()> {
        if self.finished() {
            return Ok(());
        }
        let result = self.step_inner(planner, hooks);
        if let Err(e) = &result {
            self.fault = Some(format!("tick {}: {e}", self.log.len()));
        }
        result
    }

    fn step_inner(&mut self, planner: &mut dyn Planner, hooks: &mut dyn EpisodeHooks) -> Result<()> {
        let tick = self.log.len() as u64;
        let t = self.time();
        hooks.before_tick(tick, &mut self.world)?;
        if tick % PLANNER_PERIOD_TICKS == 0 {
            let planner_tick = tick / PLANNER_PERIOD_TICKS;
            let cloud = self
                .world
                .point_cloud(self.config.cloud_points, mix_seed(self.seed, planner_tick))?;
            let update = planner.plan(&PlannerInput {
                tick,
                time: t,
                cloud: &cloud,
                world: &self.world,
            })?;
            if let Some(u) = update {
                self.install(u)?;
            }
            let params = self
                .params
                .as_ref()
                .ok_or_else(|| Error::Planner(String::from("no parameters after first planner tick")))?;
            hooks.on_planner_tick(&PlannerRecord {
                planner_tick,
                tick,
                cloud: &cloud,
                state: &self.world.state,
                params,
            });
        }
        let params = self.params.ok_or_else(|| Error::Planner(String::from("no active parameters")))?;
        let clock = self.clock.expect("clock is set with the parameters");
        let base = self.world.state.base;
        let body = express_params(&params, &base, FrameTag::Body)?;
        let cmd = build_command(&body, &clock, t, CONTROL_PERIOD)?;

        let toe = self.world.toe_pose();
        let desired_point = base.transform_point(cmd.desired_point);
        let desired_orientation = base.orientation * cmd.desired_orientation;
        let sample = TrackingSample {
            toe: toe.position,
            toe_dir: toe.orientation.rotate(Vec3::Z),
            base: base.position,
        };
        if self.window.is_empty() {
            self.window.extend([sample; 2]);
        }
        self.window.push(sample);
        if self.window.len() > 3 {
            self.window.remove(0);
        }
        let reward = compute_reward(
            &self.window,
            desired_point,
            desired_direction(desired_orientation),
            &self.config.reward,
            CONTROL_PERIOD,
        )?;

        let out = self.controller.act(&self.world.state, &cmd);
        if out.action.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("controller action"));
        }
        hooks.after_control(tick, &out);
        self.log.push(TickRecord {
            tick,
            base,
            q: self.world.state.q,
            flag: params.flag,
            phase_time: t - clock.t_start(),
            toe,
            desired_point,
            desired_orientation,
            position_error: toe.position.distance(desired_point),
            orientation_error: quat_angle_between(toe.orientation, desired_orientation),
            reward,
            action: out.action,
            out_of_reach: out.out_of_reach,
            objects: self
                .world
                .objects
                .iter()
                .map(|o| ObjectSnapshot {
                    id: o.id,
                    pose: o.pose,
                    value: o.articulation.value(),
                })
                .collect(),
        });
        self.world.state.prev_action = out.action;
        self.world.step(&out.filtered, &out.base)?;
        Ok(())
    }

    pub fn into_episode(self) -> Episode {
        Episode {
            seed: self.seed,
            expected_ticks: self.config.control_ticks(),
            planner_ticks: (self.log.len() as u64).div_ceil(PLANNER_PERIOD_TICKS),
            log: self.log,
            fault: self.fault,
            final_world: self.world,
        }
    }
}

/// Runs a full episode. Faults end it early and are recorded in
/// [`Episode::fault`].
pub fn run_episode(
    world: World,
    controller: OracleController,
    planner: &mut dyn Planner,
    config: EpisodeConfig,
    seed: u64,
    hooks: &mut dyn EpisodeHooks,
) -> Result<Episode> {
    let mut runner = EpisodeRunner::new(world, controller, config, seed)?;
    while !runner.finished() {
        if runner.step(planner, hooks).is_err() {
            break;
        }
    }
    Ok(runner.into_episode())
}
