//! Live teleoperation: a [`Session`] wraps one simulated episode that clients
//! steer by editing trajectory parameters, and [`Server`] exposes it over TCP.
//!
//! Frames are a little-endian `u32` byte length followed by that many bytes of
//! UTF-8 JSON. The message schema is in `docs/teleop_protocol.md`.

use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use pedi_core::control::OracleController;
use pedi_core::model::Leg;
use pedi_core::params::{
    FrameTag, Manipulator, RandomizationRanges, TrajectoryParams, CONTROL_PERIOD,
};
use pedi_core::sim::{
    EpisodeRunner, Planner, PlannerInput, PlanUpdate, TickRecord, PLANNER_PERIOD_TICKS,
};
use pedi_core::tasks::{instantiate, TaskId};
use pedi_core::{Pose, Quat, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::PediConfig;
use crate::dataset::{Dataset, Header, Provenance, Recorder, Trajectory};
use crate::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAX_FRAME_BYTES: usize = 1 << 20;
pub const DEFAULT_SESSION_SECONDS: f64 = 600.0;
pub const STATE_HZ: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default)]
    pub session: String,
    #[serde(default)]
    pub tick: u64,
    #[serde(flatten)]
    pub message: Message,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    Hello {
        task: String,
        seed: u64,
        protocol: u32,
        model_config_hash: String,
        reward_config_hash: String,
        control_hz: u32,
        state_hz: u32,
    },
    State(Box<StateFrame>),
    SetParams {
        id: u64,
        updates: Vec<ParamUpdate>,
        #[serde(default)]
        restart: bool,
    },
    Record {
        id: u64,
        action: RecordAction,
    },
    Ack {
        id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordAction {
    Start,
    Stop,
}

/// One edit of the active parameters. Values are world-frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum ParamUpdate {
    Point { index: usize, value: [f64; 3] },
    Weight { index: usize, value: f64 },
    Flag { value: u64 },
    Orientations { start: [f64; 4], end: [f64; 4] },
    Duration { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseJson {
    pub position: [f64; 3],
    /// w x y z
    pub orientation: [f64; 4],
}

impl From<Pose> for PoseJson {
    fn from(p: Pose) -> Self {
        Self {
            position: p.position.to_array(),
            orientation: p.orientation.to_array(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub flag: u8,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub orientation_start: [f64; 4],
    pub orientation_end: [f64; 4],
    pub duration: f64,
    pub frame: String,
}

impl From<&TrajectoryParams> for ParamsJson {
    fn from(p: &TrajectoryParams) -> Self {
        Self {
            flag: p.flag.flag(),
            points: p.curve.points().iter().map(|v| v.to_array()).collect(),
            weights: p.curve.weights().to_vec(),
            orientation_start: p.orientation.start.to_array(),
            orientation_end: p.orientation.end.to_array(),
            duration: p.duration,
            frame: p.frame.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardJson {
    pub pos_xy: f64,
    pub pos_z: f64,
    pub ori: f64,
    pub ee_accel: f64,
    pub base_accel: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectJson {
    pub id: u32,
    pub pose: PoseJson,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub time: f64,
    pub base: PoseJson,
    pub q: Vec<f64>,
    /// Front left, front right, rear left, rear right.
    pub toes: Vec<PoseJson>,
    pub desired_point: [f64; 3],
    pub desired_orientation: [f64; 4],
    pub position_error: f64,
    pub orientation_error: f64,
    pub reward: RewardJson,
    pub params: ParamsJson,
    /// Phase of the active trajectory in [0, 1].
    pub phase: f64,
    pub objects: Vec<ObjectJson>,
    pub recording: bool,
    pub clients: usize,
}

/// Planner for sessions: parameters only change through client commands.
struct Idle;

impl Planner for Idle {
    fn plan(&mut self, _input: &PlannerInput<'_>) -> pedi_core::Result<Option<PlanUpdate>> {
        Ok(None)
    }
}

#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub task: TaskId,
    pub seed: u64,
    pub seconds: f64,
    /// Where stopped recordings are written.
    pub record_dir: PathBuf,
}

impl SessionOptions {
    pub fn new(task: TaskId, seed: u64, record_dir: impl Into<PathBuf>) -> Self {
        Self {
            task,
            seed,
            seconds: DEFAULT_SESSION_SECONDS,
            record_dir: record_dir.into(),
        }
    }
}

/// One teleoperated episode. Commands are queued by [`Session::handle`] and
/// take effect at the start of the next [`Session::step`].
pub struct Session {
    id: String,
    cfg: PediConfig,
    opts: SessionOptions,
    runner: EpisodeRunner,
    recorder: Recorder,
    ranges: RandomizationRanges,
    pending: Option<PlanUpdate>,
    installed: Vec<(u64, PlanUpdate)>,
    recordings: u32,
    clients: usize,
}

impl Session {
    pub fn new(cfg: &PediConfig, opts: SessionOptions) -> Result<Self> {
        let world = instantiate(opts.task, opts.seed, &cfg.model, cfg.sim)?;
        let controller = OracleController::new(cfg.model.clone(), cfg.controller)?;
        let mut runner = EpisodeRunner::new(world, controller, cfg.episode_config(opts.seconds), opts.seed)?;
        let initial = PlanUpdate {
            params: hold_here(&runner, runner.world.manipulator),
            restart_clock: true,
        };
        runner.set_params(initial)?;
        let mut recorder = Recorder::new(false);
        recorder.active = false;
        Ok(Self {
            id: format!("{}-{:016x}", opts.task.name(), opts.seed),
            cfg: cfg.clone(),
            opts,
            runner,
            recorder,
            ranges: RandomizationRanges::default(),
            pending: None,
            installed: vec![(0, initial)],
            recordings: 0,
            clients: 0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Index of the next tick to run.
    pub fn tick(&self) -> u64 {
        self.runner.log().len() as u64
    }

    pub fn log(&self) -> &[TickRecord] {
        self.runner.log()
    }

    pub fn runner(&self) -> &EpisodeRunner {
        &self.runner
    }

    pub fn finished(&self) -> bool {
        self.runner.finished()
    }

    pub fn recording(&self) -> bool {
        self.recorder.active
    }

    /// Parameter installs so far, with the tick each took effect.
    pub fn installed(&self) -> &[(u64, PlanUpdate)] {
        &self.installed
    }

    pub fn set_clients(&mut self, n: usize) {
        self.clients = n;
    }

    fn envelope(&self, message: Message) -> Envelope {
        Envelope {
            session: self.id.clone(),
            tick: self.tick(),
            message,
        }
    }

    pub fn hello(&self) -> Envelope {
        self.envelope(Message::Hello {
            task: self.opts.task.name().to_string(),
            seed: self.opts.seed,
            protocol: PROTOCOL_VERSION,
            model_config_hash: self.cfg.model_hash(),
            reward_config_hash: self.cfg.reward_hash(),
            control_hz: (1.0 / CONTROL_PERIOD).round() as u32,
            state_hz: STATE_HZ,
        })
    }

    /// Handles a client message and returns the reply.
    pub fn handle(&mut self, message: Message) -> Envelope {
        let reply = match message {
            Message::SetParams { id, updates, restart } => match self.prepare(&updates, restart) {
                Ok(update) => {
                    self.pending = Some(update);
                    Message::Ack { id, detail: None }
                }
                Err(message) => Message::Error { id: Some(id), message },
            },
            Message::Record { id, action } => match self.record(action) {
                Ok(detail) => Message::Ack { id, detail },
                Err(message) => Message::Error { id: Some(id), message },
            },
            other => Message::Error {
                id: None,
                message: format!("clients may not send {} frames", kind_name(&other)),
            },
        };
        self.envelope(reply)
    }

    fn current(&self) -> TrajectoryParams {
        match &self.pending {
            Some(u) => u.params,
            None => *self.runner.active_params().expect("sessions always have parameters"),
        }
    }

    /// Applies a batch of edits to the queued parameters. Either every edit
    /// is valid and the batch is queued, or nothing changes.
    fn prepare(&self, updates: &[ParamUpdate], restart: bool) -> std::result::Result<PlanUpdate, String> {
        let mut p = self.current();
        for u in updates {
            apply_update(&mut p, u, &self.ranges)?;
        }
        if restart {
            let leg = Leg::from_index(p.flag.leg()).expect("front leg");
            let toe = self.runner.world.state.toe_pose(&self.runner.world.model, leg);
            p.curve.set_point(0, toe.position).map_err(|e| e.to_string())?;
        }
        Ok(PlanUpdate {
            params: p,
            restart_clock: restart || self.pending.is_some_and(|u| u.restart_clock),
        })
    }

    fn record(&mut self, action: RecordAction) -> std::result::Result<Option<String>, String> {
        match (action, self.recorder.active) {
            (RecordAction::Start, true) => Err("already recording".to_string()),
            (RecordAction::Start, false) => {
                self.recorder.records.clear();
                self.recorder.active = true;
                Ok(None)
            }
            (RecordAction::Stop, false) => Err("stop without start: not recording".to_string()),
            (RecordAction::Stop, true) => {
                self.recorder.active = false;
                let records = std::mem::take(&mut self.recorder.records);
                let n = records.len();
                let path = self.save_recording(records).map_err(|e| e.to_string())?;
                Ok(Some(format!("{n} records saved to {}", path.display())))
            }
        }
    }

    fn save_recording(&mut self, records: Vec<crate::dataset::DemoRecord>) -> Result<PathBuf> {
        let header = Header::new(
            self.opts.task.name(),
            Provenance::Teleop,
            self.opts.seed,
            &self.cfg,
            self.runner.config.cloud_points,
            false,
        );
        let mut ds = Dataset::empty(header);
        ds.push(Trajectory {
            seed: self.opts.seed,
            records,
        });
        std::fs::create_dir_all(&self.opts.record_dir).map_err(|e| Error::io(&self.opts.record_dir, e))?;
        self.recordings += 1;
        let path = self.opts.record_dir.join(format!("{}-{:03}.pdset", self.id, self.recordings));
        ds.save(&path)?;
        Ok(path)
    }

    /// Runs one control tick. Returns a state frame on the ticks that fall on
    /// the 10 Hz stream.
    pub fn step(&mut self) -> Result<Option<Envelope>> {
        if self.runner.finished() {
            return Ok(None);
        }
        let tick = self.tick();
        if let Some(u) = self.pending.take() {
            self.runner.set_params(u)?;
            self.installed.push((tick, u));
        }
        self.runner.step(&mut Idle, &mut self.recorder)?;
        if tick % PLANNER_PERIOD_TICKS == 0 {
            Ok(self.state_frame())
        } else {
            Ok(None)
        }
    }

    /// Snapshot of the last completed tick.
    pub fn state_frame(&self) -> Option<Envelope> {
        let r = self.runner.log().last()?;
        let world = &self.runner.world;
        let params = self.runner.active_params()?;
        let phase = self.runner.clock().map_or(0.0, |c| c.phase(r.tick as f64 * CONTROL_PERIOD));
        let frame = StateFrame {
            time: r.tick as f64 * CONTROL_PERIOD,
            base: r.base.into(),
            q: r.q.to_vec(),
            toes: Leg::ALL
                .iter()
                .map(|&leg| world.model.toe_pose(&r.q, &r.base, leg).into())
                .collect(),
            desired_point: r.desired_point.to_array(),
            desired_orientation: r.desired_orientation.to_array(),
            position_error: r.position_error,
            orientation_error: r.orientation_error,
            reward: RewardJson {
                pos_xy: r.reward.pos_xy,
                pos_z: r.reward.pos_z,
                ori: r.reward.ori,
                ee_accel: r.reward.ee_accel,
                base_accel: r.reward.base_accel,
                total: r.reward.total,
            },
            params: params.into(),
            phase,
            objects: r
                .objects
                .iter()
                .map(|o| ObjectJson {
                    id: o.id,
                    pose: o.pose.into(),
                    value: o.value,
                })
                .collect(),
            recording: self.recorder.active,
            clients: self.clients,
        };
        Some(Envelope {
            session: self.id.clone(),
            tick: r.tick,
            message: Message::State(Box::new(frame)),
        })
    }
}

fn hold_here(runner: &EpisodeRunner, flag: Manipulator) -> TrajectoryParams {
    let leg = Leg::from_index(flag.leg()).expect("front leg");
    let toe = runner.world.state.toe_pose(&runner.world.model, leg);
    TrajectoryParams::hold(flag, toe.position, toe.orientation, FrameTag::World)
}

fn kind_name(m: &Message) -> &'static str {
    match m {
        Message::Hello { .. } => "hello",
        Message::State(_) => "state",
        Message::SetParams { .. } => "set_params",
        Message::Record { .. } => "record",
        Message::Ack { .. } => "ack",
        Message::Error { .. } => "error",
    }
}

fn quat(v: [f64; 4], name: &str) -> std::result::Result<Quat, String> {
    Quat::from_array(v).map_err(|e| format!("{name}: {e}"))
}

/// Validates one edit against the randomization ranges and applies it.
pub fn apply_update(
    p: &mut TrajectoryParams,
    update: &ParamUpdate,
    ranges: &RandomizationRanges,
) -> std::result::Result<(), String> {
    let n = p.curve.points().len();
    let index_ok = |i: usize| {
        if i < n {
            Ok(())
        } else {
            Err(format!("control point index {i} outside [0, {}]", n - 1))
        }
    };
    match *update {
        ParamUpdate::Point { index, value } => {
            index_ok(index)?;
            let v = Vec3::from_array(value);
            if !v.is_finite() {
                return Err(format!("p[{index}] must be finite"));
            }
            ranges.check_point(index, v).map_err(|b| b.to_string())?;
            p.curve.set_point(index, v).map_err(|e| e.to_string())?;
        }
        ParamUpdate::Weight { index, value } => {
            index_ok(index)?;
            ranges.check_weight(index, value).map_err(|b| b.to_string())?;
            p.curve.set_weight(index, value).map_err(|e| e.to_string())?;
        }
        ParamUpdate::Flag { value } => {
            p.flag = match value {
                0 => Manipulator::FrontLeft,
                1 => Manipulator::FrontRight,
                v => return Err(format!("flag must be 0 or 1, got {v}")),
            };
        }
        ParamUpdate::Orientations { start, end } => {
            let (start, end) = (quat(start, "start")?, quat(end, "end")?);
            for (name, q) in [("start", start), ("end", end)] {
                let cos_theta = q.rotate(Vec3::Z).z;
                if !ranges.ori_cos_theta.contains(cos_theta) {
                    let b = ranges.ori_cos_theta;
                    return Err(format!("orientation {name}: cos_theta = {cos_theta} outside [{}, {}]", b.lo, b.hi));
                }
            }
            p.orientation = pedi_core::curves::OrientationTrack::new(start, end).map_err(|e| e.to_string())?;
        }
        ParamUpdate::Duration { value } => {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("duration must be positive and finite, got {value}"));
            }
            p.duration = value;
        }
    }
    Ok(())
}

pub fn write_frame(w: &mut impl Write, envelope: &Envelope) -> Result<()> {
    let body = serde_json::to_vec(envelope).map_err(|e| Error::Protocol(e.to_string()))?;
    w.write_all(&(body.len() as u32).to_le_bytes())?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame; `Ok(None)` on a clean end of stream before a frame.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Envelope>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(Error::Protocol(format!("frame of {len} bytes exceeds {MAX_FRAME_BYTES}")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let text = std::str::from_utf8(&body).map_err(|_| Error::Protocol("frame is not UTF-8".to_string()))?;
    serde_json::from_str(text)
        .map(Some)
        .map_err(|e| Error::Protocol(format!("bad frame: {e}")))
}

enum Incoming {
    Message(u64, Message),
    Broken(u64, String),
}

struct Peer {
    id: u64,
    stream: TcpStream,
}

/// Background TCP service around a [`Session`]. The session advances at
/// wall-clock 50 Hz whether or not clients are connected.
pub struct Server {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<Result<Session>>>,
}

impl Server {
    pub fn start(session: Session, bind: &str) -> Result<Self> {
        let listener = TcpListener::bind(bind).map_err(|e| Error::io(bind, e))?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let thread = std::thread::Builder::new()
            .name("pedi-session".to_string())
            .spawn(move || run_server(session, listener, flag))?;
        Ok(Self {
            addr,
            stop,
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Setting this flag ends the service loop.
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    /// Waits for the loop to end and returns the session.
    pub fn join(mut self) -> Result<Session> {
        let t = self.thread.take().expect("joined once");
        t.join().map_err(|_| Error::Protocol("session thread panicked".to_string()))?
    }

    pub fn shutdown(self) -> Result<Session> {
        self.stop.store(true, Ordering::SeqCst);
        self.join()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn send(peer: &mut Peer, envelope: &Envelope) -> bool {
    write_frame(&mut peer.stream, envelope).is_ok()
}

fn send_bytes(peer: &mut Peer, bytes: &[u8]) -> bool {
    peer.stream.write_all(bytes).and_then(|_| peer.stream.flush()).is_ok()
}

fn spawn_reader(id: u64, mut stream: TcpStream, tx: mpsc::Sender<Incoming>) {
    std::thread::spawn(move || loop {
        match read_frame(&mut stream) {
            Ok(Some(env)) => {
                if tx.send(Incoming::Message(id, env.message)).is_err() {
                    return;
                }
            }
            Ok(None) => {
                let _ = tx.send(Incoming::Broken(id, String::new()));
                return;
            }
            Err(e) => {
                let _ = tx.send(Incoming::Broken(id, e.to_string()));
                return;
            }
        }
    });
}

fn run_server(mut session: Session, listener: TcpListener, stop: Arc<AtomicBool>) -> Result<Session> {
    let (tx, rx) = mpsc::channel();
    let mut peers: Vec<Peer> = Vec::new();
    let mut next_id = 0u64;
    let period = Duration::from_secs_f64(CONTROL_PERIOD);
    let mut deadline = Instant::now();
    while !stop.load(Ordering::SeqCst) {
        loop {
            match listener.accept() {
                Ok((stream, _)) => {
                    stream.set_nonblocking(false)?;
                    stream.set_nodelay(true)?;
                    stream.set_write_timeout(Some(Duration::from_secs(1)))?;
                    let id = next_id;
                    next_id += 1;
                    let mut peer = Peer {
                        id,
                        stream: stream.try_clone()?,
                    };
                    if send(&mut peer, &session.hello()) {
                        spawn_reader(id, stream, tx.clone());
                        peers.push(peer);
                    }
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => break,
                Err(e) => return Err(e.into()),
            }
        }
        session.set_clients(peers.len());

        while let Ok(incoming) = rx.try_recv() {
            match incoming {
                Incoming::Message(id, message) => {
                    let reply = session.handle(message);
                    if let Some(p) = peers.iter_mut().find(|p| p.id == id) {
                        if !send(p, &reply) {
                            let _ = p.stream.shutdown(Shutdown::Both);
                        }
                    }
                }
                Incoming::Broken(id, reason) => {
                    if let Some(i) = peers.iter().position(|p| p.id == id) {
                        let mut p = peers.remove(i);
                        if !reason.is_empty() {
                            let err = session.handle_error(reason);
                            send(&mut p, &err);
                        }
                        let _ = p.stream.shutdown(Shutdown::Both);
                    }
                }
            }
        }
        session.set_clients(peers.len());

        let state = match session.step() {
            Ok(s) => s,
            Err(e) => Some(session.handle_error(format!("simulation stopped: {e}"))),
        };
        if let Some(state) = state {
            let bytes = encode_frame(&state)?;
            peers.retain_mut(|p| {
                let ok = send_bytes(p, &bytes);
                if !ok {
                    let _ = p.stream.shutdown(Shutdown::Both);
                }
                ok
            });
        }

        deadline += period;
        let now = Instant::now();
        if deadline > now {
            std::thread::sleep(deadline - now);
        } else {
            deadline = now;
        }
    }
    for p in &peers {
        let _ = p.stream.shutdown(Shutdown::Both);
    }
    Ok(session)
}

impl Session {
    fn handle_error(&self, message: String) -> Envelope {
        self.envelope(Message::Error { id: None, message })
    }
}

fn encode_frame(envelope: &Envelope) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_frame(&mut out, envelope)?;
    Ok(out)
}

/// Blocking client, for tools and tests.
pub struct Client {
    stream: TcpStream,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(Duration::from_secs(10)))?;
        Ok(Self { stream })
    }

    pub fn send(&mut self, message: Message) -> Result<()> {
        write_frame(
            &mut self.stream,
            &Envelope {
                session: String::new(),
                tick: 0,
                message,
            },
        )
    }

    /// Writes raw bytes, for exercising the server's error handling.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.stream.write_all(bytes)?;
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Option<Envelope>> {
        read_frame(&mut self.stream)
    }

    /// Reads frames until `pred` accepts one, skipping the rest.
    pub fn recv_until(&mut self, mut pred: impl FnMut(&Envelope) -> bool) -> Result<Envelope> {
        loop {
            match self.recv()? {
                Some(e) if pred(&e) => return Ok(e),
                Some(_) => {}
                None => return Err(Error::Protocol("connection closed".to_string())),
            }
        }
    }
}
