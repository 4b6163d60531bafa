//! Expert demonstration datasets: collection across a worker pool and the
//! `PEDIDSET` binary container. The byte layout is described in
//! `docs/dataset_format.md`.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pedi_core::control::{ControlOutput, OracleController};
use pedi_core::model::{RobotState, NUM_JOINTS};
use pedi_core::params::{Manipulator, TrajectoryParams, PARAM_SLOTS};
use pedi_core::sim::{mix_seed, run_episode, EpisodeHooks, PlannerRecord, CLOUD_POINTS, PLANNER_PERIOD_TICKS};
use pedi_core::tasks::{instantiate, success, ScriptedExpert, TaskId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, PediConfig};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PEDIDSET";
pub const VERSION: u32 = 1;
pub const STATE_SLOTS: usize = 46;
/// Controller actions stored per record: one 12-joint action per control tick
/// of the planner period.
pub const ACTION_SLOTS: usize = PLANNER_PERIOD_TICKS as usize * NUM_JOINTS;
pub const DEFAULT_TRAJECTORIES: usize = 100;
pub const DEFAULT_RECORDS: usize = 200;
pub const CONTROL_HZ: u32 = 50;
pub const PLANNER_HZ: u32 = 10;

/// Named groups of the state vector, in storage order.
pub const STATE_GROUPS: [(&str, usize); 11] = [
    ("base_position", 3),
    ("base_orientation_wxyz", 4),
    ("base_lin_vel", 3),
    ("base_ang_vel", 3),
    ("q", 12),
    ("qd", 12),
    ("prev_action_leg", 3),
    ("gravity_dir_body", 3),
    ("flag", 1),
    ("tick", 1),
    ("pad", 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Expert,
    Teleop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U32,
    F32,
}

/// One field of a record, stored back to back in header order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub dtype: Dtype,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub task: String,
    pub provenance: Provenance,
    pub seed: u64,
    pub control_hz: u32,
    pub planner_hz: u32,
    pub model_config_hash: String,
    pub reward_config_hash: String,
    pub trajectory_seeds: Vec<u64>,
    pub excluded_seeds: Vec<u64>,
    pub record_layout: Vec<Field>,
    pub state_layout: Vec<Slot>,
}

impl Header {
    pub fn new(task: &str, provenance: Provenance, seed: u64, cfg: &PediConfig, cloud_points: usize, actions: bool) -> Self {
        Self {
            task: task.to_string(),
            provenance,
            seed,
            control_hz: CONTROL_HZ,
            planner_hz: PLANNER_HZ,
            model_config_hash: cfg.model_hash(),
            reward_config_hash: cfg.reward_hash(),
            trajectory_seeds: Vec::new(),
            excluded_seeds: Vec::new(),
            record_layout: record_layout(cloud_points, actions),
            state_layout: STATE_GROUPS
                .iter()
                .map(|(n, c)| Slot {
                    name: n.to_string(),
                    count: *c,
                })
                .collect(),
        }
    }

    fn field(&self, name: &str) -> Option<&Field> {
        self.record_layout.iter().find(|f| f.name == name)
    }

    pub fn cloud_points(&self) -> usize {
        self.field("cloud").map_or(0, |f| f.count / 3)
    }

    pub fn has_actions(&self) -> bool {
        self.field("action").is_some()
    }

    /// Bytes per record including its trailing checksum.
    pub fn record_bytes(&self) -> usize {
        self.record_layout.iter().map(|f| 4 * f.count).sum::<usize>() + 4
    }

    fn check_layout(&self) -> Result<()> {
        let want = |name: &str, dtype: Dtype, count: Option<usize>| -> Result<()> {
            let f = self
                .field(name)
                .ok_or_else(|| Error::Header(format!("record layout lacks field {name:?}")))?;
            if f.dtype != dtype || count.is_some_and(|c| c != f.count) {
                return Err(Error::Header(format!("field {name:?} has unexpected type or size")));
            }
            Ok(())
        };
        want("planner_tick", Dtype::U32, Some(1))?;
        want("cloud", Dtype::F32, None)?;
        want("state", Dtype::F32, Some(STATE_SLOTS))?;
        want("params", Dtype::F32, Some(PARAM_SLOTS))?;
        if self.has_actions() {
            want("action", Dtype::F32, Some(ACTION_SLOTS))?;
        }
        let cloud = self.field("cloud").expect("checked").count;
        if cloud == 0 || cloud % 3 != 0 {
            return Err(Error::Header(format!("cloud field count {cloud} is not a positive multiple of 3")));
        }
        let slots: usize = self.state_layout.iter().map(|s| s.count).sum();
        if slots != STATE_SLOTS {
            return Err(Error::Header(format!("state layout covers {slots} slots, expected {STATE_SLOTS}")));
        }
        Ok(())
    }
}

fn record_layout(cloud_points: usize, actions: bool) -> Vec<Field> {
    let f = |name: &str, dtype, count| Field {
        name: name.to_string(),
        dtype,
        count,
    };
    let mut v = vec![
        f("planner_tick", Dtype::U32, 1),
        f("cloud", Dtype::F32, 3 * cloud_points),
        f("state", Dtype::F32, STATE_SLOTS),
        f("params", Dtype::F32, PARAM_SLOTS),
    ];
    if actions {
        v.push(f("action", Dtype::F32, ACTION_SLOTS));
    }
    v
}

/// One planner tick of a demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRecord {
    pub planner_tick: u32,
    /// World-frame points, x y z interleaved.
    pub cloud: Vec<f32>,
    pub state: [f32; STATE_SLOTS],
    /// World-frame trajectory parameters in the flat 39-slot layout.
    pub params: [f32; PARAM_SLOTS],
    /// The controller actions of this planner period, tick-major.
    pub action: Option<Vec<f32>>,
}

impl DemoRecord {
    pub fn capture(record: &PlannerRecord<'_>, actions: bool) -> Self {
        let mut cloud = Vec::with_capacity(record.cloud.len() * 3);
        for p in record.cloud {
            cloud.extend([p.x as f32, p.y as f32, p.z as f32]);
        }
        let mut params = [0.0f32; PARAM_SLOTS];
        for (d, s) in params.iter_mut().zip(record.params.to_flat()) {
            *d = s as f32;
        }
        Self {
            planner_tick: record.planner_tick as u32,
            cloud,
            state: state_vector(record.state, record.params.flag, record.tick),
            params,
            action: actions.then(|| vec![0.0; ACTION_SLOTS]),
        }
    }

    pub fn params(&self) -> Result<TrajectoryParams> {
        let flat: Vec<f64> = self.params.iter().map(|&v| v as f64).collect();
        Ok(TrajectoryParams::from_flat(&flat)?)
    }

    pub fn cloud_points(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.cloud.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }
}

pub fn state_vector(state: &RobotState, flag: Manipulator, tick: u64) -> [f32; STATE_SLOTS] {
    let mut v = Vec::with_capacity(STATE_SLOTS);
    let base = state.base;
    v.extend(base.position.to_array());
    v.extend(base.orientation.to_array());
    v.extend(state.base_lin_vel.to_array());
    v.extend(state.base_ang_vel.to_array());
    v.extend(state.q);
    v.extend(state.qd);
    let leg = flag.leg() * 3;
    v.extend(&state.prev_action[leg..leg + 3]);
    v.extend(state.gravity_body.try_normalize().unwrap_or_default().to_array());
    v.push(flag.flag() as f64);
    v.push(tick as f64);
    v.push(0.0);
    let mut out = [0.0f32; STATE_SLOTS];
    for (d, s) in out.iter_mut().zip(v) {
        *d = s as f32;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub records: Vec<DemoRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: Header,
    pub trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn empty(header: Header) -> Self {
        Self {
            header,
            trajectories: Vec::new(),
        }
    }

    pub fn push(&mut self, trajectory: Trajectory) {
        self.header.trajectory_seeds.push(trajectory.seed);
        self.trajectories.push(trajectory);
    }

    pub fn record_count(&self) -> usize {
        self.trajectories.iter().map(|t| t.records.len()).sum()
    }

    fn header_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.header).expect("header serializes")
    }

    /// Everything after the header: the trajectory section.
    pub fn body_bytes(&self) -> Result<Vec<u8>> {
        let rb = self.header.record_bytes();
        let mut out = Vec::with_capacity(4 + self.record_count() * rb + self.trajectories.len() * 16);
        out.extend((self.trajectories.len() as u32).to_le_bytes());
        let mut rec = Vec::with_capacity(rb);
        for (ti, t) in self.trajectories.iter().enumerate() {
            let start = out.len();
            out.extend(t.seed.to_le_bytes());
            out.extend((t.records.len() as u32).to_le_bytes());
            for (ri, r) in t.records.iter().enumerate() {
                rec.clear();
                encode_record(&self.header, r, &mut rec).map_err(|msg| {
                    Error::Header(format!("trajectory {ti} record {ri}: {msg}"))
                })?;
                let crc = crc32fast::hash(&rec);
                out.extend_from_slice(&rec);
                out.extend(crc.to_le_bytes());
            }
            let crc = crc32fast::hash(&out[start..]);
            out.extend(crc.to_le_bytes());
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = self.header_bytes();
        let body = self.body_bytes()?;
        let mut out = Vec::with_capacity(20 + header.len() + body.len());
        out.extend_from_slice(MAGIC);
        out.extend(VERSION.to_le_bytes());
        out.extend((header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend(crc32fast::hash(&header).to_le_bytes());
        out.extend(body);
        Ok(out)
    }

    pub fn body_sha256(&self) -> Result<String> {
        Ok(sha256_hex(&self.body_bytes()?))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::BadMagic);
        }
        r.pos = MAGIC.len();
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                expected: VERSION,
            });
        }
        let len = r.u32("header length")? as usize;
        let raw = r.take(len, "header")?;
        let crc = r.u32("header checksum")?;
        if crc32fast::hash(raw) != crc {
            return Err(Error::HeaderChecksum);
        }
        let header: Header = serde_json::from_slice(raw).map_err(|e| Error::Header(e.to_string()))?;
        header.check_layout()?;
        let count = r.u32("trajectory count")? as usize;
        if count != header.trajectory_seeds.len() {
            return Err(Error::Header(format!(
                "header lists {} trajectory seeds but the body holds {count} trajectories",
                header.trajectory_seeds.len()
            )));
        }
        let rb = header.record_bytes();
        let mut trajectories = Vec::with_capacity(count);
        for ti in 0..count {
            let start = r.pos;
            let seed = r.u64(&format!("trajectory {ti} seed"))?;
            let n = r.u32(&format!("trajectory {ti} record count"))? as usize;
            let mut records = Vec::with_capacity(n);
            for ri in 0..n {
                let raw = r.take(rb, &format!("trajectory {ti} record {ri}"))?;
                let (payload, crc) = raw.split_at(rb - 4);
                if crc32fast::hash(payload) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
                    return Err(Error::RecordChecksum {
                        trajectory: ti,
                        record: ri,
                    });
                }
                records.push(decode_record(&header, payload).map_err(|msg| {
                    Error::Header(format!("trajectory {ti} record {ri}: {msg}"))
                })?);
            }
            let crc = crc32fast::hash(&bytes[start..r.pos]);
            if r.u32(&format!("trajectory {ti} checksum"))? != crc {
                return Err(Error::TrajectoryChecksum { trajectory: ti });
            }
            if header.trajectory_seeds[ti] != seed {
                return Err(Error::Header(format!("trajectory {ti} seed differs from the header")));
            }
            trajectories.push(Trajectory { seed, records });
        }
        if r.pos != bytes.len() {
            return Err(Error::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(Self { header, trajectories })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        f.sync_all().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Columnar text dump: `records.csv` with one row per record and
    /// `clouds.csv` with one row per cloud point.
    pub fn export_csv(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let rec_path = dir.join("records.csv");
        let cloud_path = dir.join("clouds.csv");
        let open = |p: &Path| -> Result<std::io::BufWriter<std::fs::File>> {
            Ok(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| Error::io(p, e))?))
        };
        let mut rec = open(&rec_path)?;
        let mut cols = vec!["trajectory".to_string(), "seed".to_string(), "planner_tick".to_string()];
        for (name, count) in STATE_GROUPS {
            if count == 1 {
                cols.push(name.to_string());
            } else {
                cols.extend((0..count).map(|i| format!("{name}_{i}")));
            }
        }
        cols.extend((0..PARAM_SLOTS).map(|i| format!("param_{i}")));
        if self.header.has_actions() {
            cols.extend((0..ACTION_SLOTS).map(|i| format!("action_{i}")));
        }
        let io = |e| Error::io(&rec_path, e);
        writeln!(rec, "{}", cols.join(",")).map_err(io)?;
        for (ti, t) in self.trajectories.iter().enumerate() {
            for r in &t.records {
                let mut row = format!("{ti},{},{}", t.seed, r.planner_tick);
                let values = r.state.iter().chain(&r.params).chain(r.action.iter().flatten());
                for v in values {
                    row.push(',');
                    row.push_str(&v.to_string());
                }
                writeln!(rec, "{row}").map_err(io)?;
            }
        }
        rec.flush().map_err(io)?;
        let mut cl = open(&cloud_path)?;
        let io = |e| Error::io(&cloud_path, e);
        writeln!(cl, "trajectory,planner_tick,point,x,y,z").map_err(io)?;
        for (ti, t) in self.trajectories.iter().enumerate() {
            for r in &t.records {
                for (i, [x, y, z]) in r.cloud_points().enumerate() {
                    writeln!(cl, "{ti},{},{i},{x},{y},{z}", r.planner_tick).map_err(io)?;
                }
            }
        }
        cl.flush().map_err(io)?;
        Ok((rec_path, cloud_path))
    }
}

fn encode_record(header: &Header, r: &DemoRecord, out: &mut Vec<u8>) -> std::result::Result<(), String> {
    for f in &header.record_layout {
        let values: &[f32] = match f.name.as_str() {
            "planner_tick" => {
                out.extend(r.planner_tick.to_le_bytes());
                continue;
            }
            "cloud" => &r.cloud,
            "state" => &r.state,
            "params" => &r.params,
            "action" => r.action.as_deref().ok_or("record has no actions")?,
            other => return Err(format!("cannot encode field {other:?}")),
        };
        if values.len() != f.count {
            return Err(format!("field {} has {} values, layout says {}", f.name, values.len(), f.count));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("field {} holds a non-finite value", f.name));
        }
        for v in values {
            out.extend(v.to_le_bytes());
        }
    }
    Ok(())
}

fn decode_record(header: &Header, mut bytes: &[u8]) -> std::result::Result<DemoRecord, String> {
    let mut rec = DemoRecord {
        planner_tick: 0,
        cloud: Vec::new(),
        state: [0.0; STATE_SLOTS],
        params: [0.0; PARAM_SLOTS],
        action: None,
    };
    for f in &header.record_layout {
        let (chunk, rest) = bytes.split_at(4 * f.count);
        bytes = rest;
        if f.dtype == Dtype::U32 {
            if f.name == "planner_tick" {
                rec.planner_tick = u32::from_le_bytes(chunk.try_into().expect("one u32"));
            }
            continue;
        }
        let values: Vec<f32> = chunk
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("field {} holds a non-finite value", f.name));
        }
        match f.name.as_str() {
            "cloud" => rec.cloud = values,
            "state" => rec.state.copy_from_slice(&values),
            "params" => rec.params.copy_from_slice(&values),
            "action" => rec.action = Some(values),
            _ => {}
        }
    }
    Ok(rec)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                what: what.to_string(),
                offset: self.pos,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Episode hook that captures a record on every planner tick while active.
#[derive(Debug, Default)]
pub struct Recorder {
    pub active: bool,
    pub actions: bool,
    pub records: Vec<DemoRecord>,
}

impl Recorder {
    pub fn new(actions: bool) -> Self {
        Self {
            active: true,
            actions,
            records: Vec::new(),
        }
    }
}

impl EpisodeHooks for Recorder {
    fn on_planner_tick(&mut self, record: &PlannerRecord<'_>) {
        if self.active {
            self.records.push(DemoRecord::capture(record, self.actions));
        }
    }

    fn after_control(&mut self, tick: u64, output: &ControlOutput) {
        if !self.active {
            return;
        }
        let Some(last) = self.records.last_mut() else { return };
        let Some(action) = last.action.as_mut() else { return };
        let offset = tick.wrapping_sub(last.planner_tick as u64 * PLANNER_PERIOD_TICKS);
        if offset < PLANNER_PERIOD_TICKS {
            let k = offset as usize * NUM_JOINTS;
            for (d, s) in action[k..k + NUM_JOINTS].iter_mut().zip(output.action) {
                *d = s as f32;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    pub task: TaskId,
    pub trajectories: usize,
    pub records: usize,
    pub workers: usize,
    pub seed: u64,
    pub actions: bool,
}

impl CollectOptions {
    pub fn new(task: TaskId) -> Self {
        Self {
            task,
            trajectories: DEFAULT_TRAJECTORIES,
            records: DEFAULT_RECORDS,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: 0,
            actions: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Exclusion {
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CollectReport {
    pub dataset: Dataset,
    pub attempted: usize,
    pub exclusions: Vec<Exclusion>,
    pub wall: Duration,
}

/// Seed of the `index`-th candidate episode of a collection.
pub fn episode_seed(seed: u64, index: u64) -> u64 {
    mix_seed(seed, index)
}

/// Runs one scripted-expert episode and keeps it only if it completed and
/// solved the task.
pub fn demonstrate(cfg: &PediConfig, task: TaskId, seed: u64, records: usize, actions: bool) -> std::result::Result<Trajectory, String> {
    let run = || -> Result<std::result::Result<Trajectory, String>> {
        let world = instantiate(task, seed, &cfg.model, cfg.sim)?;
        let controller = OracleController::new(cfg.model.clone(), cfg.controller)?;
        let mut planner = ScriptedExpert::for_task(task, cfg.task)?;
        let mut recorder = Recorder::new(actions);
        let episode_cfg = cfg.episode_config(records as f64 / PLANNER_HZ as f64);
        let episode = run_episode(world, controller, &mut planner, episode_cfg, seed, &mut recorder)?;
        if let Some(fault) = &episode.fault {
            return Ok(Err(format!("fault: {fault}")));
        }
        if !success(task, &episode, &cfg.task)? {
            return Ok(Err("task not completed".to_string()));
        }
        if recorder.records.len() != records {
            return Ok(Err(format!("recorded {} of {records} records", recorder.records.len())));
        }
        Ok(Ok(Trajectory {
            seed,
            records: recorder.records,
        }))
    };
    run().unwrap_or_else(|e| Err(e.to_string()))
}

/// Collects `opts.trajectories` successful demonstrations. Candidate seeds are
/// drawn in index order and failures are replaced by the next candidates, so
/// the result depends only on the task, seed and configuration.
pub fn collect(cfg: &PediConfig, opts: &CollectOptions) -> Result<CollectReport> {
    collect_with(cfg, opts, |seed| demonstrate(cfg, opts.task, seed, opts.records, opts.actions))
}

/// [`collect`] with a caller-supplied episode runner, which receives each
/// candidate seed and returns a trajectory or the reason it was rejected.
pub fn collect_with<F>(cfg: &PediConfig, opts: &CollectOptions, episode: F) -> Result<CollectReport>
where
    F: Fn(u64) -> std::result::Result<Trajectory, String> + Sync,
{
    if opts.workers == 0 {
        return Err(Error::Usage("workers must be at least 1".to_string()));
    }
    if opts.records == 0 {
        return Err(Error::Usage("records per trajectory must be at least 1".to_string()));
    }
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut dataset = Dataset::empty(Header::new(
        opts.task.name(),
        Provenance::Expert,
        opts.seed,
        cfg,
        CLOUD_POINTS,
        opts.actions,
    ));
    let max_attempts = 4 * opts.trajectories + 16;
    let mut exclusions = Vec::new();
    let mut next = 0usize;
    while dataset.trajectories.len() < opts.trajectories {
        let missing = opts.trajectories - dataset.trajectories.len();
        if next + missing > max_attempts {
            return Err(Error::TooManyFailures {
                attempts: next,
                collected: dataset.trajectories.len(),
                wanted: opts.trajectories,
            });
        }
        let batch: Vec<u64> = (next..next + missing)
            .map(|i| episode_seed(opts.seed, i as u64))
            .collect();
        next += missing;
        let results: Vec<_> = pool.install(|| {
            batch
                .par_iter()
                .map(|&s| (s, episode(s)))
                .collect()
        });
        for (seed, result) in results {
            match result {
                Ok(t) => dataset.push(t),
                Err(reason) => exclusions.push(Exclusion { seed, reason }),
            }
        }
    }
    dataset.header.excluded_seeds = exclusions.iter().map(|e| e.seed).collect();
    Ok(CollectReport {
        dataset,
        attempted: next,
        exclusions,
        wall: started.elapsed(),
    })
}
