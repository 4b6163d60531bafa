use std::sync::OnceLock;

use pedi::config::PediConfig;
use pedi::dataset::{
    collect, collect_with, demonstrate, episode_seed, CollectOptions, CollectReport, Dataset, DemoRecord, Header,
    Provenance, Recorder, Trajectory, ACTION_SLOTS, STATE_SLOTS,
};
use pedi::Error;
use pedi_core::control::{ControlOutput, ControllerConfig, OracleController};
use pedi_core::params::{express_params, FrameTag, PARAM_SLOTS};
use pedi_core::sim::{run_episode, EpisodeHooks, PlannerRecord, SceneObject, SimConfig, World, CLOUD_POINTS};
use pedi_core::tasks::{instantiate, ScriptedExpert, TaskId};
use pedi_core::{Pose, Quat, Vec3};
use proptest::prelude::*;

fn small_collection() -> &'static CollectReport {
    static REPORT: OnceLock<CollectReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let mut opts = CollectOptions::new(TaskId::PressButton);
        opts.trajectories = 3;
        opts.workers = 1;
        opts.seed = 11;
        opts.actions = true;
        collect(&PediConfig::default(), &opts).unwrap()
    })
}

/// Offset of the first record of the first trajectory.
fn first_record_offset(bytes: &[u8]) -> usize {
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    16 + header_len + 4 + 4 + 8 + 4
}

/// A hand-built dataset with a tiny cloud, for the byte-level tests.
fn synthetic(trajectories: usize, records: usize) -> Dataset {
    let cfg = PediConfig::default();
    let mut ds = Dataset::empty(Header::new("press_button", Provenance::Expert, 5, &cfg, 4, false));
    for t in 0..trajectories {
        let records = (0..records)
            .map(|r| {
                let f = (t * 100 + r) as f32;
                DemoRecord {
                    planner_tick: r as u32,
                    cloud: (0..12).map(|i| f + i as f32 * 0.25).collect(),
                    state: core::array::from_fn(|i| f - i as f32),
                    params: core::array::from_fn(|i| f * 0.5 + i as f32),
                    action: None,
                }
            })
            .collect();
        ds.push(Trajectory { seed: 1000 + t as u64, records });
    }
    ds
}

#[test]
fn collection_has_requested_shape_and_header() {
    let report = small_collection();
    let ds = &report.dataset;
    assert_eq!(ds.trajectories.len(), 3);
    assert_eq!(ds.record_count(), 600);
    let h = &ds.header;
    assert_eq!(h.task, "press_button");
    assert_eq!(h.provenance, Provenance::Expert);
    assert_eq!(h.seed, 11);
    assert_eq!((h.control_hz, h.planner_hz), (50, 10));
    assert_eq!(h.model_config_hash.len(), 64);
    assert_eq!(h.reward_config_hash.len(), 64);
    assert_eq!(h.cloud_points(), CLOUD_POINTS);
    assert!(h.has_actions());
    let seeds: Vec<u64> = ds.trajectories.iter().map(|t| t.seed).collect();
    assert_eq!(h.trajectory_seeds, seeds);
    assert_eq!(seeds, (0..3).map(|i| episode_seed(11, i)).collect::<Vec<_>>());
    for t in &ds.trajectories {
        for (i, r) in t.records.iter().enumerate() {
            assert_eq!(r.planner_tick as usize, i);
            assert_eq!(r.cloud.len(), 3 * CLOUD_POINTS);
            assert_eq!(r.action.as_ref().map(Vec::len), Some(ACTION_SLOTS));
            assert_eq!(r.state[STATE_SLOTS - 2], (5 * i) as f32, "tick slot");
        }
    }
}

#[test]
fn save_and_load_round_trip_byte_for_byte() {
    let ds = &small_collection().dataset;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.pdset");
    ds.save(&path).unwrap();
    let loaded = Dataset::load(&path).unwrap();
    assert_eq!(&loaded, ds);
    let resaved = dir.path().join("e.pdset");
    loaded.save(&resaved).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&resaved).unwrap());
    assert_eq!(loaded.body_sha256().unwrap(), ds.body_sha256().unwrap());
}

#[test]
fn worker_count_does_not_change_the_body() {
    let cfg = PediConfig::default();
    let mut opts = CollectOptions::new(TaskId::OpenDishwasher);
    opts.trajectories = 4;
    opts.seed = 3;
    opts.workers = 1;
    let one = collect(&cfg, &opts).unwrap();
    opts.workers = 4;
    let four = collect(&cfg, &opts).unwrap();
    assert_eq!(one.dataset.body_sha256().unwrap(), four.dataset.body_sha256().unwrap());
    assert_eq!(one.dataset.to_bytes().unwrap(), four.dataset.to_bytes().unwrap());
}

#[test]
fn zero_trajectories_give_a_header_only_file() {
    let mut opts = CollectOptions::new(TaskId::PressButton);
    opts.trajectories = 0;
    let report = collect(&PediConfig::default(), &opts).unwrap();
    assert_eq!(report.attempted, 0);
    let bytes = report.dataset.to_bytes().unwrap();
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    assert_eq!(bytes.len(), 16 + header_len + 4 + 4);
    assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0, 0]);
    let back = Dataset::from_bytes(&bytes).unwrap();
    assert!(back.trajectories.is_empty());
    assert!(back.header.trajectory_seeds.is_empty());
}

#[test]
fn zero_workers_or_records_are_rejected() {
    let cfg = PediConfig::default();
    let mut opts = CollectOptions::new(TaskId::PressButton);
    opts.trajectories = 1;
    opts.workers = 0;
    assert!(matches!(collect(&cfg, &opts), Err(Error::Usage(_))));
    opts.workers = 1;
    opts.records = 0;
    assert!(matches!(collect(&cfg, &opts), Err(Error::Usage(_))));
}

#[test]
fn flipped_record_byte_names_the_record() {
    let ds = synthetic(2, 5);
    let bytes = ds.to_bytes().unwrap();
    let rb = ds.header.record_bytes();
    let first = first_record_offset(&bytes);
    for record in [0usize, 3] {
        let mut bad = bytes.clone();
        bad[first + record * rb + 17] ^= 0x40;
        match Dataset::from_bytes(&bad) {
            Err(Error::RecordChecksum { trajectory: 0, record: r }) => assert_eq!(r, record),
            other => panic!("expected a record checksum error, got {other:?}"),
        }
    }
    // second trajectory, record 1
    let second = first + 5 * rb + 4 + 12;
    let mut bad = bytes.clone();
    bad[second + rb + 2] ^= 1;
    assert!(matches!(
        Dataset::from_bytes(&bad),
        Err(Error::RecordChecksum { trajectory: 1, record: 1 })
    ));
    // the seed is covered by the trajectory checksum
    let mut bad = bytes.clone();
    bad[first - 12] ^= 1;
    assert!(matches!(Dataset::from_bytes(&bad), Err(Error::TrajectoryChecksum { trajectory: 0 })));
}

#[test]
fn container_errors_are_distinct() {
    let bytes = synthetic(1, 2).to_bytes().unwrap();

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(Dataset::from_bytes(&bad), Err(Error::BadMagic)));
    assert!(matches!(Dataset::from_bytes(b"PEDI"), Err(Error::BadMagic)));

    let mut bad = bytes.clone();
    bad[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(Dataset::from_bytes(&bad), Err(Error::Version { found: 2, expected: 1 })));

    let mut bad = bytes.clone();
    bad[20] ^= 0x02;
    assert!(matches!(Dataset::from_bytes(&bad), Err(Error::HeaderChecksum)));

    for cut in [10, 18, bytes.len() - 1, bytes.len() - 30] {
        assert!(
            matches!(Dataset::from_bytes(&bytes[..cut]), Err(Error::Truncated { .. })),
            "cut at {cut}"
        );
    }

    let mut long = bytes.clone();
    long.extend([0, 0, 0]);
    assert!(matches!(Dataset::from_bytes(&long), Err(Error::TrailingBytes(3))));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.pdset");
    assert!(matches!(Dataset::load(&missing), Err(Error::Io { .. })));
}

#[test]
fn exclusions_are_backfilled_in_seed_order() {
    let cfg = PediConfig::default();
    let mut opts = CollectOptions::new(TaskId::PressButton);
    opts.trajectories = 6;
    opts.seed = 21;
    let fails = |seed: u64| seed % 3 == 0;
    let fake = |seed: u64| {
        if fails(seed) {
            Err(format!("seed {seed} rejected"))
        } else {
            Ok(Trajectory { seed, records: Vec::new() })
        }
    };
    let mut runs = Vec::new();
    for workers in [1, 3] {
        opts.workers = workers;
        runs.push(collect_with(&cfg, &opts, fake).unwrap());
    }
    let candidates: Vec<u64> = (0..100).map(|i| episode_seed(21, i)).collect();
    let expected: Vec<u64> = candidates.iter().copied().filter(|s| !fails(*s)).take(6).collect();
    let last = candidates.iter().position(|s| *s == expected[5]).unwrap();
    for report in &runs {
        let kept: Vec<u64> = report.dataset.trajectories.iter().map(|t| t.seed).collect();
        let mut sorted = kept.clone();
        sorted.sort_by_key(|s| candidates.iter().position(|c| c == s));
        assert_eq!(sorted, expected);
        assert_eq!(report.dataset.header.trajectory_seeds, kept);
        let excluded: Vec<u64> = report.exclusions.iter().map(|e| e.seed).collect();
        assert_eq!(report.dataset.header.excluded_seeds, excluded);
        assert!(excluded.iter().all(|s| fails(*s)));
        assert!(report.attempted > last);
        assert_eq!(report.attempted, kept.len() + excluded.len());
        assert!(report.exclusions.iter().all(|e| e.reason.contains("rejected")));
    }
    assert_eq!(runs[0].dataset.body_sha256().unwrap(), runs[1].dataset.body_sha256().unwrap());
}

#[test]
fn hopeless_collection_gives_up() {
    let mut opts = CollectOptions::new(TaskId::PressButton);
    opts.trajectories = 2;
    opts.workers = 1;
    let err = collect_with(&PediConfig::default(), &opts, |_| Err("never".to_string())).unwrap_err();
    match err {
        Error::TooManyFailures { attempts, collected, wanted } => {
            assert_eq!((collected, wanted), (0, 2));
            assert!(attempts <= 4 * 2 + 16 && attempts >= 2);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn short_episodes_that_miss_the_task_are_excluded() {
    // Two seconds is not enough time to press the button.
    let r = demonstrate(&PediConfig::default(), TaskId::PressButton, 4, 10, false);
    assert!(r.unwrap_err().contains("not completed"));
}

/// Records the scene as it is just before each planner tick, alongside the
/// dataset records.
struct Witness {
    recorder: Recorder,
    scenes: Vec<Vec<SceneObject>>,
    actions: Vec<[f64; 12]>,
}

impl EpisodeHooks for Witness {
    fn before_tick(&mut self, tick: u64, world: &mut World) -> pedi_core::Result<()> {
        if tick % 5 == 0 {
            self.scenes.push(world.objects.clone());
        }
        Ok(())
    }

    fn on_planner_tick(&mut self, record: &PlannerRecord<'_>) {
        self.recorder.on_planner_tick(record);
    }

    fn after_control(&mut self, tick: u64, output: &ControlOutput) {
        self.actions.push(output.action);
        self.recorder.after_control(tick, output);
    }
}

fn witnessed(task: TaskId, seed: u64) -> (Witness, pedi_core::sim::Episode) {
    let m = pedi_core::model::QuadrupedModel::default();
    let world = instantiate(task, seed, &m, SimConfig::default()).unwrap();
    let controller = OracleController::new(m, ControllerConfig::default()).unwrap();
    let mut planner = ScriptedExpert::for_task(task, Default::default()).unwrap();
    let mut w = Witness {
        recorder: Recorder::new(true),
        scenes: Vec::new(),
        actions: Vec::new(),
    };
    let cfg = PediConfig::default().episode_config(20.0);
    let ep = run_episode(world, controller, &mut planner, cfg, seed, &mut w).unwrap();
    (w, ep)
}

#[test]
fn cloud_points_lie_on_the_scene_surfaces() {
    let (w, _) = witnessed(TaskId::PushDoor, 8);
    assert_eq!(w.recorder.records.len(), w.scenes.len());
    let mut checked = 0;
    for (k, (r, scene)) in w.recorder.records.iter().zip(&w.scenes).enumerate() {
        for (i, p) in r.cloud_points().enumerate() {
            // a deterministic 1% sample
            if (k * 768 + i) % 100 != 0 {
                continue;
            }
            let p = Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64);
            let d = scene.iter().map(|o| o.surface_distance(p)).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6, "record {k} point {i} is {d} m from every surface");
            checked += 1;
        }
    }
    assert!(checked >= 1500, "{checked}");
}

#[test]
fn stored_state_matches_the_episode_log() {
    let (w, ep) = witnessed(TaskId::TwistValve, 2);
    for r in &w.recorder.records {
        let tick = r.planner_tick as usize * 5;
        let log = &ep.log[tick];
        let base = log.base;
        let close = |a: f32, b: f64| (a as f64 - b).abs() < 1e-5 * (1.0 + b.abs());
        for i in 0..3 {
            assert!(close(r.state[i], base.position.to_array()[i]));
        }
        let q = Quat::from_array(core::array::from_fn(|i| r.state[3 + i] as f64)).unwrap();
        assert!(q.angle_between(base.orientation) < 1e-5);
        for j in 0..12 {
            assert!(close(r.state[13 + j], log.q[j]));
        }
        let g = Vec3::new(r.state[40] as f64, r.state[41] as f64, r.state[42] as f64);
        assert!((g.norm() - 1.0).abs() < 1e-6);
        // gravity points down in the world
        let down = base.orientation.rotate(g);
        assert!(down.distance(Vec3::new(0.0, 0.0, -1.0)) < 1e-5, "{down:?}");
        assert_eq!(r.state[43], log.flag.flag() as f32);
        assert_eq!(r.state[44], tick as f32);
        assert_eq!(r.state[45], 0.0);
    }
}

#[test]
fn stored_params_survive_the_body_frame_round_trip() {
    let (w, _) = witnessed(TaskId::OpenDishwasher, 5);
    for r in &w.recorder.records {
        let world = r.params().unwrap();
        assert_eq!(world.frame, FrameTag::World);
        let base = Pose::new(
            Vec3::new(r.state[0] as f64, r.state[1] as f64, r.state[2] as f64),
            Quat::from_array(core::array::from_fn(|i| r.state[3 + i] as f64)).unwrap(),
        );
        let body = express_params(&world, &base, FrameTag::Body).unwrap();
        let back = express_params(&body, &base, FrameTag::World).unwrap();
        let (a, b) = (world.to_flat(), back.to_flat());
        assert_eq!(a.len(), PARAM_SLOTS);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
        // the body-frame first point is the world point seen from the base
        let p0 = world.curve.points()[0];
        let rel = p0 - base.position;
        let seen = base.orientation.inverse().rotate(rel);
        assert!(body.curve.points()[0].distance(seen) < 1e-6);
    }
}

#[test]
fn stored_actions_are_the_logged_actions() {
    let (w, ep) = witnessed(TaskId::PressButton, 9);
    assert_eq!(w.actions.len(), ep.log.len());
    for r in &w.recorder.records {
        let action = r.action.as_ref().unwrap();
        for k in 0..5 {
            let tick = r.planner_tick as usize * 5 + k;
            for j in 0..12 {
                assert_eq!(action[k * 12 + j], ep.log[tick].action[j] as f32);
            }
        }
    }
}

#[test]
fn export_writes_one_row_per_record_and_point() {
    let ds = synthetic(2, 3);
    let dir = tempfile::tempdir().unwrap();
    let (records, clouds) = ds.export_csv(dir.path()).unwrap();
    let records = std::fs::read_to_string(records).unwrap();
    let clouds = std::fs::read_to_string(clouds).unwrap();
    let header: Vec<&str> = records.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 3 + STATE_SLOTS + PARAM_SLOTS);
    assert_eq!(header[3], "base_position_0");
    assert_eq!(records.lines().count(), 1 + 6);
    assert_eq!(clouds.lines().count(), 1 + 6 * 4);
    let row: Vec<&str> = records.lines().nth(4).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["1", "1001", "0"]);
    assert_eq!(row[3].parse::<f32>().unwrap(), 100.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn any_single_byte_flip_is_detected(pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let bytes = synthetic(2, 3).to_bytes().unwrap();
        let mut bad = bytes.clone();
        let i = pos.index(bad.len());
        bad[i] ^= 1 << bit;
        prop_assert!(Dataset::from_bytes(&bad).is_err(), "flip at byte {} went unnoticed", i);
    }
}
