use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use pedi::report::parse_table;
use pedi::teleop::{read_frame, Message};

const SAMPLE: &str = "\
flag 0
frame world
p0 0.30 0.10 0.05
p1 0.35 0.12 0.10
p2 0.40 0.14 0.15
p3 0.45 0.16 0.20
p4 0.50 0.18 0.25
p5 0.55 0.20 0.30
p6 0.60 0.22 0.35
weights 1 2 3 4 3 2 1
orientation_start 1 0 0 0
orientation_end 0.7071 0 0.7071 0
";

fn pedi() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pedi"));
    for (k, _) in std::env::vars() {
        if k.starts_with("PEDI_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    pedi().args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write_sample(dir: &Path) -> String {
    let p = dir.join("curve.txt");
    std::fs::write(&p, SAMPLE).unwrap();
    p.display().to_string()
}

#[test]
fn eval_curve_prints_the_endpoints_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path());
    let out = run(&["eval-curve", &path, "--t", "0,0.5,1", "--oracle", "--csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "t,x,y,z,qw,qx,qy,qz,oracle_x,oracle_y,oracle_z");
    assert_eq!(lines.len(), 4);
    let rows: Vec<Vec<f64>> = lines[1..]
        .iter()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(&rows[0][1..4], &[0.30, 0.10, 0.05]);
    assert_eq!(&rows[0][4..8], &[1.0, 0.0, 0.0, 0.0]);
    assert_eq!(&rows[2][1..4], &[0.60, 0.22, 0.35]);
    for r in &rows {
        for k in 0..3 {
            assert!((r[1 + k] - r[8 + k]).abs() < 1e-9);
        }
    }
}

#[test]
fn eval_curve_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path());
    let out = run(&["eval-curve", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "t x y z qw qx qy qz\n");

    let out = run(&["eval-curve", &path, "--t", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("outside [0, 1]"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, SAMPLE.replace("p4 0.50 0.18 0.25", "p4 0.50 0.18")).unwrap();
    let out = run(&["eval-curve", bad.to_str().unwrap(), "--t", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("bad.txt:7:") && err.contains("p4 expects 3"), "{err}");

    let out = run(&["eval-curve", "/nonexistent/curve.txt", "--t", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_task_lists_the_nine_names() {
    let out = run(&["collect", "--task", "juggle", "-n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    for name in [
        "press_button",
        "pull_handle",
        "push_door",
        "lift_basket",
        "open_dishwasher",
        "close_dishwasher",
        "pull_objects",
        "twist_valve",
        "shoot_ball",
    ] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn collect_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for workers in ["1", "3"] {
        let path = dir.path().join(format!("w{workers}.pdset"));
        let out = run(&[
            "--seed",
            "9",
            "collect",
            "--task",
            "pull_handle",
            "-n",
            "3",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        let stdout = text(&out.stdout);
        assert!(stdout.contains("pull_handle: 3 trajectories x 200 records"), "{stdout}");
        let line = stdout.lines().find(|l| l.starts_with("body sha256: ")).unwrap();
        hashes.push(line.to_string());
        let ds = pedi::dataset::Dataset::load(&path).unwrap();
        assert_eq!(ds.header.seed, 9);
    }
    assert_eq!(hashes[0], hashes[1]);
    assert_eq!(
        std::fs::read(dir.path().join("w1.pdset")).unwrap(),
        std::fs::read(dir.path().join("w3.pdset")).unwrap()
    );

    let out = run(&["export", dir.path().join("w1.pdset").to_str().unwrap(), "--out", dir.path().join("csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let records = std::fs::read_to_string(dir.path().join("csv/records.csv")).unwrap();
    assert_eq!(records.lines().count(), 601);
}

#[test]
fn eval_tracking_writes_a_parseable_table() {
    let out = run(&["eval-tracking", "--task", "press_button", "--runs", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("track.txt");
    let out = run(&["eval-tracking", "--task", "close_dishwasher", "--runs", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("converged within 3.0 s"), "{stdout}");
    assert!(stdout.contains("learned policy reference 0.4 rad"), "{stdout}");
    let rows = parse_table(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows[0].tick, 0);
    assert!((rows[999].time - 19.98).abs() < 1e-9);
    assert!(rows.iter().all(|r| r.pos_mean >= 0.0 && r.pos_std >= 0.0));
}

#[test]
fn help_and_bad_flags() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let help = text(&out.stdout);
    for cmd in ["eval-curve", "collect", "eval-tracking", "serve", "export", "config"] {
        assert!(help.contains(cmd), "{help}");
    }
    let out = run(&["collect", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn configuration_precedence_and_suggestions() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("pedi.toml");
    std::fs::write(&file, "[controller]\nkp = 11.0\nkd = 0.7\n").unwrap();
    let value = |stdout: &str, section: &str, key: &str| -> f64 {
        let mut in_section = false;
        for line in stdout.lines() {
            if line.starts_with('[') {
                in_section = line == format!("[{section}]");
            } else if in_section {
                if let Some((k, v)) = line.split_once('=') {
                    if k.trim() == key {
                        return v.trim().parse().unwrap();
                    }
                }
            }
        }
        panic!("{section}.{key} missing from\n{stdout}")
    };

    let out = pedi().args(["--config", file.to_str().unwrap(), "config"]).output().unwrap();
    let s = text(&out.stdout);
    assert_eq!((value(&s, "controller", "kp"), value(&s, "controller", "kd")), (11.0, 0.7));

    let out = pedi()
        .args(["--config", file.to_str().unwrap(), "config"])
        .env("PEDI_CONTROLLER__KP", "22")
        .output()
        .unwrap();
    let s = text(&out.stdout);
    assert_eq!((value(&s, "controller", "kp"), value(&s, "controller", "kd")), (22.0, 0.7));

    let out = pedi()
        .args(["--config", file.to_str().unwrap(), "--set", "controller.kp=33", "config"])
        .env("PEDI_CONTROLLER__KP", "22")
        .output()
        .unwrap();
    assert_eq!(value(&text(&out.stdout), "controller", "kp"), 33.0);

    let out = run(&["--set", "controler.kp=1", "config"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("controller.kp"), "{}", text(&out.stderr));

    let out = pedi().arg("config").env("PEDI_CONFIG", dir.path().join("missing.toml")).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[cfg(unix)]
#[test]
fn serve_greets_a_client_and_stops_on_interrupt() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = pedi()
        .args(["serve", "--task", "push_door", "--port", "0", "--out"])
        .arg(dir.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut line = String::new();
    stdout.read_line(&mut line).unwrap();
    let addr = line.trim().rsplit(' ').next().unwrap().to_string();
    assert!(line.starts_with("serving push_door on "), "{line}");

    let mut stream = std::net::TcpStream::connect(&addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    let hello = read_frame(&mut stream).unwrap().unwrap();
    assert!(matches!(hello.message, Message::Hello { ref task, .. } if task == "push_door"));
    let frame = read_frame(&mut stream).unwrap().unwrap();
    assert!(matches!(frame.message, Message::State(_)));
    drop(stream);

    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let mut rest = String::new();
    std::io::Read::read_to_string(&mut stdout, &mut rest).unwrap();
    assert!(rest.contains("stopped push_door-"), "{rest}");
}
