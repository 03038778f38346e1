use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use liprint::io::{read_joint_log, read_trajectory, write_joint_log, JointLogRow};
use liprint::metrics::JointSample;
use nalgebra::Vector3;
use serde_json::Value;

fn liprint(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liprint"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_trajectory_events_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = liprint(&["simulate", "--vx", "1.0", "--duration", "10", "--out", "t.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));

    let events = json(&dir.path().join("t.events.json"));
    assert_eq!(events.as_array().unwrap().len(), 28);
    let manifest = json(&dir.path().join("t.manifest.json"));
    assert_eq!(manifest["outcome"]["status"], "completed");
    assert_eq!(manifest["samples"], 1000);
    assert_eq!(manifest["args"]["vx"], 1.0);
    assert_eq!(manifest["artifacts"]["trajectory"], "t.csv");
}

#[test]
fn impassable_gap_exits_two_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let o = liprint(&["simulate", "--vx", "1.0", "--terrain", "gap:2.0:0.1", "--out", "g.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let manifest = json(&dir.path().join("g.manifest.json"));
    assert_eq!(manifest["outcome"]["status"], "failed");
    assert_eq!(manifest["outcome"]["reason"]["kind"], "snapping");
    let text = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",1")));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["simulate"][..],
        &["simulate", "--vx", "fast"],
        &["simulate", "--vx", "1", "--terrain", "hills"],
        &["simulate", "--vx", "1", "--dt", "0.03"],
        &["simulate", "--vx", "1", "--terrain", "file:missing.json"],
        &["plan", "--vx", "1", "--state", "{bad json"],
        &["plan", "--vx", "1", "--state", r#"{"com_pos":[0,0],"extra":1}"#],
        &["nonsense"],
    ] {
        let o = liprint(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(liprint(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn plan_reports_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let o = liprint(&["plan", "--vx", "1.0"], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let bx = v["offsets"]["bx"].as_f64().unwrap();
    let by = v["offsets"]["by"].as_f64().unwrap();
    assert!((bx - 0.11575000790716593).abs() < 1e-12);
    assert!((by - 0.05971625353014123).abs() < 1e-12);
    assert_eq!(v["xi0"], serde_json::json!([0.0, 0.0]));
    assert!(v["xi_final"].is_array() && v["step"]["position"].is_array());

    let o = liprint(&["plan", "--vx", "0", "--state", r#"{"com_pos":[0.1,0.0],"stance":[0,-0.15,0]}"#], dir.path());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["offsets"]["bx"], 0.0);
}

#[test]
fn score_round_trip_and_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(liprint(&["simulate", "--vx", "0.8", "--duration", "2", "--out", "t.csv"], d).status.success());
    let o = liprint(&["score", "--trajectory", "t.csv", "--vx", "0.8", "--out", "r.csv"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rewards = fs::read_to_string(d.join("r.csv")).unwrap();
    let samples = read_trajectory(fs::File::open(d.join("t.csv")).unwrap()).unwrap();
    assert_eq!(rewards.lines().count(), samples.len() + 1);
    assert!(rewards.lines().next().unwrap().ends_with("termination,total"));

    fs::write(d.join("empty.csv"), "").unwrap();
    let o = liprint(&["score", "--trajectory", "empty.csv", "--vx", "1"], d);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());

    fs::write(d.join("bad.csv"), "time,com_x,com_y\n0,0,0\n").unwrap();
    assert_eq!(liprint(&["score", "--trajectory", "bad.csv", "--vx", "1"], d).status.code(), Some(1));
}

#[test]
fn score_with_joint_log() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(liprint(&["simulate", "--vx", "1.0", "--duration", "0.05", "--out", "t.csv"], d).status.success());
    let rows: Vec<JointLogRow> = (0..5)
        .map(|k| JointLogRow {
            time: k as f64 * 0.01,
            base_z: if k == 4 { 0.25 } else { 0.62 },
            base_heading: 0.0,
            base_vel_z: 0.0,
            angular_velocity: Vector3::zeros(),
            gravity: Vector3::new(0.0, 0.0, -1.0),
            self_collision: false,
            joints: JointSample {
                q: vec![0.0; 10],
                dq: vec![0.0; 10],
                tau: vec![10.0; 10],
                action: vec![0.0; 10],
                action_prev: vec![0.0; 10],
                action_prev2: vec![0.0; 10],
                hip: vec![0.0; 4],
            },
        })
        .collect();
    let mut buf = Vec::new();
    write_joint_log(&mut buf, &rows).unwrap();
    assert_eq!(read_joint_log(&buf[..]).unwrap().len(), 5);
    fs::write(d.join("joints.csv"), &buf).unwrap();

    let o = liprint(&["score", "--trajectory", "t.csv", "--joint-log", "joints.csv", "--vx", "1"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let field = |line: &str, name: &str| line.split(',').nth(col(name)).unwrap().parse::<f64>().unwrap();
    assert!((field(lines[1], "joint_torques") + 1e-4 * 1000.0).abs() < 1e-12);
    assert_eq!(field(lines[1], "termination"), 0.0);
    assert_eq!(field(lines[5], "termination"), -100.0);

    fs::write(d.join("short.csv"), &buf[..buf.len() / 2]).unwrap();
    let o = liprint(&["score", "--trajectory", "t.csv", "--joint-log", "short.csv", "--vx", "1"], d);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = liprint(&["sweep", "--trials", "0"], dir.path());
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1);

    let o = liprint(&["sweep", "--vx", "0.5,1.0,1.5,2.0", "--trials", "1"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",1,1,1.0000000000000000e0")));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.cfg"), "vx = 0.5\nduration = 1\n# comment\nout = c.csv\n").unwrap();
    let o = liprint(&["simulate", "--config", "run.cfg", "--duration", "2"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(d.join("c.csv")).unwrap().lines().count(), 201);
    assert_eq!(json(&d.join("c.manifest.json"))["args"]["vx"], 0.5);
}

#[test]
fn generated_heightmap_feeds_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = liprint(&["terrain", "gen", "--terrain", "rough:0.03:0.5:4", "--out", "map.json"], d);
    assert!(o.status.success());
    let map: liprint::terrain::Heightmap = serde_json::from_str(&fs::read_to_string(d.join("map.json")).unwrap()).unwrap();
    assert_eq!(map.cols(), 651);
    let o = Command::new(env!("CARGO_BIN_EXE_liprint"))
        .args(["simulate", "--vx", "1", "--terrain", "file:map.json", "--replan", "every-tick", "--out", "t.csv"])
        .env("LIPRINT_LOG", "debug")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
