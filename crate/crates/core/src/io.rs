//! File formats: trajectory and reward CSV, joint logs, step-event and heightmap JSON.
//!
//! Floats are written with 17 significant digits in scientific notation, so a file
//! read back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lip::Vec2;
use crate::metrics::{total_reward_at, FootSample, FootTargets, JointSample, RewardBreakdown, RewardParams, RobotSample, TERM_NAMES};
use crate::sim::{SimResult, StepEvent, SweepRow, TrajectorySample};
use crate::terrain::Heightmap;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRAJECTORY_HEADER: [&str; 19] = [
    "time",
    "com_x",
    "com_y",
    "vel_x",
    "vel_y",
    "icp_x",
    "icp_y",
    "stance_x",
    "stance_y",
    "stance_z",
    "target_x",
    "target_y",
    "target_z",
    "target_heading",
    "parity",
    "contact_schedule",
    "phase_sin",
    "phase_cos",
    "outcome_flag",
];

/// One trajectory CSV row. `outcome_flag` is the run outcome, 0 completed, 1 failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub com_x: f64,
    pub com_y: f64,
    pub vel_x: f64,
    pub vel_y: f64,
    pub icp_x: f64,
    pub icp_y: f64,
    pub stance_x: f64,
    pub stance_y: f64,
    pub stance_z: f64,
    pub target_x: f64,
    pub target_y: f64,
    pub target_z: f64,
    pub target_heading: f64,
    pub parity: u64,
    pub contact_schedule: f64,
    pub phase_sin: f64,
    pub phase_cos: f64,
    pub outcome_flag: u8,
}

impl TrajectoryRow {
    pub fn from_sample(s: &TrajectorySample, outcome_flag: u8) -> Self {
        Self {
            time: s.time,
            com_x: s.com_pos.x,
            com_y: s.com_pos.y,
            vel_x: s.com_vel.x,
            vel_y: s.com_vel.y,
            icp_x: s.icp.xi.x,
            icp_y: s.icp.xi.y,
            stance_x: s.stance.p.x,
            stance_y: s.stance.p.y,
            stance_z: s.stance.z,
            target_x: s.target.position.x,
            target_y: s.target.position.y,
            target_z: s.target.z,
            target_heading: s.target.heading,
            parity: s.parity,
            contact_schedule: s.contact_schedule,
            phase_sin: s.phase_sin,
            phase_cos: s.phase_cos,
            outcome_flag,
        }
    }

    fn record(&self) -> Vec<String> {
        let f = fmt_f64;
        vec![
            f(self.time),
            f(self.com_x),
            f(self.com_y),
            f(self.vel_x),
            f(self.vel_y),
            f(self.icp_x),
            f(self.icp_y),
            f(self.stance_x),
            f(self.stance_y),
            f(self.stance_z),
            f(self.target_x),
            f(self.target_y),
            f(self.target_z),
            f(self.target_heading),
            self.parity.to_string(),
            f(self.contact_schedule),
            f(self.phase_sin),
            f(self.phase_cos),
            self.outcome_flag.to_string(),
        ]
    }
}

pub fn trajectory_rows(result: &SimResult) -> Vec<TrajectoryRow> {
    let flag = u8::from(!result.completed());
    result.samples.iter().map(|s| TrajectoryRow::from_sample(s, flag)).collect()
}

pub fn write_trajectory<W: Write>(writer: W, result: &SimResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for row in trajectory_rows(result) {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected columns {:?}; expected {:?}",
            headers.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

/// Read a trajectory CSV. Completely empty input yields no rows.
pub fn read_trajectory<R: Read>(reader: R) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    check_header(&headers, &TRAJECTORY_HEADER)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn write_step_events<W: Write>(writer: W, events: &[StepEvent]) -> Result<()> {
    write_json(writer, events)
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_json(&mut w, value)?;
    w.flush()?;
    Ok(())
}

pub fn load_heightmap(path: &Path) -> Result<Heightmap> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Scalar columns of a joint log; vector columns follow as `q.0`, `q.1`, ... for
/// each of [`JOINT_VECTORS`], then any number of `hip.i`.
pub const JOINT_LOG_SCALARS: [&str; 11] = [
    "time",
    "base_z",
    "base_heading",
    "base_vel_z",
    "ang_vel_x",
    "ang_vel_y",
    "ang_vel_z",
    "grav_x",
    "grav_y",
    "grav_z",
    "self_collision",
];

pub const JOINT_VECTORS: [&str; 6] = ["q", "dq", "tau", "act", "act_prev", "act_prev2"];

/// Robot-side quantities the LIP does not model, one per trajectory row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLogRow {
    pub time: f64,
    pub base_z: f64,
    pub base_heading: f64,
    pub base_vel_z: f64,
    pub angular_velocity: Vector3<f64>,
    pub gravity: Vector3<f64>,
    pub self_collision: bool,
    pub joints: JointSample,
}

/// Column layout for a joint log with `joints` joints and `hips` hip entries.
pub fn joint_log_header(joints: usize, hips: usize) -> Vec<String> {
    let mut header: Vec<String> = JOINT_LOG_SCALARS.iter().map(|s| s.to_string()).collect();
    for v in JOINT_VECTORS {
        header.extend((0..joints).map(|i| format!("{v}.{i}")));
    }
    header.extend((0..hips).map(|i| format!("hip.{i}")));
    header
}

pub fn write_joint_log<W: Write>(writer: W, rows: &[JointLogRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let (joints, hips) = rows.first().map_or((0, 0), |r| (r.joints.len(), r.joints.hip.len()));
    w.write_record(joint_log_header(joints, hips))?;
    for r in rows {
        let j = &r.joints;
        let mut record: Vec<String> = [
            r.time,
            r.base_z,
            r.base_heading,
            r.base_vel_z,
            r.angular_velocity.x,
            r.angular_velocity.y,
            r.angular_velocity.z,
            r.gravity.x,
            r.gravity.y,
            r.gravity.z,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect();
        record.push(u8::from(r.self_collision).to_string());
        for v in [&j.q, &j.dq, &j.tau, &j.action, &j.action_prev, &j.action_prev2, &j.hip] {
            record.extend(v.iter().map(|x| fmt_f64(*x)));
        }
        if record.len() != 11 + 6 * joints + hips {
            return Err(Error::DimensionMismatch {
                what: "joint log row",
                expected: 11 + 6 * joints + hips,
                got: record.len(),
            });
        }
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field(record: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    let raw = record.get(i).unwrap_or_default();
    raw.trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: bad number {raw:?}")))
}

pub fn read_joint_log<R: Read>(reader: R) -> Result<Vec<JointLogRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let joints = headers.iter().filter(|h| h.starts_with("q.")).count();
    let hips = headers.iter().filter(|h| h.starts_with("hip.")).count();
    check_header(
        &headers,
        &joint_log_header(joints, hips).iter().map(String::as_str).collect::<Vec<_>>(),
    )?;

    let mut rows = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record?;
        let line = k + 2;
        let v = |i: usize| parse_field(&record, i, line);
        let vector = |start: usize, len: usize| (start..start + len).map(v).collect::<Result<Vec<f64>>>();
        let base = JOINT_LOG_SCALARS.len();
        let vectors = (0..6)
            .map(|k| vector(base + k * joints, joints))
            .collect::<Result<Vec<_>>>()?;
        let [q, dq, tau, action, action_prev, action_prev2]: [Vec<f64>; 6] =
            vectors.try_into().expect("six joint vectors");
        rows.push(JointLogRow {
            time: v(0)?,
            base_z: v(1)?,
            base_heading: v(2)?,
            base_vel_z: v(3)?,
            angular_velocity: Vector3::new(v(4)?, v(5)?, v(6)?),
            gravity: Vector3::new(v(7)?, v(8)?, v(9)?),
            self_collision: v(10)? != 0.0,
            joints: JointSample {
                q,
                dq,
                tau,
                action,
                action_prev,
                action_prev2,
                hip: vector(base + 6 * joints, hips)?,
            },
        });
    }
    Ok(rows)
}

/// Robot sample for a trajectory row. The LIP holds its base at the commanded height
/// and faces the planned heading; the stance foot sits on its touchdown point and the
/// swing foot is taken to be at its target. A joint-log row supplies the rest.
pub fn robot_sample(row: &TrajectoryRow, joint: Option<&JointLogRow>, params: &RewardParams) -> (RobotSample, FootTargets) {
    let stance = Vec2::new(row.stance_x, row.stance_y);
    let swing = Vec2::new(row.target_x, row.target_y);
    // even parity: right stance
    let right_stance = row.parity % 2 == 0;
    let (right, left) = if right_stance { (stance, swing) } else { (swing, stance) };
    let mut sample = RobotSample {
        base_height: params.base_height,
        base_heading: row.target_heading,
        base_velocity: Vec2::new(row.vel_x, row.vel_y),
        base_velocity_z: 0.0,
        base_angular_velocity: Vector3::zeros(),
        gravity_projection: Vector3::new(0.0, 0.0, -1.0),
        joints: JointSample::default(),
        left: FootSample {
            position: left,
            contact: !right_stance,
        },
        right: FootSample {
            position: right,
            contact: right_stance,
        },
        self_collision: false,
    };
    if let Some(j) = joint {
        sample.base_height = j.base_z;
        sample.base_heading = j.base_heading;
        sample.base_velocity_z = j.base_vel_z;
        sample.base_angular_velocity = j.angular_velocity;
        sample.gravity_projection = j.gravity;
        sample.self_collision = j.self_collision;
        sample.joints = j.joints.clone();
    }
    (sample, FootTargets { left, right })
}

/// Score each trajectory row; a joint log, when given, must have one row per sample.
pub fn score_rows(
    rows: &[TrajectoryRow],
    joint_log: Option<&[JointLogRow]>,
    params: &RewardParams,
) -> Result<Vec<RewardBreakdown>> {
    if let Some(log) = joint_log {
        if log.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                what: "joint log rows",
                expected: rows.len(),
                got: log.len(),
            });
        }
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let (sample, targets) = robot_sample(row, joint_log.map(|log| &log[i]), params);
            total_reward_at(&sample, params, row.contact_schedule, &targets)
        })
        .collect()
}

pub fn reward_header() -> Vec<&'static str> {
    let mut header = vec!["time"];
    header.extend(TERM_NAMES);
    header.push("total");
    header
}

pub fn write_rewards<W: Write>(writer: W, times: &[f64], rewards: &[RewardBreakdown]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(reward_header())?;
    for (t, b) in times.iter().zip(rewards) {
        let mut record = vec![fmt_f64(*t)];
        record.extend(b.terms.iter().map(|term| fmt_f64(term.value)));
        record.push(fmt_f64(b.total));
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 8] = [
    "label",
    "replan",
    "vx",
    "terrain",
    "severity",
    "trials",
    "successes",
    "success_rate",
];

pub fn write_sweep<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.replan.as_str().to_string(),
            fmt_f64(r.vx),
            r.terrain.clone(),
            fmt_f64(r.severity),
            r.trials.to_string(),
            r.successes.to_string(),
            fmt_f64(r.success_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}
