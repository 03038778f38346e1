//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 simulated failure.
//!
//! `--config <file>` reads `key = value` lines and supplies `--key value` for any
//! flag not already on the command line.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gait::{GaitParams, GaitState, CONTROL_TICK, STEP_DURATION};
use crate::io;
use crate::lip::{FootPosition, LipParams, LipState, Vec2, GRAVITY};
use crate::metrics::{RewardParams, SIGMA};
use crate::planner::{plan_step_with, OffsetHorizon, OffsetVector, PlannedStep, StepCommand, STEP_WIDTH};
use crate::sim::{
    run, sweep, terrain_extent, CommandSwitch, InitialCondition, Outcome, ReplanMode, SimConfig, SuccessCriterion,
    SweepCase, Terrain, BASE_HEIGHT, REACH_LIMIT, TERRAIN_RESOLUTION,
};
use crate::terrain::{generate, Extent, FootholdCriteria, TerrainSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED_RUN: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "liprint", version, about = "LIP/ICP step pattern generation, simulation and reward scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one closed-loop simulation and write its trajectory.
    Simulate(SimulateArgs),
    /// Success rates over a grid of speeds, terrains and replanning modes.
    Sweep(SweepArgs),
    /// Plan a single step from a given state and print every intermediate.
    Plan(PlanArgs),
    /// Score a trajectory (and optional joint log) with the reward terms.
    Score(ScoreArgs),
    /// Heightmap utilities.
    #[command(subcommand)]
    Terrain(TerrainCommand),
}

#[derive(Debug, Subcommand)]
pub enum TerrainCommand {
    /// Generate a heightmap JSON file.
    Gen(TerrainGenArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = GRAVITY)]
    pub gravity: f64,
    /// Commanded base height above the stance foot (m).
    #[arg(long, default_value_t = BASE_HEIGHT)]
    pub base_height: f64,
    #[arg(long, default_value_t = STEP_DURATION)]
    pub step_duration: f64,
    /// Step width command (m).
    #[arg(long, default_value_t = STEP_WIDTH)]
    pub width: f64,
    /// Control tick (s).
    #[arg(long, default_value_t = CONTROL_TICK)]
    pub dt: f64,
}

impl ModelArgs {
    fn lip(&self) -> anyhow::Result<LipParams> {
        Ok(LipParams::new(self.gravity, self.base_height)?)
    }

    fn gait(&self) -> anyhow::Result<GaitParams> {
        Ok(GaitParams::new(self.step_duration)?)
    }

    fn command(&self, vx: f64, vy: f64) -> anyhow::Result<StepCommand> {
        Ok(StepCommand::new(Vec2::new(vx, vy), self.width)?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Forward velocity command (m/s).
    #[arg(long, allow_hyphen_values = true)]
    pub vx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub vy: f64,
    /// Simulated time (s).
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// flat | rough:<amp>:<corr>:<seed> | gap:<width>:<period>[:<offset>] | file:<path>
    #[arg(long, default_value = "flat")]
    pub terrain: String,
    /// step-start | every-tick | every-tick-literal
    #[arg(long, default_value = "step-start")]
    pub replan: ReplanMode,
    #[arg(long, default_value_t = REACH_LIMIT)]
    pub reach_limit: f64,
    /// Rotate the command by this many degrees at --turn-at.
    #[arg(long, allow_hyphen_values = true)]
    pub turn: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub turn_at: f64,
    /// Added to the seed of rough terrain.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Step-event JSON; defaults next to --out.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Run manifest JSON; defaults next to --out.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Comma-separated forward speeds.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.0,1.5,2.0", allow_hyphen_values = true)]
    pub vx: Vec<f64>,
    /// Comma-separated terrain specs.
    #[arg(long, value_delimiter = ',', default_value = "flat")]
    pub terrain: Vec<String>,
    /// Comma-separated replanning modes.
    #[arg(long, value_delimiter = ',', default_value = "step-start")]
    pub replan: Vec<ReplanMode>,
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// Added to the seed of rough terrain, together with the trial index.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Final window over which the mean forward speed is judged (s).
    #[arg(long, default_value_t = 5.0)]
    pub window: f64,
    /// Relative tolerance on the windowed mean speed.
    #[arg(long, default_value_t = 0.1)]
    pub tolerance: f64,
    #[arg(long, default_value_t = REACH_LIMIT)]
    pub reach_limit: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlanArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub vx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub vy: f64,
    /// JSON text or file: {"com_pos":[x,y],"com_vel":[vx,vy],"stance":[x,y,z]}.
    /// Defaults to rest above the origin with the right foot in stance.
    #[arg(long)]
    pub state: Option<String>,
    /// Time already spent in the step (s).
    #[arg(long, default_value_t = 0.0)]
    pub elapsed: f64,
    #[arg(long, default_value_t = 0)]
    pub parity: u64,
    /// Size the offsets for a full step instead of the remaining time.
    #[arg(long)]
    pub full_step_offsets: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Optional joint log with one row per trajectory row.
    #[arg(long)]
    pub joint_log: Option<PathBuf>,
    /// Commanded velocity the run was tracking.
    #[arg(long, allow_hyphen_values = true)]
    pub vx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub vy: f64,
    /// Commanded base heading; defaults to the direction of the command.
    #[arg(long, allow_hyphen_values = true)]
    pub heading: Option<f64>,
    #[arg(long, default_value_t = SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = BASE_HEIGHT)]
    pub base_height: f64,
    /// Torque limit applied to every joint.
    #[arg(long, default_value_t = 100.0)]
    pub tau_max: f64,
    /// Position limit applied to every joint.
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub q_max: f64,
    #[arg(long, default_value_t = CONTROL_TICK)]
    pub action_dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TerrainGenArgs {
    /// rough:<amp>:<corr>:<seed> | gap:<width>:<period>[:<offset>] | flat
    #[arg(long)]
    pub terrain: String,
    /// Added to the seed of rough terrain.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 11.5, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
    pub y_min: f64,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    pub y_max: f64,
    #[arg(long, default_value_t = TERRAIN_RESOLUTION)]
    pub resolution: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Terrain argument: a generator spec or a heightmap file.
#[derive(Debug, Clone, PartialEq)]
pub enum TerrainSource {
    Spec(TerrainSpec),
    File(PathBuf),
}

pub fn parse_terrain(s: &str) -> anyhow::Result<TerrainSource> {
    match s.strip_prefix("file:") {
        Some(path) if !path.is_empty() => Ok(TerrainSource::File(PathBuf::from(path))),
        Some(_) => bail!("file: terrain needs a path"),
        None => Ok(TerrainSource::Spec(s.parse()?)),
    }
}

/// Insert `--key value` pairs from the `--config` file for flags absent from `args`.
pub fn merge_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strings.iter().enumerate() {
        if a == "--config" {
            path = strings.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let present: HashSet<String> = strings
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();

    let mut merged = args;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{path}:{}: expected key = value", n + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            bail!("{path}:{}: nested config files are not supported", n + 1);
        }
        if !present.contains(&key) {
            merged.push(format!("--{key}").into());
            merged.push(value.trim().into());
        }
    }
    Ok(merged)
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("LIPRINT_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}

/// Parse and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match merge_config(args.into_iter().map(Into::into).collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        matches!(cause.downcast_ref::<Error>(), Some(Error::BrokenPipe))
            || cause
                .downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

pub fn execute(command: &Command) -> anyhow::Result<i32> {
    match command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args).map(|_| EXIT_OK),
        Command::Plan(args) => cmd_plan(args).map(|_| EXIT_OK),
        Command::Score(args) => cmd_score(args).map(|_| EXIT_OK),
        Command::Terrain(TerrainCommand::Gen(args)) => cmd_terrain_gen(args).map(|_| EXIT_OK),
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Everything needed to reproduce a `simulate` run.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub args: &'a SimulateArgs,
    pub seed: u64,
    pub terrain: String,
    pub artifacts: Artifacts,
    pub outcome: &'a Outcome,
    pub samples: usize,
    pub steps: usize,
}

#[derive(Debug, Serialize)]
pub struct Artifacts {
    pub trajectory: Option<PathBuf>,
    pub step_events: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

fn build_terrain(source: &TerrainSource, seed: u64, config: &SimConfig) -> anyhow::Result<(Terrain, String)> {
    Ok(match source {
        TerrainSource::Spec(TerrainSpec::Flat) => (Terrain::Flat, "flat".to_string()),
        TerrainSource::Spec(spec) => {
            let spec = spec.reseeded(seed);
            let map = generate(&spec, &terrain_extent(config), TERRAIN_RESOLUTION)?;
            (Terrain::Map(Arc::new(map)), spec.to_string())
        }
        TerrainSource::File(path) => {
            let map = io::load_heightmap(path)?;
            (Terrain::Map(Arc::new(map)), format!("file:{}", path.display()))
        }
    })
}

pub fn simulate_config(args: &SimulateArgs) -> anyhow::Result<(SimConfig, String)> {
    let cmd = args.model.command(args.vx, args.vy)?;
    let mut config = SimConfig {
        gait: args.model.gait()?,
        lip: args.model.lip()?,
        dt: args.model.dt,
        total_duration: args.duration,
        replan: args.replan,
        reach_limit: args.reach_limit,
        foothold: FootholdCriteria::default(),
        command_switch: args.turn.map(|deg| CommandSwitch {
            time: args.turn_at,
            cmd: cmd.rotated(deg.to_radians()),
        }),
        ..SimConfig::new(cmd)
    };
    let (terrain, label) = build_terrain(&parse_terrain(&args.terrain)?, args.seed, &config)?;
    config.terrain = terrain;
    config.validate()?;
    Ok((config, label))
}

pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<i32> {
    let (config, terrain) = simulate_config(args)?;
    let initial = InitialCondition::standing(&config)?;
    let result = run(&config, &initial)?;

    let events = args
        .events
        .clone()
        .or_else(|| args.out.as_ref().map(|p| sibling(p, "events.json")));
    let manifest = args
        .manifest
        .clone()
        .or_else(|| args.out.as_ref().map(|p| sibling(p, "manifest.json")));

    let mut w = output(args.out.as_deref())?;
    io::write_trajectory(&mut w, &result)?;
    w.flush()?;
    if let Some(path) = &events {
        io::save_json(path, &result.step_events)?;
    }
    if let Some(path) = &manifest {
        let m = RunManifest {
            tool: "liprint",
            version: env!("CARGO_PKG_VERSION"),
            command: "simulate",
            args,
            seed: args.seed,
            terrain,
            artifacts: Artifacts {
                trajectory: args.out.clone(),
                step_events: events.clone(),
                manifest: Some(path.clone()),
            },
            outcome: &result.outcome,
            samples: result.samples.len(),
            steps: result.step_events.len(),
        };
        io::save_json(path, &m)?;
    }

    match &result.outcome {
        Outcome::Completed => {
            info!("completed {} ticks, {} steps", result.samples.len(), result.step_events.len());
            Ok(EXIT_OK)
        }
        Outcome::Failed { reason, time } => {
            eprintln!("simulation failed at t = {time:.2} s: {reason}");
            Ok(EXIT_FAILED_RUN)
        }
    }
}

pub fn sweep_cases(args: &SweepArgs) -> anyhow::Result<Vec<SweepCase>> {
    let mut cases = Vec::new();
    for terrain in &args.terrain {
        let spec = match parse_terrain(terrain)? {
            TerrainSource::Spec(spec) => spec,
            TerrainSource::File(_) => bail!("sweep needs generated terrain, not {terrain}"),
        };
        for &vx in &args.vx {
            for &replan in &args.replan {
                let config = SimConfig {
                    gait: args.model.gait()?,
                    lip: args.model.lip()?,
                    dt: args.model.dt,
                    total_duration: args.duration,
                    replan,
                    reach_limit: args.reach_limit,
                    ..SimConfig::new(args.model.command(vx, 0.0)?)
                };
                config.validate()?;
                cases.push(SweepCase {
                    label: format!("{spec}@{vx}/{}", replan.as_str()),
                    config,
                    terrain: spec,
                    success: SuccessCriterion {
                        window: args.window,
                        tolerance: args.tolerance,
                    },
                });
            }
        }
    }
    Ok(cases)
}

pub fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    if args.window > args.duration {
        bail!("window {} s exceeds the run duration {} s", args.window, args.duration);
    }
    let cases = sweep_cases(args)?;
    let rows = sweep(&cases, args.trials, args.seed)?;
    let mut w = output(args.out.as_deref())?;
    io::write_sweep(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanState {
    com_pos: [f64; 2],
    #[serde(default)]
    com_vel: [f64; 2],
    stance: Option<[f64; 3]>,
}

/// Output of `plan`.
#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub xi0: [f64; 2],
    pub xi_final: [f64; 2],
    pub offsets: OffsetVector,
    pub step: PlannedStep,
    pub remaining_time: f64,
    pub omega0: f64,
    pub step_length: f64,
    pub step_width: f64,
}

pub fn cmd_plan(args: &PlanArgs) -> anyhow::Result<()> {
    let state = match &args.state {
        None => PlanState {
            com_pos: [0.0, 0.0],
            com_vel: [0.0, 0.0],
            stance: None,
        },
        Some(text) => {
            let json = if text.trim_start().starts_with('{') {
                text.clone()
            } else {
                fs::read_to_string(text).with_context(|| format!("reading state {text}"))?
            };
            serde_json::from_str(&json).context("malformed state JSON")?
        }
    };
    let [sx, sy, sz] = state.stance.unwrap_or([0.0, -0.5 * args.model.width, 0.0]);
    let stance = FootPosition::new(sx, sy, sz);
    let lip = LipParams::for_stance(args.model.gravity, args.model.base_height, sz)?;
    let lip_state = LipState::new(
        Vec2::from(state.com_pos),
        Vec2::from(state.com_vel),
        lip,
    )?;
    let gait = GaitState::at(args.model.gait()?, args.elapsed, args.parity)?;
    let cmd = args.model.command(args.vx, args.vy)?;
    let horizon = if args.full_step_offsets {
        OffsetHorizon::FullStep
    } else {
        OffsetHorizon::Remaining
    };
    let plan = plan_step_with(&lip_state, &stance, &cmd, &gait, horizon);
    let report = PlanReport {
        xi0: plan.icp_initial.xi.into(),
        xi_final: plan.icp_final.xi.into(),
        offsets: plan.offsets,
        step: plan.step,
        remaining_time: plan.remaining_time,
        omega0: plan.omega0,
        step_length: plan.step_length,
        step_width: plan.step_width,
    };
    let mut w = output(args.out.as_deref())?;
    io::write_json(&mut w, &report)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_score(args: &ScoreArgs) -> anyhow::Result<()> {
    let raw = fs::read(&args.trajectory).with_context(|| format!("reading {}", args.trajectory.display()))?;
    let mut w = output(args.out.as_deref())?;
    if raw.iter().all(u8::is_ascii_whitespace) {
        w.flush()?;
        return Ok(());
    }
    let rows = io::read_trajectory(&raw[..]).with_context(|| format!("in {}", args.trajectory.display()))?;
    let log = match &args.joint_log {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
            Some(io::read_joint_log(file).with_context(|| format!("in {}", path.display()))?)
        }
        None => None,
    };
    let joints = log.as_ref().and_then(|l| l.first()).map_or(0, |r| r.joints.len());
    let velocity = Vec2::new(args.vx, args.vy);
    let params = RewardParams {
        sigma: args.sigma,
        base_height: args.base_height,
        heading: args.heading.unwrap_or_else(|| velocity.y.atan2(velocity.x)),
        action_dt: args.action_dt,
        ..RewardParams::for_command(velocity)
    }
    .with_uniform_limits(joints, args.tau_max, args.q_max);
    let rewards = io::score_rows(&rows, log.as_deref(), &params)?;
    let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
    io::write_rewards(&mut w, &times, &rewards)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_terrain_gen(args: &TerrainGenArgs) -> anyhow::Result<()> {
    let spec = match parse_terrain(&args.terrain)? {
        TerrainSource::Spec(spec) => spec.reseeded(args.seed),
        TerrainSource::File(_) => bail!("terrain gen needs a generator spec"),
    };
    let extent = Extent::new(args.x_min, args.x_max, args.y_min, args.y_max);
    let map = generate(&spec, &extent, args.resolution)?;
    let mut w = output(args.out.as_deref())?;
    serde_json::to_writer(&mut w, &map)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
