//! Closed-loop stepping on the LIP itself.
//!
//! Every control tick: advance the gait clock, transfer support to the swing target
//! at a step boundary, (re)plan the swing target, move it onto steppable ground,
//! then propagate the CoM analytically over the tick. Swing dynamics are not
//! modelled; support transfers instantaneously.
//!
//! On a heightmap the plant keeps its base at the commanded height above the ground
//! under the CoM, while the planner assumes a constant height above the stance foot.
//! The mismatch is what per-tick replanning corrects for. On flat ground the two
//! coincide and the simulated touchdowns equal the plans exactly.

use std::sync::Arc;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::gait::{GaitParams, GaitState, CONTROL_TICK};
use crate::lip::{com_trajectory, icp_of, FootPosition, IcpPoint, LipParams, LipState, Vec2, GRAVITY};
use crate::planner::{plan_step_with, turning_angle, OffsetHorizon, PlannedStep, StepCommand, ZERO_SPEED};
use crate::terrain::{generate, Extent, FootholdCriteria, Heightmap, TerrainSpec};

pub const BASE_HEIGHT: f64 = 0.62;
pub const REACH_LIMIT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplanMode {
    /// Plan once per step, when `t = 0` and `dT = Ts`.
    #[serde(rename = "step-start")]
    AtStepStart,
    /// Re-predict the final ICP from the live state every tick; offsets sized for a full step.
    EveryTick,
    /// Every tick with step length, width and offsets all sized by the live `dT`.
    EveryTickLiteral,
}

impl ReplanMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReplanMode::AtStepStart => "step-start",
            ReplanMode::EveryTick => "every-tick",
            ReplanMode::EveryTickLiteral => "every-tick-literal",
        }
    }

    fn horizon(&self) -> OffsetHorizon {
        match self {
            ReplanMode::EveryTick => OffsetHorizon::FullStep,
            _ => OffsetHorizon::Remaining,
        }
    }
}

impl std::str::FromStr for ReplanMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "step-start" => Ok(ReplanMode::AtStepStart),
            "every-tick" => Ok(ReplanMode::EveryTick),
            "every-tick-literal" => Ok(ReplanMode::EveryTickLiteral),
            _ => Err(format!("unknown replan mode {s:?} (step-start | every-tick | every-tick-literal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terrain {
    Flat,
    Map(Arc<Heightmap>),
}

impl Terrain {
    pub fn height_at(&self, p: Vec2) -> Result<f64> {
        match self {
            Terrain::Flat => Ok(0.0),
            Terrain::Map(map) => map.height_at(p),
        }
    }

    pub fn is_steppable(&self, p: Vec2, criteria: &FootholdCriteria) -> bool {
        match self {
            Terrain::Flat => true,
            Terrain::Map(map) => map.is_steppable(p, criteria.radius, criteria.max_deviation),
        }
    }

    /// Move a planned step onto the nearest steppable ground and set its elevation.
    pub fn adjust(&self, step: &PlannedStep, criteria: &FootholdCriteria) -> Result<PlannedStep> {
        match self {
            Terrain::Flat => Ok(PlannedStep { z: 0.0, ..*step }),
            Terrain::Map(map) => {
                let position = map.nearest_steppable(step.position, criteria)?;
                Ok(PlannedStep {
                    position,
                    z: map.height_at(position)?,
                    ..*step
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandSwitch {
    pub time: f64,
    pub cmd: StepCommand,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cmd: StepCommand,
    pub gait: GaitParams,
    /// Pendulum parameters over flat ground; the pendulum height is the commanded base height.
    pub lip: LipParams,
    pub dt: f64,
    pub total_duration: f64,
    pub replan: ReplanMode,
    pub terrain: Terrain,
    pub foothold: FootholdCriteria,
    pub reach_limit: f64,
    pub command_switch: Option<CommandSwitch>,
}

impl SimConfig {
    /// Defaults: 0.35 s steps, 0.62 m base height, 100 Hz ticks, 10 s, flat ground.
    pub fn new(cmd: StepCommand) -> Self {
        Self {
            cmd,
            gait: GaitParams::default(),
            lip: LipParams::new(GRAVITY, BASE_HEIGHT).expect("default pendulum parameters are valid"),
            dt: CONTROL_TICK,
            total_duration: 10.0,
            replan: ReplanMode::AtStepStart,
            terrain: Terrain::Flat,
            foothold: FootholdCriteria::default(),
            reach_limit: REACH_LIMIT,
            command_switch: None,
        }
    }

    pub fn base_height(&self) -> f64 {
        self.lip.pendulum_height()
    }

    pub fn tick_count(&self) -> u64 {
        (self.total_duration / self.dt).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        self.gait.ticks_per_step(self.dt)?;
        positive("total duration", self.total_duration)?;
        positive("reach limit", self.reach_limit)?;
        positive("foothold radius", self.foothold.radius)?;
        positive("foothold deviation", self.foothold.max_deviation)?;
        Ok(())
    }

    /// Planner-side pendulum for a stance foot at height `z`.
    fn model_params(&self, stance_z: f64) -> Result<LipParams> {
        LipParams::for_stance(self.lip.gravity(), self.base_height(), stance_z)
    }

    fn command_at(&self, time: f64) -> StepCommand {
        match self.command_switch {
            Some(switch) if time >= switch.time - 1e-9 => switch.cmd,
            _ => self.cmd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub state: LipState,
    pub stance: FootPosition,
}

impl InitialCondition {
    /// CoM at rest above the midpoint between the feet, right foot in stance.
    pub fn standing(config: &SimConfig) -> Result<Self> {
        let half_width = 0.5 * config.cmd.step_width;
        let right = Vec2::new(0.0, -half_width);
        let z = config.terrain.height_at(right)?;
        Ok(Self {
            state: LipState::at_rest(Vec2::zeros(), config.model_params(z)?),
            stance: FootPosition { p: right, z },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub com_pos: Vec2,
    pub com_vel: Vec2,
    pub icp: IcpPoint,
    pub stance: FootPosition,
    pub target: PlannedStep,
    pub parity: u64,
    pub contact_schedule: f64,
    pub phase_sin: f64,
    pub phase_cos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub time: f64,
    /// Planner output before terrain adjustment.
    pub planned: PlannedStep,
    /// Where the foot actually landed.
    pub realized: FootPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FailureReason {
    /// ICP or CoM too far from the new stance foot at touchdown.
    Reach { icp_distance: f64, com_distance: f64, limit: f64 },
    /// No steppable ground near the planned step.
    Snapping { x: f64, y: f64 },
    /// The CoM left the heightmap or the stance is at/above the base height.
    Terrain { message: String },
    NonFinite,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::Reach {
                icp_distance,
                com_distance,
                limit,
            } => write!(
                f,
                "reach exceeded at touchdown (icp {icp_distance:.4} m, com {com_distance:.4} m, limit {limit} m)"
            ),
            FailureReason::Snapping { x, y } => write!(f, "no steppable ground near ({x:.4}, {y:.4})"),
            FailureReason::Terrain { message } => write!(f, "terrain: {message}"),
            FailureReason::NonFinite => write!(f, "non-finite state"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    Failed { reason: FailureReason, time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub samples: Vec<TrajectorySample>,
    pub outcome: Outcome,
    pub step_events: Vec<StepEvent>,
}

impl SimResult {
    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    /// Mean CoM velocity between the first and last samples inside `[t0, t1]`,
    /// from their displacement.
    pub fn mean_velocity(&self, t0: f64, t1: f64) -> Option<Vec2> {
        let mut inside = self
            .samples
            .iter()
            .filter(|s| s.time >= t0 - 1e-9 && s.time <= t1 + 1e-9);
        let first = inside.next()?;
        let last = inside.last()?;
        let span = last.time - first.time;
        (span > 0.0).then(|| (last.com_pos - first.com_pos) / span)
    }

    /// Samples taken at step starts (`t = 0`), in order.
    pub fn step_starts(&self) -> impl Iterator<Item = &TrajectorySample> {
        let mut last_parity = None;
        self.samples.iter().filter(move |s| {
            let start = last_parity != Some(s.parity);
            last_parity = Some(s.parity);
            start
        })
    }
}

fn fail(samples: Vec<TrajectorySample>, step_events: Vec<StepEvent>, reason: FailureReason, time: f64) -> SimResult {
    debug!("simulation failed at t = {time:.2} s: {reason}");
    SimResult {
        samples,
        outcome: Outcome::Failed { reason, time },
        step_events,
    }
}

/// Simulate the closed loop. Invalid configurations are errors; falling is an outcome.
pub fn run(config: &SimConfig, initial: &InitialCondition) -> Result<SimResult> {
    config.validate()?;
    let ticks = config.tick_count();
    let dt = config.dt;

    let mut samples = Vec::with_capacity(ticks as usize);
    let mut step_events = Vec::new();
    let mut gait = GaitState::start(config.gait);
    let mut stance = initial.stance;
    let mut model = config.model_params(stance.z)?;
    let mut state = initial.state.with_params(model);
    if !state.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let mut heading = turning_angle(&config.cmd);
    // (planner output, terrain-adjusted target)
    let mut target: Option<(PlannedStep, PlannedStep)> = None;

    for k in 0..ticks {
        let time = k as f64 * dt;

        if k > 0 {
            let (next, boundary) = gait.advance(dt)?;
            gait = next;
            if boundary {
                let (planned, landed) = target.take().expect("a target is planned every step");
                stance = landed.foot();
                model = match config.model_params(stance.z) {
                    Ok(p) => p,
                    Err(e) => {
                        let reason = FailureReason::Terrain { message: e.to_string() };
                        return Ok(fail(samples, step_events, reason, time));
                    }
                };
                state = state.with_params(model);
                step_events.push(StepEvent {
                    time,
                    planned,
                    realized: stance,
                });
                let icp_distance = (icp_of(&state).xi - stance.p).norm();
                let com_distance = (state.com_pos - stance.p).norm();
                if icp_distance > config.reach_limit || com_distance > config.reach_limit {
                    let reason = FailureReason::Reach {
                        icp_distance,
                        com_distance,
                        limit: config.reach_limit,
                    };
                    return Ok(fail(samples, step_events, reason, time));
                }
            }
        }

        let cmd = config.command_at(time);
        if cmd.speed() >= ZERO_SPEED {
            heading = turning_angle(&cmd);
        }
        let cmd = cmd.with_fallback_heading(heading);

        if target.is_none() || config.replan != ReplanMode::AtStepStart {
            let plan = plan_step_with(&state, &stance, &cmd, &gait, config.replan.horizon());
            match config.terrain.adjust(&plan.step, &config.foothold) {
                Ok(adjusted) => target = Some((plan.step, adjusted)),
                Err(_) => {
                    let p = plan.step.position;
                    return Ok(fail(samples, step_events, FailureReason::Snapping { x: p.x, y: p.y }, time));
                }
            }
        }
        let (_, landing) = target.expect("planned above");

        let (phase_sin, phase_cos) = gait.phase_clock();
        samples.push(TrajectorySample {
            time,
            com_pos: state.com_pos,
            com_vel: state.com_vel,
            icp: icp_of(&state),
            stance,
            target: landing,
            parity: gait.parity(),
            contact_schedule: gait.contact_schedule(),
            phase_sin,
            phase_cos,
        });

        let plant = match &config.terrain {
            Terrain::Flat => model,
            Terrain::Map(map) => {
                let under_com = map.height_at(state.com_pos);
                match under_com.and_then(|h| config.model_params(stance.z - h)) {
                    Ok(p) => p,
                    Err(e) => {
                        let reason = FailureReason::Terrain { message: e.to_string() };
                        return Ok(fail(samples, step_events, reason, time));
                    }
                }
            }
        };
        state = com_trajectory(&state.with_params(plant), &stance, dt)?.with_params(model);
        if !state.is_finite() {
            return Ok(fail(samples, step_events, FailureReason::NonFinite, time));
        }
    }

    Ok(SimResult {
        samples,
        outcome: Outcome::Completed,
        step_events,
    })
}

/// Walk with `config.cmd`, then switch to the same command rotated by `turn_angle`
/// at `switch_time`.
pub fn turn_maneuver(config: &SimConfig, turn_angle: f64, switch_time: f64) -> Result<SimResult> {
    let config = SimConfig {
        command_switch: Some(CommandSwitch {
            time: switch_time,
            cmd: config.cmd.rotated(turn_angle),
        }),
        ..config.clone()
    };
    run(&config, &InitialCondition::standing(&config)?)
}

/// Windowed forward-velocity success test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    /// Length of the final window (s).
    pub window: f64,
    /// Relative tolerance on the windowed mean forward velocity.
    pub tolerance: f64,
}

impl Default for SuccessCriterion {
    fn default() -> Self {
        Self {
            window: 5.0,
            tolerance: 0.1,
        }
    }
}

/// Completed run whose mean forward velocity over the final window is within
/// tolerance of `vx_cmd` (relative, or absolute m/s for a zero command).
pub fn success_metric(result: &SimResult, vx_cmd: f64, criterion: &SuccessCriterion) -> bool {
    if !result.completed() {
        return false;
    }
    let Some(end) = result.samples.last().map(|s| s.time) else {
        return false;
    };
    let Some(mean) = result.mean_velocity(end - criterion.window, end) else {
        return false;
    };
    let allowed = if vx_cmd.abs() < ZERO_SPEED {
        criterion.tolerance
    } else {
        criterion.tolerance * vx_cmd.abs()
    };
    (mean.x - vx_cmd).abs() <= allowed
}

/// Region a run with this command can cover, with margin for the first lateral step.
pub fn terrain_extent(config: &SimConfig) -> Extent {
    let travel = config.cmd.velocity * config.total_duration;
    Extent::new(
        -1.5 + travel.x.min(0.0),
        1.5 + travel.x.max(0.0),
        -1.5 + travel.y.min(0.0),
        1.5 + travel.y.max(0.0),
    )
}

pub const TERRAIN_RESOLUTION: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub label: String,
    /// Run configuration; its terrain is replaced per trial.
    pub config: SimConfig,
    pub terrain: TerrainSpec,
    pub success: SuccessCriterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub replan: ReplanMode,
    pub vx: f64,
    pub terrain: String,
    pub severity: f64,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
}

/// Build the terrain a trial runs on. Rough terrain is reseeded with `seed + trial`.
pub fn trial_terrain(case: &SweepCase, seed: u64, trial: u64) -> Result<Terrain> {
    match case.terrain {
        TerrainSpec::Flat => Ok(Terrain::Flat),
        spec => {
            let spec = spec.reseeded(seed.wrapping_add(trial));
            let map = generate(&spec, &terrain_extent(&case.config), TERRAIN_RESOLUTION)?;
            Ok(Terrain::Map(Arc::new(map)))
        }
    }
}

/// Run one trial of a case and score it.
pub fn run_trial(case: &SweepCase, seed: u64, trial: u64) -> Result<bool> {
    let config = SimConfig {
        terrain: trial_terrain(case, seed, trial)?,
        ..case.config.clone()
    };
    let result = run(&config, &InitialCondition::standing(&config)?)?;
    Ok(success_metric(&result, config.cmd.velocity.x, &case.success))
}

/// Success fraction per case over `trials` independent terrains. Runs in parallel;
/// the table is identical for identical inputs. No trials, no rows.
pub fn sweep(cases: &[SweepCase], trials: u64, seed: u64) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Ok(Vec::new());
    }
    let jobs: Vec<(usize, u64)> = (0..cases.len()).flat_map(|c| (0..trials).map(move |t| (c, t))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(c, t)| run_trial(&cases[c], seed, t))
        .collect::<Result<Vec<bool>>>()?;

    Ok(cases
        .iter()
        .zip(outcomes.chunks(trials as usize))
        .map(|(case, results)| {
            let successes = results.iter().filter(|ok| **ok).count() as u64;
            SweepRow {
                label: case.label.clone(),
                replan: case.config.replan,
                vx: case.config.cmd.velocity.x,
                terrain: case.terrain.to_string(),
                severity: case.terrain.severity(),
                trials,
                successes,
                success_rate: successes as f64 / trials as f64,
            }
        })
        .collect())
}
