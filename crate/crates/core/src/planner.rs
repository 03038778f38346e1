//! Step-pattern generation from the ICP dynamics.
//!
//! Given the current CoM state, stance foot, velocity command and the time left in
//! the step, the planner predicts the ICP at the end of the step and places the
//! swing foot a constant offset behind (and beside) it, so that the next step
//! advances the ICP by exactly the desired step length.

use std::f64::consts::PI;

use nalgebra::Rotation2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::GaitState;
use crate::lip::{icp_of, icp_trajectory, FootPosition, IcpPoint, LipState, Vec2};

/// Default lateral step width command (m).
pub const STEP_WIDTH: f64 = 0.3;

/// Below this speed (m/s) the command carries no heading information.
pub const ZERO_SPEED: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCommand {
    pub velocity: Vec2,
    pub step_width: f64,
    /// Heading used while the commanded speed is below [`ZERO_SPEED`].
    pub fallback_heading: f64,
}

impl StepCommand {
    pub fn new(velocity: Vec2, step_width: f64) -> Result<Self> {
        if !(velocity.x.is_finite() && velocity.y.is_finite()) {
            return Err(Error::NonFinite("velocity command"));
        }
        crate::error::positive("step width command", step_width)?;
        Ok(Self {
            velocity,
            step_width,
            fallback_heading: 0.0,
        })
    }

    pub fn forward(vx: f64) -> Result<Self> {
        Self::new(Vec2::new(vx, 0.0), STEP_WIDTH)
    }

    pub fn with_fallback_heading(self, heading: f64) -> Self {
        Self {
            fallback_heading: heading,
            ..self
        }
    }

    /// Same command with the velocity rotated by `angle` about z.
    pub fn rotated(self, angle: f64) -> Self {
        Self {
            velocity: Rotation2::new(angle) * self.velocity,
            ..self
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedStep {
    pub position: Vec2,
    pub z: f64,
    /// Foot yaw in `(-pi, pi]`.
    pub heading: f64,
    pub parity: u64,
}

impl PlannedStep {
    pub fn foot(&self) -> FootPosition {
        FootPosition {
            p: self.position,
            z: self.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetVector {
    pub bx: f64,
    pub by: f64,
}

/// Which time horizon sizes the offset vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OffsetHorizon {
    /// Step length, width and offsets all use the remaining step time.
    Remaining,
    /// Only the final-ICP prediction uses the remaining time; the offsets are those
    /// of a full step, which is the duration the next stance actually lasts.
    FullStep,
}

/// Every intermediate quantity of one planning call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub remaining_time: f64,
    pub omega0: f64,
    pub step_length: f64,
    pub step_width: f64,
    pub icp_initial: IcpPoint,
    pub icp_final: IcpPoint,
    pub offsets: OffsetVector,
    pub step: PlannedStep,
}

pub fn desired_step_length(cmd: &StepCommand, remaining: f64) -> f64 {
    cmd.speed() * remaining
}

pub fn desired_step_width(width_cmd: f64, remaining: f64, step_duration: f64) -> f64 {
    width_cmd.abs() * remaining / step_duration
}

/// ICP at the end of the step; identical to [`icp_trajectory`] over `remaining`.
pub fn predict_final_icp(
    xi0: &IcpPoint,
    stance: &FootPosition,
    omega0: f64,
    remaining: f64,
) -> Result<IcpPoint> {
    icp_trajectory(xi0, stance, omega0, remaining)
}

/// `bx = s_d / (e^{w dT} - 1)`, `by = w_d / (e^{w dT} + 1)`.
///
/// At `dT == 0` the lateral offset is `w_d / 2`; the sagittal one is only defined
/// when `s_d` vanishes with `dT`, as it does for `s_d = |v| dT`.
pub fn offsets(step_length: f64, step_width: f64, omega0: f64, remaining: f64) -> Result<OffsetVector> {
    if remaining.is_nan() || remaining < 0.0 {
        return Err(Error::NegativeDuration(remaining));
    }
    let x = omega0 * remaining;
    let bx = if x == 0.0 {
        if step_length != 0.0 {
            return Err(Error::NonPositive {
                name: "remaining step time",
                value: remaining,
            });
        }
        0.0
    } else {
        step_length / x.exp_m1()
    };
    Ok(OffsetVector {
        bx,
        by: step_width / (x.exp() + 1.0),
    })
}

pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Heading of the velocity command, full-quadrant, in `(-pi, pi]`.
pub fn turning_angle(cmd: &StepCommand) -> f64 {
    if cmd.speed() < ZERO_SPEED {
        normalize_angle(cmd.fallback_heading)
    } else {
        normalize_angle(cmd.velocity.y.atan2(cmd.velocity.x))
    }
}

/// Desired swing-foot placement for the current step.
pub fn plan_step(state: &LipState, stance: &FootPosition, cmd: &StepCommand, gait: &GaitState) -> PlannedStep {
    plan_step_with(state, stance, cmd, gait, OffsetHorizon::Remaining).step
}

pub fn plan_step_with(
    state: &LipState,
    stance: &FootPosition,
    cmd: &StepCommand,
    gait: &GaitState,
    horizon: OffsetHorizon,
) -> StepPlan {
    let ts = gait.params().step_duration();
    let remaining = gait.remaining_time();
    let omega0 = state.params.omega0();
    let sizing_time = match horizon {
        OffsetHorizon::Remaining => remaining,
        OffsetHorizon::FullStep => ts,
    };

    let step_length = desired_step_length(cmd, sizing_time);
    let step_width = desired_step_width(cmd.step_width, sizing_time, ts);
    let icp_initial = icp_of(state);
    // GaitState keeps the remaining time in (0, Ts], so neither call can fail.
    let icp_final = predict_final_icp(&icp_initial, stance, omega0, remaining)
        .expect("remaining step time is positive");
    let b = offsets(step_length, step_width, omega0, sizing_time).expect("remaining step time is positive");

    let heading = turning_angle(cmd);
    let lateral_sign = if gait.parity() % 2 == 0 { 1.0 } else { -1.0 };
    let local = Vec2::new(-b.bx, lateral_sign * b.by);
    let position = if heading == 0.0 {
        icp_final.xi + local
    } else {
        icp_final.xi + Rotation2::new(heading) * local
    };

    StepPlan {
        remaining_time: remaining,
        omega0,
        step_length,
        step_width,
        icp_initial,
        icp_final,
        offsets: b,
        step: PlannedStep {
            position,
            z: stance.z,
            heading,
            parity: gait.parity(),
        },
    }
}
