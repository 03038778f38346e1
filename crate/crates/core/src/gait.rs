//! Step clocks, support parity and the periodic contact/phase signals.
//!
//! Convention: parity `n = 0` at start plans the left step while the right foot
//! is in stance, and `t' = 0` coincides with the start of a right-stance step.
//! Even parity therefore means right stance and a positive contact schedule.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

/// Default step duration (s).
pub const STEP_DURATION: f64 = 0.35;
/// Control tick (s), 100 Hz.
pub const CONTROL_TICK: f64 = 0.01;

// Slack absorbed when deciding that accumulated ticks reached a step boundary.
const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    step_duration: f64,
}

impl GaitParams {
    pub fn new(step_duration: f64) -> Result<Self> {
        Ok(Self {
            step_duration: positive("step duration", step_duration)?,
        })
    }

    pub fn step_duration(&self) -> f64 {
        self.step_duration
    }

    /// Number of ticks per step; errors unless `step_duration` is a multiple of `dt`.
    pub fn ticks_per_step(&self, dt: f64) -> Result<u64> {
        let dt = positive("tick", dt)?;
        if dt >= self.step_duration {
            return Err(Error::TickTooLong {
                dt,
                step_duration: self.step_duration,
            });
        }
        let ratio = self.step_duration / dt;
        let ticks = ratio.round();
        if (ratio - ticks).abs() > 1e-6 {
            return Err(Error::TickMismatch {
                dt,
                step_duration: self.step_duration,
            });
        }
        Ok(ticks as u64)
    }
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            step_duration: STEP_DURATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitState {
    t: f64,
    t_prime: f64,
    parity: u64,
    params: GaitParams,
}

impl GaitState {
    /// Clock at the very start of the gait: `t = t' = 0`, `n = 0`.
    pub fn start(params: GaitParams) -> Self {
        Self {
            t: 0.0,
            t_prime: 0.0,
            parity: 0,
            params,
        }
    }

    /// Clock `t` seconds into step `parity`; `t'` follows from the parity.
    pub fn at(params: GaitParams, t: f64, parity: u64) -> Result<Self> {
        let ts = params.step_duration;
        if !(t.is_finite() && (0.0..ts).contains(&t)) {
            return Err(Error::NonPositive {
                name: "remaining step time",
                value: ts - t,
            });
        }
        Ok(Self {
            t,
            t_prime: Self::cycle_time(t, parity, ts),
            parity,
            params,
        })
    }

    fn cycle_time(t: f64, parity: u64, ts: f64) -> f64 {
        if parity % 2 == 0 {
            t
        } else {
            ts + t
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.t
    }

    pub fn cycle_elapsed(&self) -> f64 {
        self.t_prime
    }

    pub fn parity(&self) -> u64 {
        self.parity
    }

    pub fn params(&self) -> GaitParams {
        self.params
    }

    /// Advance the clocks by `dt`. The flag is set when a step boundary was crossed,
    /// in which case `t` restarts and the parity increments.
    pub fn advance(&self, dt: f64) -> Result<(GaitState, bool)> {
        let ts = self.params.step_duration;
        if !(dt.is_finite() && dt > 0.0 && dt < ts) {
            return Err(Error::TickTooLong {
                dt,
                step_duration: ts,
            });
        }
        let t = self.t + dt;
        if t < ts - BOUNDARY_EPS {
            return Ok((
                GaitState {
                    t,
                    t_prime: self.t_prime + dt,
                    ..*self
                },
                false,
            ));
        }
        let mut t = t - ts;
        if t < BOUNDARY_EPS {
            t = 0.0;
        }
        let parity = self.parity + 1;
        Ok((
            GaitState {
                t,
                t_prime: Self::cycle_time(t, parity, ts),
                parity,
                params: self.params,
            },
            true,
        ))
    }

    /// `dT = Ts - t`, in `(0, Ts]`.
    pub fn remaining_time(&self) -> f64 {
        self.params.step_duration - self.t
    }

    /// Position in the two-step cycle, `t' / (2 Ts)`, in `[0, 1)`.
    pub fn phase(&self) -> f64 {
        self.t_prime / (2.0 * self.params.step_duration)
    }

    pub fn contact_schedule(&self) -> f64 {
        contact_schedule_at(self.phase())
    }

    /// `(sin 2 pi phi, cos 2 pi phi)`.
    pub fn phase_clock(&self) -> (f64, f64) {
        (TAU * self.phase()).sin_cos()
    }

    /// Foot the planner targets this step: even parity plans the left foot.
    pub fn swing_foot(&self) -> Side {
        if self.parity % 2 == 0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn stance_foot(&self) -> Side {
        self.swing_foot().other()
    }
}

/// Smoothed square wave in `[-1, 1]`: positive while the right foot should be in contact.
pub fn contact_schedule_at(phase: f64) -> f64 {
    let s = (TAU * phase).sin();
    s / (s * s + 0.04).sqrt()
}
