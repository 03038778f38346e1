//! Linear inverted pendulum (3D-LIPM) and instantaneous capture point dynamics.
//!
//! Planar quantities live in a fixed world frame. The pendulum height is measured
//! from the stance foot, so `omega0` has to be rebuilt whenever the stance height
//! changes (see [`LipParams::for_stance`]).

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;

/// Standard gravity used as the default throughout the crate.
pub const GRAVITY: f64 = 9.81;

/// Pendulum parameters. `omega0` is always `sqrt(gravity / pendulum_height)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipParams {
    gravity: f64,
    pendulum_height: f64,
    omega0: f64,
}

impl LipParams {
    pub fn new(gravity: f64, pendulum_height: f64) -> Result<Self> {
        let omega0 = natural_frequency(gravity, pendulum_height)?;
        Ok(Self {
            gravity,
            pendulum_height,
            omega0,
        })
    }

    /// Parameters for a CoM held at `base_height` (world z) over a stance foot at `stance_z`.
    pub fn for_stance(gravity: f64, base_height: f64, stance_z: f64) -> Result<Self> {
        Self::new(gravity, base_height - stance_z)
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn pendulum_height(&self) -> f64 {
        self.pendulum_height
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipState {
    pub com_pos: Vec2,
    pub com_vel: Vec2,
    pub params: LipParams,
}

impl LipState {
    pub fn new(com_pos: Vec2, com_vel: Vec2, params: LipParams) -> Result<Self> {
        let state = Self {
            com_pos,
            com_vel,
            params,
        };
        if state.is_finite() {
            Ok(state)
        } else {
            Err(Error::NonFinite("LIP state"))
        }
    }

    pub fn at_rest(com_pos: Vec2, params: LipParams) -> Self {
        Self {
            com_pos,
            com_vel: Vec2::zeros(),
            params,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.com_pos.iter().chain(self.com_vel.iter()).all(|v| v.is_finite())
    }

    /// Same kinematic state under different pendulum parameters.
    pub fn with_params(self, params: LipParams) -> Self {
        Self { params, ..self }
    }
}

/// Stance-foot ground contact point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootPosition {
    pub p: Vec2,
    pub z: f64,
}

impl FootPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            p: Vec2::new(x, y),
            z,
        }
    }

    pub fn on_ground(p: Vec2) -> Self {
        Self { p, z: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpPoint {
    pub xi: Vec2,
}

impl IcpPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { xi: Vec2::new(x, y) }
    }
}

impl From<Vec2> for IcpPoint {
    fn from(xi: Vec2) -> Self {
        Self { xi }
    }
}

pub fn natural_frequency(gravity: f64, pendulum_height: f64) -> Result<f64> {
    let g = positive("gravity", gravity)?;
    let z0 = positive("pendulum height", pendulum_height)?;
    Ok((g / z0).sqrt())
}

/// CoM acceleration `omega0^2 (x - p)` while `foot` is in contact.
pub fn lip_acceleration(state: &LipState, foot: &FootPosition) -> Vec2 {
    let w = state.params.omega0;
    (state.com_pos - foot.p) * (w * w)
}

/// Exact CoM state after `t` seconds over a fixed stance foot.
///
/// Per axis: `x(t) = p + (x0 - p) cosh(w t) + (v0 / w) sinh(w t)`.
pub fn com_trajectory(state: &LipState, foot: &FootPosition, t: f64) -> Result<LipState> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeDuration(t));
    }
    if t == 0.0 {
        return Ok(*state);
    }
    let w = state.params.omega0;
    let (sh, ch) = ((w * t).sinh(), (w * t).cosh());
    let rel = state.com_pos - foot.p;
    let com_pos = foot.p + rel * ch + state.com_vel * (sh / w);
    let com_vel = rel * (w * sh) + state.com_vel * ch;
    Ok(LipState {
        com_pos,
        com_vel,
        params: state.params,
    })
}

/// `xi = x + xdot / omega0`.
pub fn icp_of(state: &LipState) -> IcpPoint {
    IcpPoint {
        xi: state.com_pos + state.com_vel / state.params.omega0,
    }
}

pub fn icp_derivative(xi: &IcpPoint, foot: &FootPosition, omega0: f64) -> Vec2 {
    (xi.xi - foot.p) * omega0
}

/// `xi(t) = e^{w t} xi0 + (1 - e^{w t}) p`, evaluated as `p + e^{w t} (xi0 - p)`.
pub fn icp_trajectory(xi0: &IcpPoint, foot: &FootPosition, omega0: f64, t: f64) -> Result<IcpPoint> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeDuration(t));
    }
    let growth = (omega0 * t).exp();
    Ok(IcpPoint {
        xi: foot.p + (xi0.xi - foot.p) * growth,
    })
}
