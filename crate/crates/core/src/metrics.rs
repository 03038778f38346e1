//! Reward terms and the joint PD law, as pure evaluators over logged robot samples.
//!
//! The orientation term divides an absolute error by `sigma` while the height term
//! divides a squared error; both are kept as written, so their `sigma` has
//! different units.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::gait::{GaitState, CONTROL_TICK};
use crate::lip::Vec2;
use crate::planner::normalize_angle;
use crate::sim::BASE_HEIGHT;

pub const SIGMA: f64 = 0.25;
pub const KP: f64 = 30.0;
pub const KD: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FootSample {
    pub position: Vec2,
    pub contact: bool,
}

/// Joint-space quantities; all vectors share one length except `hip`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JointSample {
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub tau: Vec<f64>,
    pub action: Vec<f64>,
    pub action_prev: Vec<f64>,
    pub action_prev2: Vec<f64>,
    /// Hip yaw and abduction positions.
    pub hip: Vec<f64>,
}

impl JointSample {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.q.len();
        for (what, v) in [
            ("joint velocities", &self.dq),
            ("joint torques", &self.tau),
            ("actions", &self.action),
            ("previous actions", &self.action_prev),
            ("actions two ticks back", &self.action_prev2),
        ] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSample {
    pub base_height: f64,
    pub base_heading: f64,
    /// Horizontal base velocity in the world frame.
    pub base_velocity: Vec2,
    pub base_velocity_z: f64,
    pub base_angular_velocity: Vector3<f64>,
    /// Gravity direction expressed in the base frame.
    pub gravity_projection: Vector3<f64>,
    pub joints: JointSample,
    pub left: FootSample,
    pub right: FootSample,
    pub self_collision: bool,
}

impl RobotSample {
    /// Upright, at the commanded height and velocity, right foot on its target.
    pub fn ideal(params: &RewardParams, targets: &FootTargets, joints: usize) -> Self {
        Self {
            base_height: params.base_height,
            base_heading: params.heading,
            base_velocity: params.velocity,
            base_velocity_z: 0.0,
            base_angular_velocity: Vector3::zeros(),
            gravity_projection: Vector3::new(0.0, 0.0, -1.0),
            joints: JointSample {
                q: vec![0.0; joints],
                dq: vec![0.0; joints],
                tau: vec![0.0; joints],
                action: vec![0.0; joints],
                action_prev: vec![0.0; joints],
                action_prev2: vec![0.0; joints],
                hip: vec![0.0; joints.min(4)],
            },
            left: FootSample {
                position: targets.left,
                contact: false,
            },
            right: FootSample {
                position: targets.right,
                contact: true,
            },
            self_collision: false,
        }
    }

    fn is_finite(&self) -> bool {
        let j = &self.joints;
        [self.base_height, self.base_heading, self.base_velocity_z]
            .iter()
            .chain(self.base_velocity.iter())
            .chain(self.base_angular_velocity.iter())
            .chain(self.gravity_projection.iter())
            .chain(self.left.position.iter())
            .chain(self.right.position.iter())
            .chain([&j.q, &j.dq, &j.tau, &j.action, &j.action_prev, &j.action_prev2, &j.hip].into_iter().flatten())
            .all(|v| v.is_finite())
    }
}

/// Where each foot should be: the swing foot's planned step, the stance foot's touchdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootTargets {
    pub left: Vec2,
    pub right: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub base_height: f64,
    pub base_orientation: f64,
    pub velocity_tracking: f64,
    pub contact_schedule: f64,
    pub joint_torques: f64,
    pub torque_limits: f64,
    pub joint_velocity: f64,
    pub joint_limits: f64,
    pub action_smoothness_1: f64,
    pub action_smoothness_2: f64,
    pub hip_regularization: f64,
    pub base_roll_pitch_velocity: f64,
    pub base_z_velocity: f64,
    pub base_tilting: f64,
    pub termination: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            base_height: 1.0,
            base_orientation: 2.0,
            velocity_tracking: 4.0,
            contact_schedule: 9.0,
            joint_torques: 1e-4,
            torque_limits: 1e-2,
            joint_velocity: 1e-3,
            joint_limits: 10.0,
            action_smoothness_1: 1e-3,
            action_smoothness_2: 1e-4,
            hip_regularization: 1.25,
            base_roll_pitch_velocity: 1e-2,
            base_z_velocity: 1e-1,
            base_tilting: 1.0,
            termination: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub sigma: f64,
    /// Commanded base height.
    pub base_height: f64,
    /// Commanded base heading.
    pub heading: f64,
    /// Commanded horizontal velocity.
    pub velocity: Vec2,
    /// Per-joint torque limits; must match the joint count.
    pub tau_max: Vec<f64>,
    /// Per-joint position limits; must match the joint count.
    pub q_max: Vec<f64>,
    /// Period used to difference actions.
    pub action_dt: f64,
    pub weights: RewardWeights,
}

impl RewardParams {
    /// Defaults for a velocity command, heading pointing along it.
    pub fn for_command(velocity: Vec2) -> Self {
        Self {
            sigma: SIGMA,
            base_height: BASE_HEIGHT,
            heading: velocity.y.atan2(velocity.x),
            velocity,
            tau_max: Vec::new(),
            q_max: Vec::new(),
            action_dt: CONTROL_TICK,
            weights: RewardWeights::default(),
        }
    }

    /// Same torque and position limit on every joint.
    pub fn with_uniform_limits(self, joints: usize, tau_max: f64, q_max: f64) -> Self {
        Self {
            tau_max: vec![tau_max; joints],
            q_max: vec![q_max; joints],
            ..self
        }
    }

    fn check(&self, joints: usize) -> Result<()> {
        positive("sigma", self.sigma)?;
        positive("action period", self.action_dt)?;
        for (what, v) in [("torque limits", &self.tau_max), ("joint limits", &self.q_max)] {
            if v.len() != joints {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: joints,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

pub fn r_base_height(s: &RobotSample, params: &RewardParams) -> f64 {
    let e = params.base_height - s.base_height;
    params.weights.base_height * (-(e * e) / params.sigma).exp()
}

/// Heading error is wrapped to `(-pi, pi]` before taking its magnitude.
pub fn r_base_orientation(s: &RobotSample, params: &RewardParams) -> f64 {
    let e = normalize_angle(params.heading - s.base_heading).abs();
    params.weights.base_orientation * (-e / params.sigma).exp()
}

pub fn r_velocity_tracking(s: &RobotSample, params: &RewardParams) -> f64 {
    let e = (params.velocity - s.base_velocity) / (1.0 + params.velocity.norm());
    params.weights.velocity_tracking * (-e.norm_squared() / params.sigma).exp()
}

/// Contact reward for a given schedule value. Placement error is taken for the foot
/// in contact; when both or neither foot is down the indicator difference is zero.
pub fn r_contact_schedule_at(s: &RobotSample, params: &RewardParams, schedule: f64, targets: &FootTargets) -> f64 {
    let indicator = s.right.contact as i32 - s.left.contact as i32;
    if indicator == 0 {
        return 0.0;
    }
    let error = if s.right.contact {
        (targets.right - s.right.position).norm()
    } else {
        (targets.left - s.left.position).norm()
    };
    params.weights.contact_schedule * indicator as f64 * schedule * (-error / params.sigma).exp()
}

pub fn r_contact_schedule(s: &RobotSample, params: &RewardParams, gait: &GaitState, targets: &FootTargets) -> f64 {
    r_contact_schedule_at(s, params, gait.contact_schedule(), targets)
}

/// Which termination conditions hold. Tilt uses the magnitude of each gravity component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Termination {
    pub self_collision: bool,
    pub base_speed: bool,
    pub base_spin: bool,
    pub tilt: bool,
    pub low_base: bool,
}

impl Termination {
    pub fn any(&self) -> bool {
        self.self_collision || self.base_speed || self.base_spin || self.tilt || self.low_base
    }
}

pub fn termination(s: &RobotSample) -> Termination {
    let v = Vector3::new(s.base_velocity.x, s.base_velocity.y, s.base_velocity_z);
    Termination {
        self_collision: s.self_collision,
        base_speed: v.norm() >= 10.0,
        base_spin: s.base_angular_velocity.norm() >= 5.0,
        tilt: s.gravity_projection.x.abs() >= 0.7 || s.gravity_projection.y.abs() >= 0.7,
        low_base: s.base_height < 0.3,
    }
}

pub const TERM_NAMES: [&str; 15] = [
    "base_height",
    "base_orientation",
    "velocity_tracking",
    "contact_schedule",
    "joint_torques",
    "torque_limits",
    "joint_velocity",
    "joint_limits",
    "action_smoothness_1",
    "action_smoothness_2",
    "hip_regularization",
    "base_roll_pitch_velocity",
    "base_z_velocity",
    "base_tilting",
    "termination",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTerm {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardBreakdown {
    pub terms: Vec<RewardTerm>,
    pub total: f64,
}

impl RewardBreakdown {
    fn from_values(values: [f64; 15]) -> Self {
        let terms: Vec<RewardTerm> = TERM_NAMES
            .iter()
            .zip(values)
            .map(|(&name, value)| RewardTerm { name, value })
            .collect();
        let total = terms.iter().map(|t| t.value).sum();
        Self { terms, total }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

// Subtracting from +0.0 keeps a zero penalty from printing as -0.
fn penalty(weight: f64, value: f64) -> f64 {
    0.0 - weight * value
}

fn sum_sq(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum()
}

/// The eleven regularization terms, weighted, in table order.
pub fn regularization(s: &RobotSample, params: &RewardParams) -> Result<Vec<RewardTerm>> {
    let j = &s.joints;
    j.check()?;
    params.check(j.len())?;
    let w = &params.weights;
    let dt = params.action_dt;

    let torque_limit: f64 = j
        .tau
        .iter()
        .zip(&params.tau_max)
        .map(|(t, m)| (t.abs() - 0.9 * m).max(0.0))
        .sum();
    let joint_limit: f64 = j
        .q
        .iter()
        .zip(&params.q_max)
        .map(|(q, m)| (q.abs() - 0.9 * m).clamp(0.0, 1.0))
        .sum();
    let smooth1 = sum_sq(j.action.iter().zip(&j.action_prev).map(|(a, b)| (a - b) / dt));
    let smooth2 = sum_sq(
        j.action
            .iter()
            .zip(&j.action_prev)
            .zip(&j.action_prev2)
            .map(|((a, b), c)| (a - 2.0 * b + c) / dt),
    );
    let omega = &s.base_angular_velocity;
    let g = &s.gravity_projection;

    let values = [
        penalty(w.joint_torques, sum_sq(j.tau.iter().copied())),
        penalty(w.torque_limits, torque_limit),
        penalty(w.joint_velocity, sum_sq(j.dq.iter().copied())),
        penalty(w.joint_limits, joint_limit),
        penalty(w.action_smoothness_1, smooth1),
        penalty(w.action_smoothness_2, smooth2),
        w.hip_regularization * (-sum_sq(j.hip.iter().copied()) / params.sigma).exp(),
        penalty(w.base_roll_pitch_velocity, omega.x * omega.x + omega.y * omega.y),
        penalty(w.base_z_velocity, s.base_velocity_z * s.base_velocity_z),
        w.base_tilting * (-(g.x * g.x + g.y * g.y) / params.sigma).exp(),
        if termination(s).any() { -w.termination } else { 0.0 },
    ];
    Ok(TERM_NAMES[4..]
        .iter()
        .zip(values)
        .map(|(&name, value)| RewardTerm { name, value })
        .collect())
}

/// Total reward for an explicit contact-schedule value.
pub fn total_reward_at(
    s: &RobotSample,
    params: &RewardParams,
    schedule: f64,
    targets: &FootTargets,
) -> Result<RewardBreakdown> {
    if !s.is_finite() {
        return Err(Error::NonFinite("robot sample"));
    }
    let regularization = regularization(s, params)?;
    let mut values = [0.0; 15];
    values[0] = r_base_height(s, params);
    values[1] = r_base_orientation(s, params);
    values[2] = r_velocity_tracking(s, params);
    values[3] = r_contact_schedule_at(s, params, schedule, targets);
    for (slot, term) in values[4..].iter_mut().zip(&regularization) {
        *slot = term.value;
    }
    Ok(RewardBreakdown::from_values(values))
}

pub fn total_reward(
    s: &RobotSample,
    params: &RewardParams,
    gait: &GaitState,
    targets: &FootTargets,
) -> Result<RewardBreakdown> {
    total_reward_at(s, params, gait.contact_schedule(), targets)
}

/// Diagonal PD gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdGains {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
}

impl PdGains {
    pub fn uniform(joints: usize, kp: f64, kd: f64) -> Self {
        Self {
            kp: vec![kp; joints],
            kd: vec![kd; joints],
        }
    }
}

/// `tau = Kp (q_ref + dq_action - q) + Kd (0 - dq)`.
pub fn pd_torque(q_ref: &[f64], dq_action: &[f64], q: &[f64], dq: &[f64], gains: &PdGains) -> Result<Vec<f64>> {
    let n = q.len();
    for (what, v) in [
        ("reference positions", q_ref),
        ("action residuals", dq_action),
        ("joint velocities", dq),
        ("proportional gains", &gains.kp[..]),
        ("derivative gains", &gains.kd[..]),
    ] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got: v.len(),
            });
        }
    }
    Ok((0..n)
        .map(|i| gains.kp[i] * (q_ref[i] + dq_action[i] - q[i]) + gains.kd[i] * (0.0 - dq[i]))
        .collect())
}
