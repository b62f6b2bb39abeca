//! Gearbox and winch between motor shaft and tendon.

use crate::electrical::{positive, torque_from_current, MotorElectricalParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransmissionParams {
    /// Gear ratio.
    pub gear_ratio: f64,
    /// Efficiency.
    pub eta: f64,
    /// Rotor inertia (kg·m²).
    pub j_m: f64,
    /// Rotor viscous damping (N·m·s/rad).
    pub b_m: f64,
    /// Winch radius (m).
    pub radius: f64,
}

impl Default for TransmissionParams {
    fn default() -> Self {
        Self { gear_ratio: 19.0, eta: 0.85, j_m: 5e-5, b_m: 1e-4, radius: 0.005 }
    }
}

impl TransmissionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gear_ratio >= 1.0 && self.gear_ratio.is_finite()) {
            return Err(Error::InvalidParameter { name: "transmission.G", reason: "must be >= 1" });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter { name: "transmission.eta", reason: "must be in (0, 1]" });
        }
        positive("transmission.J_m", self.j_m)?;
        positive("transmission.b_m", self.b_m)?;
        positive("transmission.r", self.radius)
    }

    pub fn j_eq(&self) -> f64 {
        reflect_params(self).0
    }

    pub fn b_eq(&self) -> f64 {
        reflect_params(self).1
    }

    /// Static tendon force per ampere, `η G k_t / r` (N/A).
    pub fn force_per_amp(&self, k_t: f64) -> f64 {
        self.eta * self.gear_ratio * k_t / self.radius
    }
}

/// Output shaft of one winch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WinchSide {
    pub index: usize,
    pub theta: f64,
    pub theta_dot: f64,
    pub theta_ddot: f64,
}

/// `(J_eq, b_eq) = (G² J_m, G² b_m)`.
pub fn reflect_params(p: &TransmissionParams) -> (f64, f64) {
    let g2 = p.gear_ratio * p.gear_ratio;
    (g2 * p.j_m, g2 * p.b_m)
}

pub fn output_torque(tau_m: f64, p: &TransmissionParams) -> f64 {
    p.eta * p.gear_ratio * tau_m
}

/// Output-shaft angle and derivatives from tendon displacement.
pub fn winch_kinematics(index: usize, delta_l: f64, delta_l_dot: f64, delta_l_ddot: f64, r: f64) -> WinchSide {
    WinchSide { index, theta: delta_l / r, theta_dot: delta_l_dot / r, theta_ddot: delta_l_ddot / r }
}

/// Tendon force left over after accelerating the reflected rotor, using the
/// previous cycle's winch motion. Never negative.
pub fn commanded_tendon_force(tau_eq: f64, prev: &WinchSide, p: &TransmissionParams) -> f64 {
    signed_tendon_force(tau_eq, prev, p).max(0.0)
}

/// [`commanded_tendon_force`] before the slack clamp; negative values mean the
/// winch would have to push.
pub fn signed_tendon_force(tau_eq: f64, prev: &WinchSide, p: &TransmissionParams) -> f64 {
    let (j_eq, b_eq) = reflect_params(p);
    (tau_eq - j_eq * prev.theta_ddot - b_eq * prev.theta_dot) / p.radius
}

/// Current that would produce the observed tendon force and winch motion.
pub fn reconstruct_current(side: &WinchSide, f_obs: f64, p: &TransmissionParams, k_t: f64) -> f64 {
    let (j_eq, b_eq) = reflect_params(p);
    (j_eq * side.theta_ddot + b_eq * side.theta_dot + p.radius * f_obs) / (p.eta * p.gear_ratio * k_t)
}

/// Current → torque → output torque → tendon force.
pub fn current_to_force(i: f64, prev: &WinchSide, p: &TransmissionParams, m: &MotorElectricalParams) -> f64 {
    commanded_tendon_force(output_torque(torque_from_current(i, m), p), prev, p)
}
