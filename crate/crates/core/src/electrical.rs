//! Armature circuit `L di/dt = u - R i - k_e dθm/dt - d` and the
//! feedforward + PID voltage controller wrapped around it.

use alloc::vec::Vec;

use crate::{math, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MotorElectricalParams {
    /// Inductance (H).
    pub inductance: f64,
    /// Resistance (Ω).
    pub resistance: f64,
    /// Back-EMF constant (V·s/rad).
    pub back_emf: f64,
    /// Torque constant (N·m/A).
    pub torque_const: f64,
    /// Current saturation bound (A).
    pub i_sat: f64,
}

impl Default for MotorElectricalParams {
    fn default() -> Self {
        Self { inductance: 0.0008, resistance: 0.6, back_emf: 0.09, torque_const: 0.09, i_sat: 5.0 }
    }
}

impl MotorElectricalParams {
    pub fn validate(&self) -> Result<()> {
        positive("motor.L", self.inductance)?;
        positive("motor.R", self.resistance)?;
        positive("motor.ke", self.back_emf)?;
        positive("motor.kt", self.torque_const)?;
        positive("motor.i_sat", self.i_sat)
    }
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: "must be finite and > 0" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurrentControllerGains {
    /// V/A
    pub kp: f64,
    /// V/(A·s)
    pub ki: f64,
    /// V·s/A
    pub kd: f64,
}

impl Default for CurrentControllerGains {
    fn default() -> Self {
        Self { kp: 4.0, ki: 400.0, kd: 0.001 }
    }
}

impl CurrentControllerGains {
    pub fn validate(&self) -> Result<()> {
        positive("gains.kp", self.kp)?;
        for (name, v) in [("gains.ki", self.ki), ("gains.kd", self.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be finite and >= 0" });
            }
        }
        Ok(())
    }
}

/// Circuit current plus PID memory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElectricalState {
    /// Armature current (A).
    pub current: f64,
    /// Error integral (A·s).
    pub integral: f64,
    /// Error at the previous controller update; `None` before the first one,
    /// in which case the derivative term is zero.
    pub prev_error: Option<f64>,
}

/// One semi-implicit Euler step of the circuit (implicit in the `R i` term).
pub fn step_circuit(
    state: ElectricalState,
    u: f64,
    theta_m_dot: f64,
    d: f64,
    dt: f64,
    p: &MotorElectricalParams,
) -> ElectricalState {
    let current = (p.inductance * state.current + dt * (u - p.back_emf * theta_m_dot - d))
        / (p.inductance + p.resistance * dt);
    ElectricalState { current, ..state }
}

pub fn torque_from_current(i: f64, p: &MotorElectricalParams) -> f64 {
    p.torque_const * i
}

/// `L di_cmd + R i_cmd + k_e dθm/dt`, with the motor speed from the previous sample.
pub fn feedforward_voltage(
    i_cmd: f64,
    di_cmd: f64,
    theta_m_dot_prev: f64,
    p: &MotorElectricalParams,
) -> f64 {
    p.inductance * di_cmd + p.resistance * i_cmd + p.back_emf * theta_m_dot_prev
}

/// PID on the current error with a rectangle-rule integral and a
/// backward-difference derivative.
pub fn pid_feedback(
    e: f64,
    state: ElectricalState,
    dt: f64,
    g: &CurrentControllerGains,
) -> (f64, ElectricalState) {
    let integral = state.integral + e * dt;
    let derivative = match state.prev_error {
        Some(prev) => (e - prev) / dt,
        None => 0.0,
    };
    let u = g.kp * e + g.ki * integral + g.kd * derivative;
    (u, ElectricalState { integral, prev_error: Some(e), ..state })
}

/// Inputs held constant over one electrical substep.
#[derive(Debug, Clone, Copy)]
pub struct SubstepInput {
    /// Command at the end of the substep (A).
    pub command: f64,
    /// Feedforward voltage (V).
    pub u_ff: f64,
    /// Motor shaft speed seen by the back-EMF term (rad/s).
    pub theta_m_dot: f64,
    /// Disturbance voltage (V).
    pub disturbance: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SubstepOutput {
    pub state: ElectricalState,
    pub u_ff: f64,
    pub u_fb: f64,
    /// Whether the supply bound clipped the voltage (integral frozen).
    pub saturated: bool,
}

/// One controller + circuit substep with the feedback evaluated on the
/// end-of-substep error.
///
/// The PID output depends on the current it is driving, so the error is
/// solved from the linear circuit equation first; `pid_feedback` and
/// `step_circuit` are then applied with that error and reproduce it. Explicit
/// evaluation (error from the start of the substep) is unstable whenever
/// `K_d > L` or `K_p dt > 2L`, both of which hold for ordinary gains.
///
/// While `|u|` would exceed `v_supply` the integral is frozen and the voltage
/// is clipped to the rail.
pub fn closed_loop_substep(
    state: ElectricalState,
    inp: &SubstepInput,
    p: &MotorElectricalParams,
    g: &CurrentControllerGains,
    v_supply: f64,
) -> SubstepOutput {
    let h = inp.dt;
    let c = inp.command;
    let i0 = state.current;
    // before the first update the derivative sees the current error, no kick
    let prev = state.prev_error.unwrap_or(c - i0);
    let state = ElectricalState { prev_error: Some(prev), ..state };
    let kd_h = g.kd / h;
    let drive = inp.u_ff - p.back_emf * inp.theta_m_dot - inp.disturbance;

    // L (c - e - i0)/h = drive + Kp e + Ki (I + s e h) + Kd_h (e - prev) - R (c - e)
    let solve = |integrate: bool| {
        let ki_h = if integrate { g.ki * h } else { 0.0 };
        let num = p.inductance * (c - i0) / h - drive - g.ki * state.integral + kd_h * prev
            + p.resistance * c;
        let den = p.inductance / h + g.kp + ki_h + kd_h + p.resistance;
        num / den
    };

    let e = solve(true);
    let (u_fb, next) = pid_feedback(e, state, h, g);
    let u = inp.u_ff + u_fb;
    if math::abs(u) <= v_supply {
        let stepped = step_circuit(next, u, inp.theta_m_dot, inp.disturbance, h, p);
        return SubstepOutput { state: stepped, u_ff: inp.u_ff, u_fb, saturated: false };
    }

    // Integral frozen; clip if the rail is still exceeded.
    let e = solve(false);
    let mut u_fb = g.kp * e + g.ki * state.integral + g.kd * (e - prev) / h;
    let u = (inp.u_ff + u_fb).clamp(-v_supply, v_supply);
    u_fb = u - inp.u_ff;
    let stepped = step_circuit(state, u, inp.theta_m_dot, inp.disturbance, h, p);
    let e_end = c - stepped.current;
    SubstepOutput {
        state: ElectricalState { prev_error: Some(e_end), ..stepped },
        u_ff: inp.u_ff,
        u_fb,
        saturated: true,
    }
}

/// Reference solution of the closed-loop error dynamics
/// `(L + Kd) ë + (R + Kp) ė + Ki e = ḋ`, integrated with classical RK4.
///
/// Returns `e` sampled every `sample_dt` from `t = 0` to `t_end` inclusive.
/// Each sample interval is split so the internal step is at most 1 µs.
pub fn error_ode_oracle(
    g: &CurrentControllerGains,
    p: &MotorElectricalParams,
    d_dot: impl Fn(f64) -> f64,
    e0: f64,
    edot0: f64,
    t_end: f64,
    sample_dt: f64,
) -> Result<Vec<f64>> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter { name: "t_end", reason: "must be > 0" });
    }
    if !(sample_dt > 0.0) {
        return Err(Error::InvalidParameter { name: "sample_dt", reason: "must be > 0" });
    }
    let a = p.inductance + g.kd;
    let b = p.resistance + g.kp;
    let c = g.ki;
    let f = |t: f64, y: [f64; 2]| [y[1], (d_dot(t) - b * y[1] - c * y[0]) / a];

    let n = math::round(t_end / sample_dt) as usize;
    let sub = (math::round(sample_dt / 1e-6) as usize).max(1);
    let h = sample_dt / sub as f64;
    let mut y = [e0, edot0];
    let mut out = Vec::with_capacity(n + 1);
    out.push(e0);
    for k in 0..n {
        for s in 0..sub {
            let t = k as f64 * sample_dt + s as f64 * h;
            let k1 = f(t, y);
            let k2 = f(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        out.push(y[0]);
    }
    Ok(out)
}
