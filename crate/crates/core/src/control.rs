//! One control cycle: current loop (j_a), current → tendon force (j_b), plant
//! and current reconstruction (j_c), wrapped by the mechanical outer loop.

use alloc::vec;
use alloc::vec::Vec;

use crate::continuum::{
    self, step_dynamics, tendon_lengths, tendon_rates, ContactKind, ContactSpec,
    ContinuumModel, ContinuumState, TendonDrive,
};
use crate::electrical::{
    closed_loop_substep, feedforward_voltage, CurrentControllerGains, ElectricalState, MotorElectricalParams,
    SubstepInput,
};
use crate::filter::{Median5, MovingAverage};
use crate::log::{LogRow, TimeSeriesLog};
use crate::scenario::{config_entries, ChannelConfig, FeedbackMode, InitialPose, ScenarioConfig};
use crate::transmission::{
    current_to_force, reconstruct_current, winch_kinematics, TransmissionParams, WinchSide,
};
use crate::{math, Error, Result};

/// Every signal of one cycle, per tendon.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoopState {
    pub t: f64,
    pub i_cmd: [f64; 2],
    /// Current error at the end of the cycle.
    pub e: [f64; 2],
    pub integral: [f64; 2],
    /// Post-controller current, clamped to `±i_sat`.
    pub i_obs_star: [f64; 2],
    pub i_obs_star_raw: [f64; 2],
    /// Current reconstructed from the mechanics (unclamped).
    pub i_obs_dstar: [f64; 2],
    pub f_cmd: [f64; 2],
    pub f_obs: [f64; 2],
    pub winch: [WinchSide; 2],
    pub dl: [f64; 2],
    pub dl_dot: [f64; 2],
    pub u_ff: [f64; 2],
    pub u_fb: [f64; 2],
}

/// Electrical-loop constants shared by both motors.
#[derive(Debug, Clone, Copy)]
pub struct CurrentLoop {
    pub motor: MotorElectricalParams,
    pub gains: CurrentControllerGains,
    pub v_supply: f64,
    /// Electrical substeps per control period.
    pub substeps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct JaOutput {
    pub i_obs_star: f64,
    pub i_obs_star_raw: f64,
    pub e: f64,
    pub state: ElectricalState,
    pub u_ff: f64,
    pub u_fb: f64,
}

/// Step j_a for one motor over one control period `dt`.
///
/// The circuit starts from the previous cycle's reconstructed current, so the
/// initial error is `i_cmd − i_obs**(k−1)`. The command is held over the
/// period; `di_cmd` is the backward difference against `i_cmd_prev` (zero on
/// the first cycle). Returns `i_obs* = i_cmd − e(t_k)`.
#[allow(clippy::too_many_arguments)]
pub fn step_ja(
    i_cmd: f64,
    i_cmd_prev: Option<f64>,
    i_obs_dstar_prev: f64,
    elec: ElectricalState,
    theta_m_dot_prev: f64,
    disturbance: impl Fn(f64) -> f64,
    t0: f64,
    dt: f64,
    cl: &CurrentLoop,
) -> JaOutput {
    let di_cmd = match i_cmd_prev {
        Some(p) => (i_cmd - p) / dt,
        None => 0.0,
    };
    let u_ff = feedforward_voltage(i_cmd, di_cmd, theta_m_dot_prev, &cl.motor);
    let h = dt / cl.substeps as f64;
    let e_start = i_cmd - i_obs_dstar_prev;
    let mut st = ElectricalState { current: i_obs_dstar_prev, prev_error: Some(e_start), ..elec };
    let mut u_fb = 0.0;
    for s in 0..cl.substeps {
        let inp = SubstepInput {
            command: i_cmd,
            u_ff,
            theta_m_dot: theta_m_dot_prev,
            disturbance: disturbance(t0 + s as f64 * h),
            dt: h,
        };
        let out = closed_loop_substep(st, &inp, &cl.motor, &cl.gains, cl.v_supply);
        st = out.state;
        u_fb = out.u_fb;
    }
    let raw = st.current;
    JaOutput {
        i_obs_star: raw.clamp(-cl.motor.i_sat, cl.motor.i_sat),
        i_obs_star_raw: raw,
        e: i_cmd - raw,
        state: st,
        u_ff,
        u_fb,
    }
}

/// Step j_b: current → motor torque → output torque → tendon force, against
/// the previous cycle's winch motion.
pub fn step_jb(i_obs_star: f64, prev: &WinchSide, p: &TransmissionParams, motor: &MotorElectricalParams) -> f64 {
    current_to_force(i_obs_star, prev, p, motor)
}

/// Plant-side constants for step j_c.
#[derive(Debug, Clone)]
pub struct Plant {
    pub model: ContinuumModel,
    pub transmission: TransmissionParams,
    pub motor: MotorElectricalParams,
    pub tau_f: f64,
    pub substeps: usize,
}

#[derive(Debug, Clone)]
pub struct JcOutput {
    pub state: ContinuumState,
    pub winch: [WinchSide; 2],
    pub f_obs: [f64; 2],
    pub i_obs_dstar: [f64; 2],
    pub dl: [f64; 2],
    pub dl_dot: [f64; 2],
}

/// Step j_c: tendon-force tracking and plant substeps, then winch kinematics
/// and the reconstructed current.
///
/// The tracked force aims at the motor-side pull `η G k_t i_obs*/r` minus the
/// reflected rotor inertia and damping at the end of each substep, so the
/// winch load enters the plant implicitly. Output-shaft acceleration is a
/// backward difference of the shaft speed, median-filtered over five cycles.
#[allow(clippy::too_many_arguments)]
pub fn step_jc(
    i_obs_star: [f64; 2],
    f_prev: [f64; 2],
    state: &ContinuumState,
    prev_winch: &[WinchSide; 2],
    accel_filters: &mut [Median5; 2],
    spec: &ContactSpec,
    t0: f64,
    dt: f64,
    plant: &Plant,
) -> Result<JcOutput> {
    let tp = &plant.transmission;
    let r2 = tp.radius * tp.radius;
    let drive = TendonDrive {
        desired: i_obs_star.map(|i| tp.force_per_amp(plant.motor.torque_const) * i),
        winch_mass: tp.j_eq() / r2,
        winch_damping: tp.b_eq() / r2,
        tau_f: plant.tau_f,
    };
    let h = dt / plant.substeps as f64;
    let mut st = state.clone();
    let mut f = f_prev;
    for s in 0..plant.substeps {
        let out = continuum::step_coupled(&st, &drive, f, spec, t0 + s as f64 * h, h, &plant.model)?;
        st = out.state;
        f = out.forces;
    }
    finish_jc(st, f, prev_winch, accel_filters, dt, plant)
}

fn finish_jc(
    st: ContinuumState,
    f: [f64; 2],
    prev_winch: &[WinchSide; 2],
    accel_filters: &mut [Median5; 2],
    dt: f64,
    plant: &Plant,
) -> Result<JcOutput> {
    if !st.is_finite() || !f.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical { step: 0, what: "non-finite plant state" });
    }
    let tp = &plant.transmission;
    let dl = tendon_lengths(&st.q, &plant.model);
    let dl_dot = tendon_rates(&st.qdot, &plant.model);
    let mut winch = [WinchSide::default(); 2];
    let mut i_dstar = [0.0; 2];
    for i in 0..2 {
        let theta_dot = dl_dot[i] / tp.radius;
        let raw_acc = (theta_dot - prev_winch[i].theta_dot) / dt;
        let acc = accel_filters[i].push(raw_acc);
        winch[i] = winch_kinematics(i, dl[i], dl_dot[i], acc * tp.radius, tp.radius);
        i_dstar[i] = reconstruct_current(&winch[i], f[i], tp, plant.motor.torque_const);
    }
    Ok(JcOutput { state: st, winch, f_obs: f, i_obs_dstar: i_dstar, dl, dl_dot })
}

/// Mechanical signals available to the outer loop (previous cycle).
#[derive(Debug, Clone, Copy, Default)]
pub struct Observed {
    pub dl: f64,
    pub dl_dot: f64,
    pub f_obs: f64,
}

/// Outer loop Φ: PI on the selected mechanical error, clamped to `±i_sat`.
///
/// The integral only accumulates while the output is unsaturated or the error
/// drives it back inside. Current mode passes the setpoint through.
pub fn outer_feedback(
    ch: &ChannelConfig,
    obs: &Observed,
    integral: &mut f64,
    t: f64,
    dt: f64,
    i_sat: f64,
) -> f64 {
    let sp = ch.setpoint_at(t);
    let err = match ch.mode {
        FeedbackMode::Current => return sp.clamp(-i_sat, i_sat),
        FeedbackMode::Displacement => sp - obs.dl,
        FeedbackMode::Velocity => sp - obs.dl_dot,
        FeedbackMode::Force => sp - obs.f_obs,
    };
    let trial = *integral + err * dt;
    let u = ch.kp * err + ch.ki * trial;
    if math::abs(u) <= i_sat || (u > i_sat && err < 0.0) || (u < -i_sat && err > 0.0) {
        *integral = trial;
    }
    (ch.kp * err + ch.ki * *integral).clamp(-i_sat, i_sat)
}

/// Static pose balancing tendon pulls `f` (each joint independently, with the
/// limit penalty).
pub fn static_pose(f: [f64; 2], model: &ContinuumModel) -> Vec<f64> {
    (0..model.n())
        .map(|j| {
            let tau = model.moment_arms[j] * (f[0] - f[1]);
            let k = model.joint_stiffness[j];
            let free = tau / k;
            let lim = model.joint_limit;
            if math::abs(free) <= lim {
                free
            } else {
                let s = if free > 0.0 { 1.0 } else { -1.0 };
                (tau + s * model.limit_stiffness * lim) / (k + model.limit_stiffness)
            }
        })
        .collect()
}

/// Full multi-dynamics loop with a step-by-step API.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: ScenarioConfig,
    plant: Plant,
    cl: CurrentLoop,
    channels: [ChannelConfig; 2],
    contact: ContactSpec,
    state: ContinuumState,
    loop_state: LoopState,
    elec: [ElectricalState; 2],
    outer_integral: [f64; 2],
    prev_cmd: Option<[f64; 2]>,
    accel: [Median5; 2],
    filters: [MovingAverage; 2],
    step: usize,
    last_row: LogRow,
}

impl Simulator {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.model();
        let plant = Plant {
            model,
            transmission: cfg.transmission,
            motor: cfg.motor,
            tau_f: cfg.tau_f,
            substeps: cfg.substeps,
        };
        let cl = CurrentLoop {
            motor: cfg.motor,
            gains: cfg.gains,
            v_supply: cfg.v_supply,
            substeps: cfg.electrical_substeps(),
        };
        let n = plant.model.n();
        let mut loop_state = LoopState::default();
        let mut state = ContinuumState::zeros(n);
        match cfg.initial_pose {
            InitialPose::Straight => {}
            InitialPose::Curled => state.q = vec![cfg.initial_curl; n],
            InitialPose::Equilibrium => {
                let fpa = cfg.transmission.force_per_amp(cfg.motor.torque_const);
                let mut f = [0.0; 2];
                for i in 0..2 {
                    let ch = &cfg.tendons[i];
                    if ch.mode == FeedbackMode::Current {
                        let i0 = ch.setpoint_at(0.0).clamp(-cfg.motor.i_sat, cfg.motor.i_sat);
                        f[i] = (fpa * i0).max(0.0);
                        loop_state.i_cmd[i] = i0;
                        loop_state.i_obs_star[i] = i0;
                        loop_state.i_obs_star_raw[i] = i0;
                        loop_state.i_obs_dstar[i] = f[i] / fpa;
                    }
                }
                state.q = static_pose(f, &plant.model);
                loop_state.f_obs = f;
                loop_state.f_cmd = f;
            }
        }
        loop_state.dl = tendon_lengths(&state.q, &plant.model);
        for i in 0..2 {
            loop_state.winch[i] = winch_kinematics(i, loop_state.dl[i], 0.0, 0.0, cfg.transmission.radius);
        }
        let filters = [MovingAverage::new(cfg.filter_window)?, MovingAverage::new(cfg.filter_window)?];
        let mut sim = Self {
            channels: cfg.tendons,
            contact: cfg.contact,
            cfg: cfg.clone(),
            plant,
            cl,
            state,
            loop_state,
            elec: [ElectricalState::default(); 2],
            outer_integral: [0.0; 2],
            prev_cmd: None,
            accel: [Median5::default(), Median5::default()],
            filters,
            step: 0,
            last_row: LogRow::default(),
        };
        for i in 0..2 {
            sim.elec[i].current = sim.loop_state.i_obs_star_raw[i];
        }
        sim.last_row = sim.make_row(0.0, [sim.channels[0].setpoint_at(0.0), sim.channels[1].setpoint_at(0.0)]);
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn model(&self) -> &ContinuumModel {
        &self.plant.model
    }

    pub fn state(&self) -> &ContinuumState {
        &self.state
    }

    pub fn loop_state(&self) -> &LoopState {
        &self.loop_state
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// The row describing the current state (row 0 before any step).
    pub fn row(&self) -> &LogRow {
        &self.last_row
    }

    pub fn channel(&self, i: usize) -> &ChannelConfig {
        &self.channels[i]
    }

    /// Switches one tendon's outer loop; the PI integral restarts from zero.
    pub fn set_channel(&mut self, i: usize, ch: ChannelConfig) {
        self.channels[i] = ch;
        self.outer_integral[i] = 0.0;
    }

    pub fn set_contact(&mut self, spec: ContactSpec) {
        self.contact = spec;
    }

    fn contact_flag(&self, t: f64) -> bool {
        match self.contact.kind {
            ContactKind::None => false,
            ContactKind::Cylinder { .. } => continuum::in_contact(&self.state.q, &self.contact, &self.plant.model),
            _ => {
                let tau = continuum::contact_forces(
                    &ContinuumState { q: self.state.q.clone(), qdot: vec![0.0; self.state.q.len()] },
                    &ContactSpec { ..self.contact },
                    t,
                    &ContinuumModel { limit_stiffness: 0.0, limit_damping: 0.0, ..self.plant.model.clone() },
                );
                tau.iter().any(|x| *x != 0.0)
            }
        }
    }

    fn make_row(&mut self, t: f64, setpoint: [f64; 2]) -> LogRow {
        let ls = &self.loop_state;
        let filt = [self.filters[0].push(ls.i_obs_dstar[0]), self.filters[1].push(ls.i_obs_dstar[1])];
        let tip = continuum::tip_position(&self.state.q, &self.plant.model);
        let contact = self.contact_flag(t);
        let ls = &self.loop_state;
        LogRow {
            t,
            i_cmd: ls.i_cmd,
            i_obs_star: ls.i_obs_star,
            i_obs_dstar: ls.i_obs_dstar,
            i_obs_dstar_filt: filt,
            u_ff: ls.u_ff,
            u_fb: ls.u_fb,
            f_cmd: ls.f_cmd,
            f_obs: ls.f_obs,
            dl: ls.dl,
            dl_dot: ls.dl_dot,
            theta_out: [ls.winch[0].theta, ls.winch[1].theta],
            tip,
            contact,
            setpoint,
            i_obs_star_raw: ls.i_obs_star_raw,
            e: ls.e,
            integral: ls.integral,
        }
    }

    /// Advances one control period and returns its log row.
    pub fn step(&mut self) -> Result<LogRow> {
        let dt = self.cfg.dt;
        let k = self.step + 1;
        let t0 = self.step as f64 * dt;
        let t = k as f64 * dt;
        let prev = self.loop_state;
        let i_sat = self.cfg.motor.i_sat;

        let mut i_cmd = [0.0; 2];
        let mut setpoint = [0.0; 2];
        for i in 0..2 {
            let obs = Observed { dl: prev.dl[i], dl_dot: prev.dl_dot[i], f_obs: prev.f_obs[i] };
            setpoint[i] = self.channels[i].setpoint_at(t);
            i_cmd[i] = outer_feedback(&self.channels[i], &obs, &mut self.outer_integral[i], t, dt, i_sat);
        }

        let dist = self.cfg.disturbance;
        let mut next = LoopState { t, i_cmd, ..prev };
        for i in 0..2 {
            let theta_m_dot = self.cfg.transmission.gear_ratio * prev.winch[i].theta_dot;
            let ja = step_ja(
                i_cmd[i],
                self.prev_cmd.map(|c| c[i]),
                prev.i_obs_dstar[i],
                self.elec[i],
                theta_m_dot,
                |s| dist.at(s),
                t0,
                dt,
                &self.cl,
            );
            self.elec[i] = ja.state;
            next.i_obs_star[i] = ja.i_obs_star;
            next.i_obs_star_raw[i] = ja.i_obs_star_raw;
            next.e[i] = ja.e;
            next.integral[i] = ja.state.integral;
            next.u_ff[i] = ja.u_ff;
            next.u_fb[i] = ja.u_fb;
            next.f_cmd[i] = step_jb(ja.i_obs_star, &prev.winch[i], &self.cfg.transmission, &self.cfg.motor);
        }
        self.prev_cmd = Some(i_cmd);

        let jc = step_jc(
            next.i_obs_star,
            prev.f_obs,
            &self.state,
            &prev.winch,
            &mut self.accel,
            &self.contact,
            t0,
            dt,
            &self.plant,
        )
        .map_err(|e| at_step(e, k))?;
        self.state = jc.state;
        next.winch = jc.winch;
        next.f_obs = jc.f_obs;
        next.i_obs_dstar = jc.i_obs_dstar;
        next.dl = jc.dl;
        next.dl_dot = jc.dl_dot;
        if !next.i_obs_star_raw.iter().chain(&next.i_obs_dstar).all(|v| v.is_finite()) {
            return Err(Error::Numerical { step: k, what: "non-finite current" });
        }
        self.loop_state = next;
        self.step = k;
        self.last_row = self.make_row(t, setpoint);
        Ok(self.last_row)
    }
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::Numerical { what, .. } => Error::Numerical { step, what },
        Error::NotPositiveDefinite { .. } => Error::Numerical { step, what: "mass matrix factorization failed" },
        other => other,
    }
}

fn new_log(cfg: &ScenarioConfig) -> TimeSeriesLog {
    TimeSeriesLog { dt: cfg.dt, header: config_entries(cfg), rows: Vec::with_capacity(cfg.steps() + 1) }
}

/// Runs the coupled loop for `floor(duration/dt)` cycles.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<TimeSeriesLog> {
    let mut sim = Simulator::new(cfg)?;
    let mut log = new_log(cfg);
    log.rows.push(*sim.row());
    for _ in 0..cfg.steps() {
        log.rows.push(sim.step()?);
    }
    Ok(log)
}

/// Reference "robot dynamics only" model: the commanded tendon force acts on
/// the chain at once, with no motor, controller or winch dynamics.
///
/// Force-mode setpoints are applied directly; other modes run the same outer
/// loop and convert its current to a static tendon force.
pub fn run_baseline(cfg: &ScenarioConfig) -> Result<TimeSeriesLog> {
    cfg.validate()?;
    let model = cfg.model();
    let fpa = cfg.transmission.force_per_amp(cfg.motor.torque_const);
    let i_sat = cfg.motor.i_sat;
    let mut log = new_log(cfg);
    let mut state = ContinuumState::zeros(model.n());
    let mut integral = [0.0; 2];
    let mut prev = LoopState::default();
    let mut filters = [MovingAverage::new(cfg.filter_window)?, MovingAverage::new(cfg.filter_window)?];
    let h = cfg.dt / cfg.substeps as f64;
    let row = |ls: &LoopState, st: &ContinuumState, filters: &mut [MovingAverage; 2], setpoint: [f64; 2]| LogRow {
        t: ls.t,
        i_cmd: ls.i_cmd,
        i_obs_star: ls.i_obs_star,
        i_obs_star_raw: ls.i_obs_star,
        i_obs_dstar: ls.i_obs_dstar,
        i_obs_dstar_filt: [filters[0].push(ls.i_obs_dstar[0]), filters[1].push(ls.i_obs_dstar[1])],
        f_cmd: ls.f_cmd,
        f_obs: ls.f_obs,
        dl: ls.dl,
        dl_dot: ls.dl_dot,
        theta_out: [ls.dl[0] / cfg.transmission.radius, ls.dl[1] / cfg.transmission.radius],
        tip: continuum::tip_position(&st.q, &model),
        setpoint,
        ..Default::default()
    };
    log.rows.push(row(&prev, &state, &mut filters, [cfg.tendons[0].setpoint_at(0.0), cfg.tendons[1].setpoint_at(0.0)]));
    for k in 1..=cfg.steps() {
        let t = k as f64 * cfg.dt;
        let t0 = t - cfg.dt;
        let mut f = [0.0; 2];
        let mut i_cmd = [0.0; 2];
        let mut setpoint = [0.0; 2];
        for i in 0..2 {
            let ch = &cfg.tendons[i];
            setpoint[i] = ch.setpoint_at(t);
            if ch.mode == FeedbackMode::Force {
                f[i] = setpoint[i].max(0.0);
                i_cmd[i] = f[i] / fpa;
            } else {
                let obs = Observed { dl: prev.dl[i], dl_dot: prev.dl_dot[i], f_obs: prev.f_obs[i] };
                i_cmd[i] = outer_feedback(ch, &obs, &mut integral[i], t, cfg.dt, i_sat);
                f[i] = (fpa * i_cmd[i]).max(0.0);
            }
        }
        for s in 0..cfg.substeps {
            state = step_dynamics(&state, f, &cfg.contact, t0 + s as f64 * h, h, &model).map_err(|e| at_step(e, k))?;
        }
        if !state.is_finite() {
            return Err(Error::Numerical { step: k, what: "non-finite plant state" });
        }
        prev = LoopState {
            t,
            i_cmd,
            i_obs_star: i_cmd,
            i_obs_dstar: [f[0] / fpa, f[1] / fpa],
            f_cmd: f,
            f_obs: f,
            dl: tendon_lengths(&state.q, &model),
            dl_dot: tendon_rates(&state.qdot, &model),
            ..prev
        };
        log.rows.push(row(&prev, &state, &mut filters, setpoint));
    }
    Ok(log)
}

/// 10–90 % rise time of `y` between its value at `start` and its final value.
pub fn rise_time(t: &[f64], y: &[f64], start: usize) -> Option<f64> {
    let y0 = *y.get(start)?;
    let y1 = *y.last()?;
    let span = y1 - y0;
    if span == 0.0 {
        return None;
    }
    let frac = |v: f64| (v - y0) / span;
    let t10 = (start..y.len()).find(|&k| frac(y[k]) >= 0.1)?;
    let t90 = (t10..y.len()).find(|&k| frac(y[k]) >= 0.9)?;
    Some(t[t90] - t[t10])
}

/// Lag (s) in `0..=max_lag` samples maximizing the normalized
/// cross-correlation of `obs` against `cmd`, both mean-removed.
pub fn xcorr_delay(cmd: &[f64], obs: &[f64], dt: f64, max_lag: usize) -> f64 {
    let n = cmd.len().min(obs.len());
    let mc = math::mean(&cmd[..n]);
    let mo = math::mean(&obs[..n]);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for lag in 0..=max_lag.min(n.saturating_sub(2)) {
        let m = n - lag;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for k in 0..m {
            let x = cmd[k] - mc;
            let y = obs[k + lag] - mo;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let denom = math::sqrt(sxx * syy);
        let r = if denom > 0.0 { sxy / denom } else { 0.0 };
        if r > best.0 {
            best = (r, lag);
        }
    }
    best.1 as f64 * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electrical::error_ode_oracle;
    use crate::scenario::ScenarioKind;

    fn electrical_only(dt: f64) -> CurrentLoop {
        CurrentLoop {
            motor: MotorElectricalParams::default(),
            gains: CurrentControllerGains::default(),
            v_supply: 24.0,
            substeps: (1e-6f64.recip() * dt).round() as usize,
        }
    }

    #[test]
    fn ja_first_cycle_at_rest_is_zero() {
        let cl = electrical_only(1e-3);
        let out = step_ja(0.0, None, 0.0, ElectricalState::default(), 0.0, |_| 0.0, 0.0, 1e-3, &cl);
        assert_eq!(out.i_obs_star, 0.0);
        assert_eq!(out.u_ff + out.u_fb, 0.0);
    }

    #[test]
    fn ja_clamps_to_saturation() {
        let cl = electrical_only(1e-3);
        let mut st = ElectricalState::default();
        let mut i = 0.0;
        let mut prev = None;
        let mut out = None;
        for _ in 0..200 {
            let o = step_ja(10.0, prev, i, st, 0.0, |_| 0.0, 0.0, 1e-3, &cl);
            st = o.state;
            i = o.i_obs_star_raw;
            prev = Some(10.0);
            out = Some(o);
        }
        let out = out.unwrap();
        assert_eq!(out.i_obs_star, 5.0);
        assert!(out.i_obs_star_raw > 5.0);
    }

    #[test]
    fn ja_matches_error_ode() {
        let dt = 1e-4;
        let cl = electrical_only(dt);
        let (m, g) = (cl.motor, cl.gains);
        let e0 = 1.0;
        let edot0 = -(m.resistance + g.kp) * e0 / (m.inductance + g.kd);
        let oracle = error_ode_oracle(&g, &m, |_| 0.0, e0, edot0, 1.0, dt).unwrap();
        let mut st = ElectricalState::default();
        let mut i = 0.0;
        let mut prev = None;
        let mut worst = 0.0f64;
        for (k, want) in oracle.iter().enumerate().skip(1) {
            let o = step_ja(1.0, prev, i, st, 0.0, |_| 0.0, (k - 1) as f64 * dt, dt, &cl);
            st = o.state;
            i = o.i_obs_star_raw;
            prev = Some(1.0);
            worst = worst.max((o.e - want).abs());
        }
        assert!(worst < 1e-3, "worst {worst}");
    }

    #[test]
    fn ja_equilibrium_needs_no_feedback() {
        let dt = 1e-3;
        let cl = electrical_only(dt);
        let mut st = ElectricalState::default();
        let mut i = 0.0;
        let mut prev = None;
        let mut last = None;
        for _ in 0..1000 {
            let o = step_ja(1.0, prev, i, st, 0.0, |_| 0.0, 0.0, dt, &cl);
            st = o.state;
            i = o.i_obs_star_raw;
            prev = Some(1.0);
            last = Some(o);
        }
        let o = last.unwrap();
        assert!(o.e.abs() < 1e-3 * 1.0);
        assert!(o.u_fb.abs() < 1e-3, "{}", o.u_fb);
        assert!((o.u_ff - 0.6).abs() < 1e-12);
    }

    #[test]
    fn jb_static_and_moving() {
        let p = TransmissionParams::default();
        let m = MotorElectricalParams::default();
        assert_eq!(step_jb(0.0, &WinchSide::default(), &p, &m), 0.0);
        let f = step_jb(1.0, &WinchSide::default(), &p, &m);
        assert!((f - p.eta * p.gear_ratio * m.torque_const / p.radius).abs() < 1e-9);
        let moving = WinchSide { theta_dot: 0.1, theta_ddot: 0.2, ..Default::default() };
        let g = step_jb(1.0, &moving, &p, &m);
        assert!((f - g - (p.j_eq() * 0.2 + p.b_eq() * 0.1) / p.radius).abs() < 1e-9);
    }

    #[test]
    fn jc_at_rest_stays_at_rest() {
        let cfg = ScenarioConfig::new(ScenarioKind::ForceStep);
        let plant = Plant {
            model: cfg.model(),
            transmission: cfg.transmission,
            motor: cfg.motor,
            tau_f: cfg.tau_f,
            substeps: 10,
        };
        let st = ContinuumState::zeros(24);
        let mut med = [Median5::default(), Median5::default()];
        let out = step_jc([0.0; 2], [0.0; 2], &st, &[WinchSide::default(); 2], &mut med, &ContactSpec::none(), 0.0, 1e-3, &plant)
            .unwrap();
        assert_eq!(out.state, st);
        assert_eq!(out.i_obs_dstar, [0.0, 0.0]);
    }

    #[test]
    fn outer_loop_cases() {
        let mut integral = 0.0;
        let ch = ChannelConfig::with_mode(FeedbackMode::Force, 0.0);
        assert_eq!(outer_feedback(&ch, &Observed::default(), &mut integral, 1.0, 1e-3, 5.0), 0.0);
        let ch = ChannelConfig::current(7.0);
        assert_eq!(outer_feedback(&ch, &Observed::default(), &mut integral, 1.0, 1e-3, 5.0), 5.0);
        let ch = ChannelConfig { kp: 1.0, ki: 100.0, ..ChannelConfig::with_mode(FeedbackMode::Velocity, 1.0) };
        for _ in 0..1000 {
            let u = outer_feedback(&ch, &Observed::default(), &mut integral, 1.0, 1e-3, 5.0);
            assert!(u.abs() <= 5.0);
        }
        // saturated: the integral stops growing
        assert!(integral <= 0.05);
    }

    #[test]
    fn zero_scenario_logs_zeros() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::ForceStep);
        cfg.tendons[0] = ChannelConfig::current(0.0);
        cfg.duration = 0.05;
        let log = run_scenario(&cfg).unwrap();
        assert_eq!(log.len(), 51);
        for r in &log.rows {
            let v = r.values();
            // tip_x is the straight chain length
            assert!(v[1..23].iter().chain(&v[24..]).all(|x| *x == 0.0), "{v:?}");
            assert_eq!(r.tip[1], 0.0);
        }
        for (k, r) in log.rows.iter().enumerate() {
            assert!((r.t - k as f64 * 1e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_current_chain_is_consistent() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::ForceStep);
        let i0 = 0.01;
        cfg.tendons[0] = ChannelConfig::current(i0);
        cfg.initial_pose = InitialPose::Equilibrium;
        cfg.duration = 0.3;
        let log = run_scenario(&cfg).unwrap();
        let last = log.rows.last().unwrap();
        let fpa = cfg.transmission.force_per_amp(cfg.motor.torque_const);
        assert!((last.i_obs_star[0] - i0).abs() < 0.01 * i0);
        assert!((last.i_obs_dstar[0] - i0).abs() < 0.01 * i0);
        assert!((last.f_obs[0] - fpa * i0).abs() < 0.01 * fpa * i0);
    }

    #[test]
    fn rise_and_delay_helpers() {
        let dt = 1e-3;
        let t: Vec<f64> = (0..1000).map(|k| k as f64 * dt).collect();
        let step: Vec<f64> = t.iter().map(|&s| if s >= 0.1 { 1.0 } else { 0.0 }).collect();
        let lag: Vec<f64> = t.iter().map(|&s| if s >= 0.13 { 1.0 } else { 0.0 }).collect();
        assert!((xcorr_delay(&step, &lag, dt, 200) - 0.03).abs() < 1e-12);
        let first: Vec<f64> = t.iter().map(|&s| if s >= 0.1 { 1.0 - (-(s - 0.1) / 0.02).exp() } else { 0.0 }).collect();
        let rt = rise_time(&t, &first, 0).unwrap();
        assert!((rt - 0.02 * 9f64.ln()).abs() < 2.0 * dt, "{rt}");
    }
}
