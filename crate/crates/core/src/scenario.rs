//! Declarative experiment description and its flat `key = value` text form.
//!
//! ```text
//! # comments start with '#'
//! scenario = force-step
//! dt = 0.001
//!
//! [transmission]
//! G = 1
//! ```
//!
//! A `[section]` header prefixes the keys below it (`transmission.G`); dotted
//! keys may also be written out in full. Unknown keys are rejected.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::continuum::{ContactKind, ContactSpec, ContinuumModel, Taper};
use crate::electrical::{CurrentControllerGains, MotorElectricalParams};
use crate::perception::DetectorConfig;
use crate::transmission::TransmissionParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ScenarioKind {
    ForceStep,
    ExtremeCurl,
    SingleContact,
    PeriodicContact,
    ActiveUncurl,
    WrapCylinder,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::ForceStep,
        ScenarioKind::ExtremeCurl,
        ScenarioKind::SingleContact,
        ScenarioKind::PeriodicContact,
        ScenarioKind::ActiveUncurl,
        ScenarioKind::WrapCylinder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::ForceStep => "force-step",
            ScenarioKind::ExtremeCurl => "extreme-curl",
            ScenarioKind::SingleContact => "single-contact",
            ScenarioKind::PeriodicContact => "periodic-contact",
            ScenarioKind::ActiveUncurl => "active-uncurl",
            ScenarioKind::WrapCylinder => "wrap-cylinder",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Which mechanical signal the outer loop regulates on one tendon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FeedbackMode {
    /// Setpoint is the current command itself (A).
    Current,
    /// Tendon displacement Δℓ (m).
    Displacement,
    /// Tendon rate Δℓ̇ (m/s).
    Velocity,
    /// Observed tendon force (N).
    Force,
}

impl FeedbackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackMode::Current => "current",
            FeedbackMode::Displacement => "displacement",
            FeedbackMode::Velocity => "velocity",
            FeedbackMode::Force => "force",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Current, Self::Displacement, Self::Velocity, Self::Force]
            .into_iter()
            .find(|m| m.as_str() == s)
    }

    /// PI gains `(k_p, k_i)` tuned for the default geared winch.
    pub fn default_gains(self) -> (f64, f64) {
        match self {
            FeedbackMode::Current => (0.0, 0.0),
            FeedbackMode::Displacement => (50.0, 10.0),
            FeedbackMode::Velocity => (100.0, 200.0),
            FeedbackMode::Force => (3.4e-3, 0.17),
        }
    }
}

/// Outer-loop setup of one tendon. The setpoint is zero before `onset`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelConfig {
    pub mode: FeedbackMode,
    pub setpoint: f64,
    pub onset: f64,
    pub kp: f64,
    pub ki: f64,
}

impl ChannelConfig {
    pub fn current(setpoint: f64) -> Self {
        Self { mode: FeedbackMode::Current, setpoint, onset: 0.0, kp: 0.0, ki: 0.0 }
    }

    pub fn with_mode(mode: FeedbackMode, setpoint: f64) -> Self {
        let (kp, ki) = mode.default_gains();
        Self { mode, setpoint, onset: 0.0, kp, ki }
    }

    pub fn setpoint_at(&self, t: f64) -> f64 {
        if t >= self.onset {
            self.setpoint
        } else {
            0.0
        }
    }
}

/// Disturbance voltage `d(t) = offset + amplitude·sin(2π f (t − onset))`
/// for `t ≥ onset`, applied to both motors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Disturbance {
    pub offset: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub onset: f64,
}

impl Disturbance {
    pub fn at(&self, t: f64) -> f64 {
        if t < self.onset {
            return 0.0;
        }
        let w = 2.0 * core::f64::consts::PI * self.frequency;
        self.offset + self.amplitude * crate::math::sin(w * (t - self.onset))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InitialPose {
    Straight,
    /// Every joint at `initial_curl`.
    Curled,
    /// Static balance of the tendon pull implied by the channels' initial
    /// current setpoints.
    Equilibrium,
}

impl InitialPose {
    pub fn as_str(self) -> &'static str {
        match self {
            InitialPose::Straight => "straight",
            InitialPose::Curled => "curled",
            InitialPose::Equilibrium => "equilibrium",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Straight, Self::Curled, Self::Equilibrium].into_iter().find(|p| p.as_str() == s)
    }
}

/// Settings of the active-uncurl scan.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UncurlConfig {
    /// Detector stays disarmed for this long after the start (s).
    pub arm_delay: f64,
    /// Tendon-0 rate while recoiling to the initial shape (m/s).
    pub recoil_speed: f64,
    /// Antagonist holding current during the uncurl (A).
    pub hold_current: f64,
}

impl Default for UncurlConfig {
    fn default() -> Self {
        Self { arm_delay: 0.3, recoil_speed: 0.01, hold_current: 0.002 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
    /// Control period (s).
    pub dt: f64,
    pub duration: f64,
    /// Moving-average length for the filtered reconstructed current.
    pub filter_window: usize,
    /// Plant substeps per control period.
    pub substeps: usize,
    /// Target electrical substep (s); rounded to a whole number per period.
    pub electrical_dt: f64,
    /// Also run the force-only reference model.
    pub baseline: bool,
    pub initial_pose: InitialPose,
    pub initial_curl: f64,
    pub motor: MotorElectricalParams,
    /// Supply rail (V).
    pub v_supply: f64,
    pub gains: CurrentControllerGains,
    pub transmission: TransmissionParams,
    /// Tendon-force tracking time constant (s).
    pub tau_f: f64,
    pub taper: Taper,
    pub joint_limit: f64,
    pub limit_stiffness: f64,
    pub limit_damping: f64,
    pub gravity: [f64; 2],
    pub tendons: [ChannelConfig; 2],
    pub contact: ContactSpec,
    pub disturbance: Disturbance,
    pub detector: DetectorConfig,
    pub uncurl: UncurlConfig,
}

/// Default centre abscissa of the wrapped cylinder (m).
pub const WRAP_X: f64 = 0.15;

/// Cylinder of `diameter` resting 1 mm above the straight chain at `x`, on
/// the side tendon 0 curls towards.
pub fn wrap_cylinder(diameter: f64, x: f64) -> ContactKind {
    ContactKind::Cylinder { center: [x, 0.5 * diameter + 0.001], diameter }
}

impl ScenarioConfig {
    /// Defaults for a scenario kind.
    pub fn new(kind: ScenarioKind) -> Self {
        let base_model = ContinuumModel::default();
        let mut cfg = Self {
            kind,
            seed: 0,
            dt: 0.001,
            duration: 1.0,
            filter_window: 100,
            substeps: 10,
            electrical_dt: 1e-6,
            baseline: false,
            initial_pose: InitialPose::Straight,
            initial_curl: 0.0,
            motor: MotorElectricalParams::default(),
            v_supply: 24.0,
            gains: CurrentControllerGains::default(),
            transmission: TransmissionParams::default(),
            tau_f: 0.02,
            taper: Taper::default(),
            joint_limit: base_model.joint_limit,
            limit_stiffness: base_model.limit_stiffness,
            limit_damping: base_model.limit_damping,
            gravity: base_model.gravity,
            tendons: [ChannelConfig::current(0.0), ChannelConfig::current(0.0)],
            contact: ContactSpec::none(),
            disturbance: Disturbance::default(),
            detector: DetectorConfig::default(),
            uncurl: UncurlConfig::default(),
        };
        match kind {
            ScenarioKind::ForceStep => {
                cfg.tendons[0] = ChannelConfig { onset: 0.05, ..ChannelConfig::with_mode(FeedbackMode::Force, 1.0) };
                cfg.baseline = true;
            }
            ScenarioKind::ExtremeCurl => {
                cfg.duration = 2.5;
                cfg.tendons[0] = ChannelConfig::with_mode(FeedbackMode::Velocity, 0.02);
            }
            ScenarioKind::SingleContact => {
                cfg.transmission.gear_ratio = 1.0;
                cfg.duration = 1.5;
                cfg.initial_pose = InitialPose::Equilibrium;
                cfg.tendons[0] = ChannelConfig::current(0.001);
                cfg.contact.kind = ContactKind::PointImpulse { link: 23, impulse: 2e-5, onset: 0.5, width: 0.001 };
            }
            ScenarioKind::PeriodicContact => {
                cfg.transmission.gear_ratio = 1.0;
                cfg.duration = 2.0;
                cfg.filter_window = 10;
                cfg.initial_pose = InitialPose::Equilibrium;
                cfg.tendons[0] = ChannelConfig::current(0.001);
                cfg.contact.kind = ContactKind::RotatingPusher {
                    link: 23,
                    magnitude: 0.002,
                    omega: 20.0 * core::f64::consts::PI,
                    onset: 0.2,
                };
                // background ripple of the drive electronics
                cfg.disturbance = Disturbance { offset: 0.0, amplitude: 0.001, frequency: 2.5, onset: 0.0 };
            }
            ScenarioKind::ActiveUncurl => {
                cfg.transmission.gear_ratio = 1.0;
                cfg.duration = 3.0;
                cfg.initial_pose = InitialPose::Curled;
                cfg.initial_curl = cfg.joint_limit;
                cfg.uncurl = UncurlConfig { arm_delay: 0.5, recoil_speed: 0.01, hold_current: 0.3 };
                cfg.detector.slope = 0.15;
                cfg.tendons[0] = ChannelConfig::current(cfg.uncurl.hold_current);
                cfg.tendons[1] = ChannelConfig { kp: 20.0, ki: 200.0, ..ChannelConfig::with_mode(FeedbackMode::Velocity, 0.01) };
            }
            ScenarioKind::WrapCylinder => {
                cfg.duration = 2.0;
                cfg.tendons[0] = ChannelConfig::with_mode(FeedbackMode::Velocity, 0.01);
                cfg.contact.kind = wrap_cylinder(0.04, WRAP_X);
                // near-rigid object
                cfg.contact.stiffness = 20000.0;
            }
        }
        cfg
    }

    pub fn model(&self) -> ContinuumModel {
        let mut m = ContinuumModel::tapered(&self.taper);
        m.joint_limit = self.joint_limit;
        m.limit_stiffness = self.limit_stiffness;
        m.limit_damping = self.limit_damping;
        m.gravity = self.gravity;
        m
    }

    /// Number of control steps; the log has one more row.
    pub fn steps(&self) -> usize {
        crate::math::floor(self.duration / self.dt + 1e-9) as usize
    }

    pub fn electrical_substeps(&self) -> usize {
        (crate::math::round(self.dt / self.electrical_dt) as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        fn pos(key: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(key, "must be finite and > 0"))
            }
        }
        fn nonneg(key: &str, v: f64) -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(key, "must be finite and >= 0"))
            }
        }
        pos("dt", self.dt)?;
        pos("duration", self.duration)?;
        if self.filter_window == 0 {
            return Err(config_err("filter_window", "must be >= 1"));
        }
        if self.substeps == 0 {
            return Err(config_err("substeps", "must be >= 1"));
        }
        pos("electrical_dt", self.electrical_dt)?;
        nonneg("initial_curl", self.initial_curl)?;
        pos("motor.v_supply", self.v_supply)?;
        pos("transmission.tau_F", self.tau_f)?;
        let wrap = |e: Error| match e {
            Error::InvalidParameter { name, reason } => config_err(name, reason),
            other => other,
        };
        self.motor.validate().map_err(wrap)?;
        self.gains.validate().map_err(wrap)?;
        self.transmission.validate().map_err(wrap)?;
        if !(self.taper.ratio > 0.0 && self.taper.ratio <= 1.0) {
            return Err(config_err("robot.taper_ratio", "must be in (0, 1]"));
        }
        pos("robot.damping_per_stiffness", self.taper.damping_per_stiffness)?;
        self.model().validate().map_err(wrap)?;
        for (i, ch) in self.tendons.iter().enumerate() {
            let sect = if i == 0 { "tendon0" } else { "tendon1" };
            nonneg(&format!("{sect}.kp"), ch.kp)?;
            nonneg(&format!("{sect}.ki"), ch.ki)?;
            if !ch.setpoint.is_finite() {
                return Err(config_err(&format!("{sect}.setpoint"), "must be finite"));
            }
            nonneg(&format!("{sect}.onset"), ch.onset)?;
        }
        self.contact.validate().map_err(wrap)?;
        self.detector.validate().map_err(wrap)?;
        Ok(())
    }
}

fn config_err(key: &str, reason: &str) -> Error {
    Error::Config { key: key.to_string(), reason: reason.to_string() }
}

fn contact_kind_name(k: &ContactKind) -> &'static str {
    match k {
        ContactKind::None => "none",
        ContactKind::PointImpulse { .. } => "point-impulse",
        ContactKind::RotatingPusher { .. } => "rotating-pusher",
        ContactKind::Cylinder { .. } => "cylinder",
    }
}

/// Flat view of every contact field; only those of the active kind are
/// serialized.
#[derive(Debug, Clone, Copy, Default)]
struct ContactFields {
    link: usize,
    impulse: f64,
    magnitude: f64,
    omega: f64,
    onset: f64,
    width: f64,
    center: [f64; 2],
    diameter: f64,
}

impl ContactFields {
    fn from_kind(k: &ContactKind) -> Self {
        let mut f = Self { width: 0.001, omega: 20.0 * core::f64::consts::PI, ..Default::default() };
        match *k {
            ContactKind::None => {}
            ContactKind::PointImpulse { link, impulse, onset, width } => {
                f.link = link;
                f.impulse = impulse;
                f.onset = onset;
                f.width = width;
            }
            ContactKind::RotatingPusher { link, magnitude, omega, onset } => {
                f.link = link;
                f.magnitude = magnitude;
                f.omega = omega;
                f.onset = onset;
            }
            ContactKind::Cylinder { center, diameter } => {
                f.center = center;
                f.diameter = diameter;
            }
        }
        f
    }

    fn build(&self, name: &str) -> Option<ContactKind> {
        Some(match name {
            "none" => ContactKind::None,
            "point-impulse" => ContactKind::PointImpulse {
                link: self.link,
                impulse: self.impulse,
                onset: self.onset,
                width: self.width,
            },
            "rotating-pusher" => ContactKind::RotatingPusher {
                link: self.link,
                magnitude: self.magnitude,
                omega: self.omega,
                onset: self.onset,
            },
            "cylinder" => ContactKind::Cylinder { center: self.center, diameter: self.diameter },
            _ => return None,
        })
    }
}

/// Splits a document into `(dotted key, value)` pairs in order of appearance.
fn tokenize(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                config_err(&format!("line {}", lineno + 1), "unterminated section header")
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(&format!("line {}", lineno + 1), "expected `key = value`"))?;
        let k = k.trim();
        let v = v.trim().trim_matches('"');
        let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        out.push((key, v.to_string()));
    }
    Ok(out)
}

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| config_err(key, "not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(config_err(key, "must be finite"))
    }
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| config_err(key, "not a non-negative integer"))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(config_err(key, "expected true or false")),
    }
}

/// Parses a configuration document and applies the scenario's defaults for
/// every key it does not set.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let pairs = tokenize(text)?;
    let kind_name = pairs
        .iter()
        .find(|(k, _)| k == "scenario")
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| config_err("scenario", "missing"))?;
    let kind = ScenarioKind::parse(kind_name).ok_or_else(|| config_err("scenario", "unknown scenario kind"))?;
    let mut cfg = ScenarioConfig::new(kind);
    let mut contact = ContactFields::from_kind(&cfg.contact.kind);
    let mut contact_kind = contact_kind_name(&cfg.contact.kind).to_string();
    let mut gains_given = [false; 2];
    let mut mode_given = [false; 2];

    for (key, v) in &pairs {
        let k = key.as_str();
        let v = v.as_str();
        if let Some(rest) = k.strip_prefix("tendon0.").or_else(|| k.strip_prefix("tendon1.")) {
            let i = usize::from(k.starts_with("tendon1"));
            let ch = &mut cfg.tendons[i];
            match rest {
                "mode" => {
                    ch.mode = FeedbackMode::parse(v).ok_or_else(|| config_err(k, "unknown feedback mode"))?;
                    mode_given[i] = true;
                }
                "setpoint" => ch.setpoint = num(k, v)?,
                "onset" => ch.onset = num(k, v)?,
                "kp" => {
                    ch.kp = num(k, v)?;
                    gains_given[i] = true;
                }
                "ki" => {
                    ch.ki = num(k, v)?;
                    gains_given[i] = true;
                }
                _ => return Err(config_err(k, "unknown key")),
            }
            continue;
        }
        match k {
            "scenario" => {}
            "seed" => cfg.seed = v.parse().map_err(|_| config_err(k, "not an unsigned integer"))?,
            "dt" => cfg.dt = num(k, v)?,
            "duration" => cfg.duration = num(k, v)?,
            "filter_window" => cfg.filter_window = count(k, v)?,
            "substeps" => cfg.substeps = count(k, v)?,
            "electrical_dt" => cfg.electrical_dt = num(k, v)?,
            "baseline" => cfg.baseline = boolean(k, v)?,
            "initial_pose" => {
                cfg.initial_pose = InitialPose::parse(v).ok_or_else(|| config_err(k, "unknown pose"))?
            }
            "initial_curl" => cfg.initial_curl = num(k, v)?,
            "motor.L" => cfg.motor.inductance = num(k, v)?,
            "motor.R" => cfg.motor.resistance = num(k, v)?,
            "motor.ke" => cfg.motor.back_emf = num(k, v)?,
            "motor.kt" => cfg.motor.torque_const = num(k, v)?,
            "motor.i_sat" => cfg.motor.i_sat = num(k, v)?,
            "motor.v_supply" => cfg.v_supply = num(k, v)?,
            "gains.kp" => cfg.gains.kp = num(k, v)?,
            "gains.ki" => cfg.gains.ki = num(k, v)?,
            "gains.kd" => cfg.gains.kd = num(k, v)?,
            "transmission.G" => cfg.transmission.gear_ratio = num(k, v)?,
            "transmission.eta" => cfg.transmission.eta = num(k, v)?,
            "transmission.J_m" => cfg.transmission.j_m = num(k, v)?,
            "transmission.b_m" => cfg.transmission.b_m = num(k, v)?,
            "transmission.r" => cfg.transmission.radius = num(k, v)?,
            "transmission.tau_F" => cfg.tau_f = num(k, v)?,
            "robot.taper_ratio" => cfg.taper.ratio = num(k, v)?,
            "robot.base_length" => cfg.taper.base_length = num(k, v)?,
            "robot.base_mass" => cfg.taper.base_mass = num(k, v)?,
            "robot.base_stiffness" => cfg.taper.base_stiffness = num(k, v)?,
            "robot.base_moment_arm" => cfg.taper.base_moment_arm = num(k, v)?,
            "robot.damping_per_stiffness" => cfg.taper.damping_per_stiffness = num(k, v)?,
            "robot.joint_limit" => cfg.joint_limit = num(k, v)?,
            "robot.limit_stiffness" => cfg.limit_stiffness = num(k, v)?,
            "robot.limit_damping" => cfg.limit_damping = num(k, v)?,
            "robot.gravity_x" => cfg.gravity[0] = num(k, v)?,
            "robot.gravity_y" => cfg.gravity[1] = num(k, v)?,
            "contact.kind" => contact_kind = v.to_string(),
            "contact.link" => contact.link = count(k, v)?,
            "contact.impulse" => contact.impulse = num(k, v)?,
            "contact.magnitude" => contact.magnitude = num(k, v)?,
            "contact.omega" => contact.omega = num(k, v)?,
            "contact.onset" => contact.onset = num(k, v)?,
            "contact.width" => contact.width = num(k, v)?,
            "contact.center_x" => contact.center[0] = num(k, v)?,
            "contact.center_y" => contact.center[1] = num(k, v)?,
            "contact.diameter" => contact.diameter = num(k, v)?,
            "contact.stiffness" => cfg.contact.stiffness = num(k, v)?,
            "contact.damping_ratio" => cfg.contact.damping_ratio = num(k, v)?,
            "disturbance.offset" => cfg.disturbance.offset = num(k, v)?,
            "disturbance.amplitude" => cfg.disturbance.amplitude = num(k, v)?,
            "disturbance.frequency" => cfg.disturbance.frequency = num(k, v)?,
            "disturbance.onset" => cfg.disturbance.onset = num(k, v)?,
            "detector.abs_rise" => cfg.detector.abs_rise = num(k, v)?,
            "detector.rel_rise" => cfg.detector.rel_rise = num(k, v)?,
            "detector.slope" => cfg.detector.slope = num(k, v)?,
            "detector.window" => cfg.detector.window = count(k, v)?,
            "detector.baseline_window" => cfg.detector.baseline_window = count(k, v)?,
            "detector.refractory" => cfg.detector.refractory = num(k, v)?,
            "uncurl.arm_delay" => cfg.uncurl.arm_delay = num(k, v)?,
            "uncurl.recoil_speed" => cfg.uncurl.recoil_speed = num(k, v)?,
            "uncurl.hold_current" => cfg.uncurl.hold_current = num(k, v)?,
            _ => return Err(config_err(k, "unknown key")),
        }
    }
    for i in 0..2 {
        if mode_given[i] && !gains_given[i] {
            let (kp, ki) = cfg.tendons[i].mode.default_gains();
            cfg.tendons[i].kp = kp;
            cfg.tendons[i].ki = ki;
        }
    }
    cfg.contact.kind =
        contact.build(&contact_kind).ok_or_else(|| config_err("contact.kind", "unknown contact kind"))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Every resolved key and value, in document order.
pub fn config_entries(cfg: &ScenarioConfig) -> Vec<(String, String)> {
    let mut e: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| e.push((k.to_string(), v));
    put("scenario", cfg.kind.as_str().to_string());
    put("seed", cfg.seed.to_string());
    put("dt", fmt_f(cfg.dt));
    put("duration", fmt_f(cfg.duration));
    put("filter_window", cfg.filter_window.to_string());
    put("substeps", cfg.substeps.to_string());
    put("electrical_dt", fmt_f(cfg.electrical_dt));
    put("baseline", cfg.baseline.to_string());
    put("initial_pose", cfg.initial_pose.as_str().to_string());
    put("initial_curl", fmt_f(cfg.initial_curl));
    put("motor.L", fmt_f(cfg.motor.inductance));
    put("motor.R", fmt_f(cfg.motor.resistance));
    put("motor.ke", fmt_f(cfg.motor.back_emf));
    put("motor.kt", fmt_f(cfg.motor.torque_const));
    put("motor.i_sat", fmt_f(cfg.motor.i_sat));
    put("motor.v_supply", fmt_f(cfg.v_supply));
    put("gains.kp", fmt_f(cfg.gains.kp));
    put("gains.ki", fmt_f(cfg.gains.ki));
    put("gains.kd", fmt_f(cfg.gains.kd));
    put("transmission.G", fmt_f(cfg.transmission.gear_ratio));
    put("transmission.eta", fmt_f(cfg.transmission.eta));
    put("transmission.J_m", fmt_f(cfg.transmission.j_m));
    put("transmission.b_m", fmt_f(cfg.transmission.b_m));
    put("transmission.r", fmt_f(cfg.transmission.radius));
    put("transmission.tau_F", fmt_f(cfg.tau_f));
    put("robot.taper_ratio", fmt_f(cfg.taper.ratio));
    put("robot.base_length", fmt_f(cfg.taper.base_length));
    put("robot.base_mass", fmt_f(cfg.taper.base_mass));
    put("robot.base_stiffness", fmt_f(cfg.taper.base_stiffness));
    put("robot.base_moment_arm", fmt_f(cfg.taper.base_moment_arm));
    put("robot.damping_per_stiffness", fmt_f(cfg.taper.damping_per_stiffness));
    put("robot.joint_limit", fmt_f(cfg.joint_limit));
    put("robot.limit_stiffness", fmt_f(cfg.limit_stiffness));
    put("robot.limit_damping", fmt_f(cfg.limit_damping));
    put("robot.gravity_x", fmt_f(cfg.gravity[0]));
    put("robot.gravity_y", fmt_f(cfg.gravity[1]));
    for (i, ch) in cfg.tendons.iter().enumerate() {
        let s = if i == 0 { "tendon0" } else { "tendon1" };
        put(&format!("{s}.mode"), ch.mode.as_str().to_string());
        put(&format!("{s}.setpoint"), fmt_f(ch.setpoint));
        put(&format!("{s}.onset"), fmt_f(ch.onset));
        put(&format!("{s}.kp"), fmt_f(ch.kp));
        put(&format!("{s}.ki"), fmt_f(ch.ki));
    }
    let c = ContactFields::from_kind(&cfg.contact.kind);
    put("contact.kind", contact_kind_name(&cfg.contact.kind).to_string());
    match cfg.contact.kind {
        ContactKind::None => {}
        ContactKind::PointImpulse { .. } => {
            put("contact.link", c.link.to_string());
            put("contact.impulse", fmt_f(c.impulse));
            put("contact.onset", fmt_f(c.onset));
            put("contact.width", fmt_f(c.width));
        }
        ContactKind::RotatingPusher { .. } => {
            put("contact.link", c.link.to_string());
            put("contact.magnitude", fmt_f(c.magnitude));
            put("contact.omega", fmt_f(c.omega));
            put("contact.onset", fmt_f(c.onset));
        }
        ContactKind::Cylinder { .. } => {
            put("contact.center_x", fmt_f(c.center[0]));
            put("contact.center_y", fmt_f(c.center[1]));
            put("contact.diameter", fmt_f(c.diameter));
        }
    }
    put("contact.stiffness", fmt_f(cfg.contact.stiffness));
    put("contact.damping_ratio", fmt_f(cfg.contact.damping_ratio));
    put("disturbance.offset", fmt_f(cfg.disturbance.offset));
    put("disturbance.amplitude", fmt_f(cfg.disturbance.amplitude));
    put("disturbance.frequency", fmt_f(cfg.disturbance.frequency));
    put("disturbance.onset", fmt_f(cfg.disturbance.onset));
    put("detector.abs_rise", fmt_f(cfg.detector.abs_rise));
    put("detector.rel_rise", fmt_f(cfg.detector.rel_rise));
    put("detector.slope", fmt_f(cfg.detector.slope));
    put("detector.window", cfg.detector.window.to_string());
    put("detector.baseline_window", cfg.detector.baseline_window.to_string());
    put("detector.refractory", fmt_f(cfg.detector.refractory));
    put("uncurl.arm_delay", fmt_f(cfg.uncurl.arm_delay));
    put("uncurl.recoil_speed", fmt_f(cfg.uncurl.recoil_speed));
    put("uncurl.hold_current", fmt_f(cfg.uncurl.hold_current));
    e
}

/// Shortest decimal form that parses back to the same bits.
fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

/// Document form of a resolved config; [`load_config`] reads it back exactly.
pub fn save_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut section = String::new();
    for (k, v) in config_entries(cfg) {
        let (sect, leaf) = match k.split_once('.') {
            Some((s, l)) => (s, l),
            None => ("", k.as_str()),
        };
        if sect != section {
            let _ = write!(out, "\n[{sect}]\n");
            section = sect.to_string();
        }
        let _ = writeln!(out, "{leaf} = {v}");
    }
    out
}
