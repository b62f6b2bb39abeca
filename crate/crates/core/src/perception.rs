//! Contact perception from the reconstructed motor current.

use alloc::vec::Vec;

use crate::continuum::{tendon_lengths, ContactKind, ContactSpec};
use crate::control::Simulator;
use crate::log::TimeSeriesLog;
use crate::scenario::{ChannelConfig, FeedbackMode, ScenarioConfig};
use crate::{math, Error, Result};

/// Thresholds of the rate-based contact observer.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorConfig {
    /// Absolute rise over baseline (A).
    pub abs_rise: f64,
    /// Rise as a fraction of |baseline|.
    pub rel_rise: f64,
    /// Least-squares slope over `window` samples (A/s).
    pub slope: f64,
    pub window: usize,
    /// Samples in the rolling-median baseline.
    pub baseline_window: usize,
    /// Dead time after an event (s).
    pub refractory: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { abs_rise: 0.8, rel_rise: 0.5, slope: 6.0, window: 50, baseline_window: 100, refractory: 0.3 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: "must be finite and > 0" })
            }
        };
        pos("abs_rise", self.abs_rise)?;
        pos("rel_rise", self.rel_rise)?;
        pos("slope", self.slope)?;
        if !(self.refractory.is_finite() && self.refractory >= 0.0) {
            return Err(Error::InvalidParameter { name: "refractory", reason: "must be finite and >= 0" });
        }
        if self.window < 2 {
            return Err(Error::InvalidParameter { name: "window", reason: "must be at least 2" });
        }
        if self.baseline_window < 2 {
            return Err(Error::InvalidParameter { name: "baseline_window", reason: "must be at least 2" });
        }
        Ok(())
    }

    /// Samples needed before the first decision.
    pub fn warmup(&self) -> usize {
        self.baseline_window.max(self.window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Abs,
    Rel,
    Slope,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Abs => "abs",
            Rule::Rel => "rel",
            Rule::Slope => "slope",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Rule::Abs, Rule::Rel, Rule::Slope].into_iter().find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub time: f64,
    pub rule: Rule,
    pub value: f64,
    pub baseline: f64,
}

// Comparisons at a threshold tolerate rounding in the slope fit.
const AT_THRESHOLD: f64 = 1e-9;

fn reaches(x: f64, threshold: f64) -> bool {
    x >= threshold * (1.0 - AT_THRESHOLD)
}

/// Streaming detector. Fires on the rising edge of "any rule holds", then
/// stays quiet for the refractory period.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    dt: f64,
    history: Vec<f64>,
    active: bool,
    last_event: Option<f64>,
    k: usize,
}

impl Detector {
    pub fn new(cfg: DetectorConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be finite and > 0" });
        }
        Ok(Self { cfg, dt, history: Vec::new(), active: false, last_event: None, k: 0 })
    }

    /// Median of the `baseline_window` samples before the newest one.
    pub fn baseline(&self) -> Option<f64> {
        let n = self.history.len();
        let b = self.cfg.baseline_window;
        (n > b).then(|| math::median(&self.history[n - 1 - b..n - 1]))
    }

    /// Least-squares slope over the last `window` samples (A/s).
    pub fn slope(&self) -> Option<f64> {
        let w = self.cfg.window;
        let n = self.history.len();
        if n < w {
            return None;
        }
        let ys = &self.history[n - w..];
        let xm = (w - 1) as f64 / 2.0;
        let ym = math::mean(ys);
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (j, y) in ys.iter().enumerate() {
            let x = j as f64 - xm;
            sxy += x * (y - ym);
            sxx += x * x;
        }
        Some(sxy / sxx / self.dt)
    }

    fn rule(&self, value: f64, baseline: f64) -> Option<Rule> {
        let rise = math::abs(value - baseline);
        if reaches(rise, self.cfg.abs_rise) {
            return Some(Rule::Abs);
        }
        if baseline != 0.0 && reaches(rise, self.cfg.rel_rise * math::abs(baseline)) {
            return Some(Rule::Rel);
        }
        if reaches(math::abs(self.slope()?), self.cfg.slope) {
            return Some(Rule::Slope);
        }
        None
    }

    /// Feeds one sample taken at `k·dt`.
    pub fn push(&mut self, value: f64) -> Option<ContactEvent> {
        let t = self.k as f64 * self.dt;
        self.k += 1;
        self.history.push(value);
        let keep = self.cfg.warmup() + 1;
        if self.history.len() > 4 * keep {
            self.history.drain(..self.history.len() - keep);
        }
        if self.history.len() < keep {
            return None;
        }
        let baseline = self.baseline()?;
        let rule = self.rule(value, baseline);
        let rising = rule.is_some() && !self.active;
        self.active = rule.is_some();
        let quiet = self.last_event.is_some_and(|te| t - te < self.cfg.refractory);
        if rising && !quiet {
            self.last_event = Some(t);
            return Some(ContactEvent { time: t, rule: rule?, value, baseline });
        }
        None
    }
}

/// Offline detector run over a whole trace.
pub fn detect_contact(trace: &[f64], dt: f64, cfg: &DetectorConfig) -> Result<Vec<ContactEvent>> {
    if trace.len() <= cfg.warmup() {
        return Err(Error::TraceTooShort { needed: cfg.warmup() + 1, got: trace.len() });
    }
    let mut det = Detector::new(*cfg, dt)?;
    Ok(trace.iter().filter_map(|&v| det.push(v)).collect())
}

/// Autocorrelation peaks below this are treated as noise.
pub const PERIOD_PROMINENCE: f64 = 0.3;

/// Lag of the first prominent autocorrelation peak of the linearly detrended
/// trace. A peak counts when the autocorrelation there exceeds
/// `PERIOD_PROMINENCE` and rises at least that much above the preceding
/// minimum.
pub fn apparent_period(trace: &[f64], dt: f64) -> Result<f64> {
    let n = trace.len();
    if n < 8 {
        return Err(Error::TraceTooShort { needed: 8, got: n });
    }
    let tm = (n - 1) as f64 / 2.0;
    let ym = math::mean(trace);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in trace.iter().enumerate() {
        let x = k as f64 - tm;
        sxy += x * (y - ym);
        sxx += x * x;
    }
    let b = sxy / sxx;
    let r: Vec<f64> = trace.iter().enumerate().map(|(k, y)| y - ym - b * (k as f64 - tm)).collect();
    let r0: f64 = r.iter().map(|v| v * v).sum();
    if r0 <= 0.0 || !r0.is_finite() {
        return Err(Error::PeriodNotRecoverable);
    }
    let max_lag = n / 2;
    let var = r0 / n as f64;
    let ac: Vec<f64> = (0..=max_lag)
        .map(|lag| {
            let s: f64 = r[..n - lag].iter().zip(&r[lag..]).map(|(a, c)| a * c).sum();
            s / (n - lag) as f64 / var
        })
        .collect();
    let mut lowest = ac[0];
    for lag in 1..max_lag {
        lowest = lowest.min(ac[lag]);
        if ac[lag] >= ac[lag - 1] && ac[lag] > ac[lag + 1] && ac[lag] > PERIOD_PROMINENCE && ac[lag] - lowest >= PERIOD_PROMINENCE {
            return Ok(lag as f64 * dt);
        }
    }
    Err(Error::PeriodNotRecoverable)
}

/// Same contact moved to `link`; cylinders and `None` are returned as is.
pub fn with_contact_link(kind: ContactKind, link: usize) -> ContactKind {
    match kind {
        ContactKind::PointImpulse { impulse, onset, width, .. } => ContactKind::PointImpulse { link, impulse, onset, width },
        ContactKind::RotatingPusher { magnitude, omega, onset, .. } => {
            ContactKind::RotatingPusher { link, magnitude, omega, onset }
        }
        other => other,
    }
}

/// Start time of a timed contact, 0 for the others.
pub fn contact_onset(kind: &ContactKind) -> f64 {
    match *kind {
        ContactKind::PointImpulse { onset, .. } | ContactKind::RotatingPusher { onset, .. } => onset,
        _ => 0.0,
    }
}

/// Peak |filtered i** − its value just before the contact onset| on tendon 0.
pub fn current_shift(log: &TimeSeriesLog, onset: f64) -> f64 {
    let t = log.times();
    let f = log.series(|r| r.i_obs_dstar_filt[0]);
    let k0 = t.iter().position(|&s| s >= onset).unwrap_or(t.len());
    if k0 == 0 || k0 >= t.len() {
        return 0.0;
    }
    let base = f[k0 - 1];
    f[k0..].iter().fold(0.0, |m, v| m.max(math::abs(v - base)))
}

/// One run per link with the same contact; returns the current shift per link.
pub fn sensitivity_profile(base: &ScenarioConfig, links: &[usize]) -> Result<Vec<f64>> {
    let onset = contact_onset(&base.contact.kind);
    links
        .iter()
        .map(|&link| {
            let mut cfg = base.clone();
            cfg.contact.kind = with_contact_link(base.contact.kind, link);
            let log = crate::control::run_scenario(&cfg)?;
            Ok(current_shift(&log, onset))
        })
        .collect()
}

/// Runs a periodic-contact config with the pusher moved to `link` and returns
/// the filtered tendon-0 current after onset.
pub fn periodic_trace(base: &ScenarioConfig, link: usize) -> Result<Vec<f64>> {
    let mut cfg = base.clone();
    cfg.contact.kind = with_contact_link(base.contact.kind, link);
    let onset = contact_onset(&cfg.contact.kind);
    let log = crate::control::run_scenario(&cfg)?;
    Ok(log.rows.iter().filter(|r| r.t >= onset).map(|r| r.i_obs_dstar_filt[0]).collect())
}

/// Outcome of an active-uncurl scan.
#[derive(Debug, Clone)]
pub struct UncurlOutcome {
    pub event: Option<ContactEvent>,
    pub log: TimeSeriesLog,
    /// First sample with the contact flag raised.
    pub first_contact: Option<f64>,
}

/// Uncurls with tendon 1 in velocity mode while tendon 0 holds a small
/// current, watching tendon 1's filtered current. On detection tendon 1
/// relaxes to the hold current and tendon 0 pulls back in velocity mode until
/// the starting curl is recovered.
///
/// Free runs end once the chain is straight.
pub fn active_uncurl_scan(cfg: &ScenarioConfig, obstacle: &ContactSpec, det: &DetectorConfig) -> Result<UncurlOutcome> {
    let mut cfg = cfg.clone();
    cfg.contact = *obstacle;
    let mut sim = Simulator::new(&cfg)?;
    let mut detector = Detector::new(*det, cfg.dt)?;
    let arm_after = math::round(cfg.uncurl.arm_delay / cfg.dt) as usize;
    let start_dl = tendon_lengths(&sim.state().q, sim.model())[0];
    let mut log = TimeSeriesLog { dt: cfg.dt, header: crate::scenario::config_entries(&cfg), rows: Vec::new() };
    log.rows.push(*sim.row());
    let mut event: Option<ContactEvent> = None;
    let mut first_contact = None;
    for k in 1..=cfg.steps() {
        let row = sim.step()?;
        log.rows.push(row);
        if row.contact && first_contact.is_none() {
            first_contact = Some(row.t);
        }
        match event {
            None => {
                if row.dl[0] <= 0.0 {
                    break;
                }
                if k < arm_after {
                    continue;
                }
                if let Some(mut e) = detector.push(row.i_obs_dstar_filt[1]) {
                    e.time = row.t;
                    event = Some(e);
                    sim.set_channel(1, ChannelConfig::current(cfg.uncurl.hold_current));
                    sim.set_channel(0, ChannelConfig::with_mode(FeedbackMode::Velocity, cfg.uncurl.recoil_speed));
                }
            }
            Some(_) => {
                if row.dl[0] >= start_dl {
                    break;
                }
            }
        }
    }
    Ok(UncurlOutcome { event, log, first_contact })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(math::correlation(&ranks(a), &ranks(b)))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut out = alloc::vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            out[p] = r;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn trace(n: usize, f: impl FnMut(usize) -> f64) -> Vec<f64> {
        (0..n).map(f).collect()
    }

    #[test]
    fn constant_trace_has_no_events() {
        let cfg = DetectorConfig::default();
        assert!(detect_contact(&[1.3; 1000], 1e-3, &cfg).unwrap().is_empty());
    }

    #[test]
    fn short_trace_is_rejected() {
        let cfg = DetectorConfig::default();
        assert!(matches!(detect_contact(&[0.0; 100], 1e-3, &cfg), Err(Error::TraceTooShort { .. })));
    }

    #[test]
    fn ramp_triggers_slope_rule() {
        let dt = 1e-3;
        let x = trace(1000, |k| {
            let t = k as f64 * dt;
            1.0 + ((t - 0.5) / 0.05).clamp(0.0, 1.0)
        });
        let ev = detect_contact(&x, dt, &DetectorConfig::default()).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].rule, Rule::Slope);
        assert!(ev[0].time - 0.5 < 0.1);
    }

    #[test]
    fn small_baseline_step_triggers_rel_rule() {
        let dt = 1e-2;
        let x = trace(400, |k| if k < 200 { 0.1 } else { 0.2 });
        let ev = detect_contact(&x, dt, &DetectorConfig::default()).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].rule, Rule::Rel);
    }

    #[test]
    fn rules_parse() {
        for r in [Rule::Abs, Rule::Rel, Rule::Slope] {
            assert_eq!(Rule::parse(r.as_str()), Some(r));
        }
    }

    #[test]
    fn refractory_suppresses_bursts() {
        let dt = 1e-2;
        let cfg = DetectorConfig { refractory: 1.0, ..Default::default() };
        let x = trace(600, |k| match k {
            200..=201 => 5.0,
            205..=206 => 5.0,
            _ => 2.0,
        });
        assert_eq!(detect_contact(&x, dt, &cfg).unwrap().len(), 1);
        let cfg = DetectorConfig { refractory: 0.0, ..cfg };
        assert_eq!(detect_contact(&x, dt, &cfg).unwrap().len(), 2);
    }

    #[test]
    fn sinusoid_period() {
        let dt = 1e-3;
        let x = trace(2000, |k| math::sin(2.0 * core::f64::consts::PI * k as f64 * dt / 0.1));
        let p = apparent_period(&x, dt).unwrap();
        assert!((p - 0.1).abs() <= dt, "{p}");
    }

    #[test]
    fn period_survives_trend() {
        let dt = 1e-3;
        let x = trace(2000, |k| 0.3 * k as f64 * dt + math::sin(2.0 * core::f64::consts::PI * k as f64 * dt / 0.1));
        assert!((apparent_period(&x, dt).unwrap() - 0.1).abs() <= dt);
    }

    #[test]
    fn white_noise_has_no_period() {
        let mut rng = Stream::new(7, 0);
        let x = trace(2000, |_| rng.normal());
        assert_eq!(apparent_period(&x, 1e-3), Err(Error::PeriodNotRecoverable));
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), [2.5, 1.0, 2.5]);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        assert!(DetectorConfig { window: 1, ..Default::default() }.validate().is_err());
        assert!(DetectorConfig { slope: 0.0, ..Default::default() }.validate().is_err());
    }
}
