//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs sequentially (no libtest harness) so the runtime bounds are measured
//! without other tests competing for the CPU.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use multidyn::csvlog::write_log;
use multidyn_core::continuum::{
    energy, step_dynamics, tendon_jacobian, tendon_lengths, ContactKind, ContactSpec, ContinuumModel, ContinuumState,
};
use multidyn_core::control::{rise_time, run_baseline, run_scenario, step_ja, xcorr_delay, CurrentLoop};
use multidyn_core::electrical::{error_ode_oracle, torque_from_current, CurrentControllerGains, ElectricalState, MotorElectricalParams};
use multidyn_core::ident::{default_excitation, identify, simulate_trace, IdentProblem};
use multidyn_core::log::TimeSeriesLog;
use multidyn_core::perception::{
    active_uncurl_scan, apparent_period, detect_contact, periodic_trace, sensitivity_profile, spearman, DetectorConfig, Rule,
};
use multidyn_core::rng::Stream;
use multidyn_core::scenario::{ScenarioConfig, ScenarioKind};
use multidyn_core::sizeest::{default_diameters, default_wrap_config, generate_dataset, holdout_evaluation, metrics, EnsembleParams};
use multidyn_core::transmission::{output_torque, reconstruct_current, signed_tendon_force, TransmissionParams, WinchSide};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn jacobian_oracle() -> Outcome {
    let start = Instant::now();
    let m = ContinuumModel::default();
    let n = m.link_lengths.len();
    let mut rng = Stream::new(101, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let q: Vec<f64> = (0..n).map(|_| rng.range(-0.35, 0.35)).collect();
        let jac = tendon_jacobian(&q, &m);
        for j in 0..n {
            let (mut qp, mut qm) = (q.clone(), q.clone());
            qp[j] += 1e-6;
            qm[j] -= 1e-6;
            let (lp, lm) = (tendon_lengths(&qp, &m), tendon_lengths(&qm, &m));
            for i in 0..2 {
                worst = worst.max((jac[i][j] - (lp[i] - lm[i]) / 2e-6).abs());
            }
        }
    }
    let t = start.elapsed();
    outcome(worst < 1e-8 && within(t, 1.0), format!("max |J - FD| = {worst:.2e}, {:.3} s", t.as_secs_f64()))
}

fn current_round_trip() -> Outcome {
    let p = TransmissionParams::default();
    let m = MotorElectricalParams::default();
    let mut rng = Stream::new(102, 0);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let i = rng.range(-5.0, 5.0);
        let side = WinchSide { index: k % 2, theta: rng.range(-20.0, 20.0), theta_dot: 0.0, theta_ddot: 0.0 };
        let f = signed_tendon_force(output_torque(torque_from_current(i, &m), &p), &side, &p);
        let back = reconstruct_current(&side, f, &p, m.torque_const);
        worst = worst.max((back - i).abs() / i.abs());
    }
    outcome(worst < 1e-12, format!("max relative error {worst:.2e}"))
}

fn error_ode() -> Outcome {
    let dt = 1e-4;
    let cl = CurrentLoop {
        motor: MotorElectricalParams::default(),
        gains: CurrentControllerGains::default(),
        v_supply: 24.0,
        substeps: (dt / 1e-6f64).round() as usize,
    };
    let (m, g) = (cl.motor, cl.gains);
    let e0 = 1.0;
    let edot0 = -(m.resistance + g.kp) * e0 / (m.inductance + g.kd);
    let oracle = match error_ode_oracle(&g, &m, |_| 0.0, e0, edot0, 1.0, dt) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("oracle failed: {e}")),
    };
    let (mut st, mut i, mut prev) = (ElectricalState::default(), 0.0, None);
    let mut worst = 0.0f64;
    for (k, want) in oracle.iter().enumerate().skip(1) {
        let o = step_ja(1.0, prev, i, st, 0.0, |_| 0.0, (k - 1) as f64 * dt, dt, &cl);
        st = o.state;
        i = o.i_obs_star_raw;
        prev = Some(1.0);
        worst = worst.max((o.e - want).abs());
    }
    outcome(worst < 1e-3, format!("max |e - oracle| = {worst:.2e} A over {} samples", oracle.len() - 1))
}

fn step_metrics(log: &TimeSeriesLog) -> (f64, f64) {
    let t = log.times();
    let sp = log.series(|r| r.setpoint[0]);
    let f = log.series(|r| r.f_obs[0]);
    let start = sp.iter().position(|v| *v != sp[0]).map_or(0, |k| k - 1);
    (xcorr_delay(&sp, &f, log.dt, 300), rise_time(&t, &f, start).unwrap_or(f64::NAN))
}

fn hysteresis_delay() -> Outcome {
    let cfg = ScenarioConfig::new(ScenarioKind::ForceStep);
    let t0 = Instant::now();
    let full = run_scenario(&cfg);
    let t_full = t0.elapsed();
    let t0 = Instant::now();
    let base = run_baseline(&cfg);
    let t_base = t0.elapsed();
    let (Ok(full), Ok(base)) = (full, base) else { return outcome(false, "simulation failed".into()) };
    let (d, r) = step_metrics(&full);
    let (bd, br) = step_metrics(&base);
    let pass = d > 0.010 && r > br && bd <= 2.0 * cfg.dt + 1e-12 && within(t_full, 5.0) && within(t_base, 5.0);
    outcome(
        pass,
        format!(
            "delay {:.1} ms (baseline {:.1} ms), rise {:.1} ms (baseline {:.1} ms), {:.2} s + {:.2} s",
            d * 1e3,
            bd * 1e3,
            r * 1e3,
            br * 1e3,
            t_full.as_secs_f64(),
            t_base.as_secs_f64()
        ),
    )
}

fn extreme_curl() -> Outcome {
    let cfg = ScenarioConfig::new(ScenarioKind::ExtremeCurl);
    let Ok(log) = run_scenario(&cfg) else { return outcome(false, "simulation failed".into()) };
    let v = log.series(|r| r.dl_dot[0]);
    let free = v.iter().fold(0.0f64, |a, b| a.max(*b));
    let collapsed = v.iter().skip_while(|x| **x < free).any(|x| *x < 0.05 * free);
    let i_sat = cfg.motor.i_sat;
    let reached = log.rows.iter().any(|r| r.i_cmd[0].abs() >= i_sat && r.i_obs_star[0].abs() >= i_sat * (1.0 - 1e-9));
    let bounded = log.rows.iter().all(|r| (0..2).all(|k| r.i_cmd[k].abs() <= i_sat && r.i_obs_star[k].abs() <= i_sat));
    let last = v[v.len() - 1];
    outcome(
        collapsed && reached && bounded,
        format!(
            "free rate {:.2} mm/s, final {:.3} mm/s, clamp reached {reached}, bounded {bounded}",
            free * 1e3,
            last * 1e3
        ),
    )
}

fn sensitivity_gradient() -> Outcome {
    let cfg = ScenarioConfig::new(ScenarioKind::SingleContact);
    let links = [2usize, 8, 14, 20, 23];
    let Ok(shift) = sensitivity_profile(&cfg, &links) else { return outcome(false, "simulation failed".into()) };
    let idx: Vec<f64> = links.iter().map(|&l| l as f64).collect();
    let rho = spearman(&idx, &shift).unwrap_or(f64::NAN);
    let ratio = shift[4] / shift[0];
    outcome(ratio >= 2.0 && rho >= 0.8, format!("tip/base shift {ratio:.2}, Spearman {rho:.2}"))
}

fn periodic_fidelity() -> Outcome {
    let cfg = ScenarioConfig::new(ScenarioKind::PeriodicContact);
    let mut err = Vec::new();
    for link in [23usize, 12, 2] {
        let Ok(tr) = periodic_trace(&cfg, link) else { return outcome(false, "simulation failed".into()) };
        let p = apparent_period(&tr, cfg.dt).unwrap_or(f64::INFINITY);
        err.push((p - 0.1).abs());
    }
    outcome(
        err[0] < err[1] && err[1] < err[2],
        format!("|period error| tip {:.3} s, mid {:.3} s, base {:.3} s", err[0], err[1], err[2]),
    )
}

fn detector_rules() -> Outcome {
    let d = DetectorConfig::default();
    let step = |dt: f64, base: f64, rise: f64| -> (f64, Vec<f64>) {
        (dt, (0..600).map(|k| if k >= 300 { base + rise } else { base }).collect())
    };
    let ramp = |slope: f64| -> (f64, Vec<f64>) {
        let dt = 1e-3;
        (dt, (0..1000).map(|k| 2.0 + slope * dt * (k.clamp(300, 400) - 300) as f64).collect())
    };
    let cases: [(Rule, f64, (f64, Vec<f64>), (f64, Vec<f64>)); 3] = [
        (Rule::Abs, d.abs_rise, step(0.01, 2.0, d.abs_rise), step(0.01, 2.0, 0.9 * d.abs_rise)),
        (Rule::Rel, d.rel_rise, step(0.01, 0.4, d.rel_rise * 0.4), step(0.01, 0.4, 0.9 * d.rel_rise * 0.4)),
        (Rule::Slope, d.slope, ramp(d.slope), ramp(0.9 * d.slope)),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (rule, _, (dt, at), (dt9, below)) in &cases {
        let ev = detect_contact(at, *dt, &d).unwrap_or_default();
        let quiet = detect_contact(below, *dt9, &d).unwrap_or_default();
        let ok = ev.len() == 1 && ev[0].rule == *rule && quiet.is_empty();
        pass &= ok;
        notes.push(format!("{} {}/{}", rule.as_str(), ev.len(), quiet.len()));
    }
    outcome(pass, format!("events at/at 90 %: {}", notes.join(", ")))
}

fn active_detection() -> Outcome {
    let base = ScenarioConfig::new(ScenarioKind::ActiveUncurl);
    let det = base.detector;
    let mut rng = Stream::new(109, 0);
    let mut false_events = 0;
    for _ in 0..10 {
        let mut c = base.clone();
        c.initial_curl = base.joint_limit * rng.range(0.7, 1.0);
        c.tendons[1].setpoint = base.tendons[1].setpoint * rng.range(0.8, 1.2);
        match active_uncurl_scan(&c, &ContactSpec::none(), &det) {
            Ok(o) => false_events += usize::from(o.event.is_some()),
            Err(_) => return outcome(false, "free run failed".into()),
        }
    }
    let Ok(nominal) = active_uncurl_scan(&base, &ContactSpec::none(), &det) else {
        return outcome(false, "nominal run failed".into());
    };
    let rows = &nominal.log.rows;
    let mut detected = 0;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        // cylinder touching the tip path ahead of the free-motion tip
        let th = rng.range(0.7, 2.0);
        let dia = rng.range(0.015, 0.03);
        let k = ((th / base.dt) as usize).min(rows.len() - 11);
        let (a, b) = (rows[k].tip, rows[k + 10].tip);
        let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
        let n = (vx * vx + vy * vy).sqrt().max(1e-12);
        let center = [a[0] + vx / n * dia / 2.0, a[1] + vy / n * dia / 2.0];
        let ob = ContactSpec { kind: ContactKind::Cylinder { center, diameter: dia }, ..base.contact };
        let Ok(o) = active_uncurl_scan(&base, &ob, &det) else { return outcome(false, "placement run failed".into()) };
        let latency = match (o.first_contact, o.event) {
            (Some(tc), Some(e)) => e.time - tc,
            _ => f64::INFINITY,
        };
        if latency < 0.1 {
            detected += 1;
        }
        worst = worst.max(latency);
    }
    outcome(
        detected == 10 && false_events == 0,
        format!("{detected}/10 placements detected within 100 ms (worst {:.0} ms), {false_events} events in 10 free runs", worst * 1e3),
    )
}

fn ident_recovery() -> Outcome {
    let start = Instant::now();
    let base = ScenarioConfig::new(ScenarioKind::ForceStep);
    let p_true = [0.85, 1e-4, 5e-5];
    let ex = default_excitation(&base);
    let Ok(reference) = simulate_trace(&p_true, &ex) else { return outcome(false, "synthetic data failed".into()) };
    let times: Vec<f64> = (0..reference.len()).map(|k| k as f64 * base.dt).collect();
    let prob = IdentProblem::new(times, reference, &base);
    let res = match identify(&prob) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("identify failed: {e}")),
    };
    let t = start.elapsed();
    let p = res.p_star;
    let factor = |a: f64, b: f64| a / b <= 2.0 && b / a <= 2.0;
    let monotone = res.best_so_far.windows(2).all(|w| w[1] <= w[0]);
    let pass = (p[0] - p_true[0]).abs() <= 0.05
        && factor(p[1], p_true[1])
        && factor(p[2], p_true[2])
        && monotone
        && prob.starts == 8
        && within(t, 60.0);
    outcome(
        pass,
        format!(
            "eta {:.4}, b_m {:.3e}, J_m {:.3e}, monotone {monotone}, {} evals, {:.1} s",
            p[0],
            p[1],
            p[2],
            res.evaluations,
            t.as_secs_f64()
        ),
    )
}

fn size_estimation() -> Outcome {
    let start = Instant::now();
    let ds = match generate_dataset(&default_wrap_config(), &default_diameters(), 5, 0) {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("dataset failed: {e}")),
    };
    let n = ds.samples.len();
    let h = match holdout_evaluation(&ds.samples, &EnsembleParams::default(), 0) {
        Ok(h) => h,
        Err(e) => return outcome(false, format!("training failed: {e}")),
    };
    let t = start.elapsed();
    let increasing = h.per_label.windows(2).all(|w| w[1].1 > w[0].1);
    let pass = n == 35 && h.metrics.mae <= 3e-3 && h.metrics.r2 >= 0.9 && increasing && within(t, 120.0);
    outcome(
        pass,
        format!(
            "{n} samples, MAE {:.3} mm, R2 {:.4}, per-diameter means increasing {increasing}, {:.1} s",
            h.metrics.mae * 1e3,
            h.metrics.r2,
            t.as_secs_f64()
        ),
    )
}

fn metrics_exact() -> Outcome {
    match metrics(&[10.0, 20.0, 30.0], &[12.0, 18.0, 33.0]) {
        Ok(m) => {
            let (e1, e2) = ((m.mae - 7.0 / 3.0).abs(), (m.r2 - 0.915).abs());
            outcome(e1 < 1e-12 && e2 < 1e-12, format!("MAE {} R2 {}", m.mae, m.r2))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn determinism() -> Outcome {
    let Ok(dir) = tempfile::tempdir() else { return outcome(false, "no temp dir".into()) };
    let mut same = 0;
    for kind in ScenarioKind::ALL {
        let mut cfg = ScenarioConfig::new(kind);
        cfg.seed = 17;
        let mut bytes = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{}_{run}.csv", kind.as_str()));
            let ok = run_scenario(&cfg).ok().and_then(|log| write_log(&path, &log).ok()).is_some();
            if !ok {
                return outcome(false, format!("{} failed", kind.as_str()));
            }
            bytes.push(std::fs::read(&path).unwrap_or_default());
        }
        same += usize::from(!bytes[0].is_empty() && bytes[0] == bytes[1]);
    }
    let total = ScenarioKind::ALL.len();
    outcome(same == total, format!("{same}/{total} scenario logs byte-identical on rerun"))
}

fn passivity() -> Outcome {
    let m = ContinuumModel::default();
    let n = m.link_lengths.len();
    let mut rng = Stream::new(114, 0);
    let mut st = ContinuumState {
        q: (0..n).map(|_| rng.range(-0.2, 0.2)).collect(),
        qdot: (0..n).map(|_| rng.range(-0.5, 0.5)).collect(),
    };
    let dt = 1e-3;
    let mut e = energy(&st, &m);
    let mut increases = 0;
    for k in 0..10_000 {
        st = match step_dynamics(&st, [0.0, 0.0], &ContactSpec::none(), k as f64 * dt, dt, &m) {
            Ok(s) => s,
            Err(err) => return outcome(false, format!("step {k}: {err}")),
        };
        let e1 = energy(&st, &m);
        if e1 > e + 1e-9 * e.abs() {
            increases += 1;
        }
        e = e1;
    }
    let vmax = st.qdot.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    outcome(increases == 0 && vmax < 1e-3, format!("{increases} energy increases, |qdot|max {vmax:.2e} at 10 s"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("jacobian oracle", jacobian_oracle),
        ("current round trip", current_round_trip),
        ("closed-loop error ODE", error_ode),
        ("hysteresis and delay", hysteresis_delay),
        ("extreme curl", extreme_curl),
        ("passive sensitivity gradient", sensitivity_gradient),
        ("periodic fidelity gradient", periodic_fidelity),
        ("detector rules", detector_rules),
        ("active detection", active_detection),
        ("identification self-recovery", ident_recovery),
        ("size estimation", size_estimation),
        ("metrics exactness", metrics_exact),
        ("determinism", determinism),
        ("passivity", passivity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{:02}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|s| *s == id || name.contains(s.as_str())) {
            continue;
        }
        let o = f();
        failed += usize::from(!o.pass);
        println!("criterion {id} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
