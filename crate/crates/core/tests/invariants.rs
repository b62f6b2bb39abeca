use multidyn_core::continuum::{step_dynamics, tendon_jacobian, tendon_lengths, ContactSpec, ContinuumModel, ContinuumState};
use multidyn_core::control::{step_ja, CurrentLoop};
use multidyn_core::electrical::{torque_from_current, CurrentControllerGains, ElectricalState, MotorElectricalParams};
use multidyn_core::ident::{default_excitation, identify, simulate_trace, IdentProblem};
use multidyn_core::perception::{detect_contact, DetectorConfig};
use multidyn_core::scenario::{load_config, save_config, ScenarioConfig, ScenarioKind};
use multidyn_core::sizeest::{train_boosting, train_ridge, train_svr, BoostParams, SvrParams};
use multidyn_core::transmission::{
    current_to_force, output_torque, reconstruct_current, signed_tendon_force, TransmissionParams, WinchSide,
};
use proptest::prelude::*;

fn dataset(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut s = multidyn_core::rng::Stream::new(seed, 9);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| s.range(-1.0, 1.0)).collect()).collect();
    let y = x.iter().map(|r| 0.03 + 0.01 * r[0] - 0.005 * r[1] * r[2] + 1e-3 * s.normal()).collect();
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip(
        kind in 0usize..6,
        seed in any::<u64>(),
        dt in 1e-4f64..1e-2,
        duration in 0.1f64..5.0,
        window in 1usize..300,
        kp in 0.5f64..20.0,
        eta in 0.61f64..1.0,
        setpoint in -2.0f64..2.0,
    ) {
        let mut cfg = ScenarioConfig::new(ScenarioKind::ALL[kind]);
        cfg.seed = seed;
        cfg.dt = dt;
        cfg.duration = duration;
        cfg.filter_window = window;
        cfg.gains.kp = kp;
        cfg.transmission.eta = eta;
        cfg.tendons[1].setpoint = setpoint;
        let back = load_config(&save_config(&cfg)).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn current_round_trip(i in -5.0f64..5.0, theta in -50.0f64..50.0, eta in 0.61f64..1.0, g in 1.0f64..60.0) {
        prop_assume!(i.abs() > 1e-9);
        let p = TransmissionParams { eta, gear_ratio: g, ..TransmissionParams::default() };
        let m = MotorElectricalParams::default();
        let side = WinchSide { theta, ..WinchSide::default() };
        let f = signed_tendon_force(output_torque(torque_from_current(i, &m), &p), &side, &p);
        let back = reconstruct_current(&side, f, &p, m.torque_const);
        prop_assert!((back - i).abs() / i.abs() < 1e-12);
    }

    #[test]
    fn reconstruction_is_increasing_in_force(f in -10.0f64..10.0, df in 1e-6f64..5.0, w in -5.0f64..5.0, a in -50.0f64..50.0) {
        let p = TransmissionParams::default();
        let side = WinchSide { theta_dot: w, theta_ddot: a, ..WinchSide::default() };
        let kt = MotorElectricalParams::default().torque_const;
        prop_assert!(reconstruct_current(&side, f + df, &p, kt) > reconstruct_current(&side, f, &p, kt));
    }

    #[test]
    fn static_force_scales_with_gear(i in 0.01f64..5.0, g in 1.0f64..30.0) {
        let m = MotorElectricalParams::default();
        let p1 = TransmissionParams { gear_ratio: g, ..TransmissionParams::default() };
        let p2 = TransmissionParams { gear_ratio: 2.0 * g, ..p1 };
        let f1 = current_to_force(i, &WinchSide::default(), &p1, &m);
        let f2 = current_to_force(i, &WinchSide::default(), &p2, &m);
        prop_assert!((f2 / f1 - 2.0).abs() < 1e-12);
        let want = p1.eta * g * m.torque_const * i / p1.radius;
        prop_assert!((f1 - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn detector_is_deterministic(seed in any::<u64>(), at in 150usize..900, rise in 0.0f64..3.0) {
        let mut s = multidyn_core::rng::Stream::new(seed, 3);
        let x: Vec<f64> = (0..1000).map(|k| 1.0 + 0.01 * s.normal() + if k >= at { rise } else { 0.0 }).collect();
        let a = detect_contact(&x, 1e-3, &DetectorConfig::default()).unwrap();
        let b = detect_contact(&x, 1e-3, &DetectorConfig::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn step_error_converges(kp in 1.0f64..8.0, ki in 200.0f64..800.0, kd in 0.0f64..0.005, cmd in 0.1f64..4.0) {
        let dt = 1e-3;
        let cl = CurrentLoop {
            motor: MotorElectricalParams::default(),
            gains: CurrentControllerGains { kp, ki, kd },
            v_supply: 1e3,
            substeps: 1000,
        };
        let (mut st, mut i, mut prev) = (ElectricalState::default(), 0.0, None);
        let mut last = f64::INFINITY;
        for k in 0..500 {
            let o = step_ja(cmd, prev, i, st, 0.0, |_| 0.0, k as f64 * dt, dt, &cl);
            st = o.state;
            i = o.i_obs_star_raw;
            prev = Some(cmd);
            last = o.e;
        }
        prop_assert!(last.abs() < 1e-3 * cmd, "e = {last}");
    }

    #[test]
    fn ridge_gradient_vanishes(seed in any::<u64>(), n in 6usize..30, lambda in 0.01f64..10.0) {
        let (x, y) = dataset(n, seed);
        let r = train_ridge(&x, &y, lambda).unwrap();
        let mut g = vec![0.0; 3];
        for (row, t) in x.iter().zip(&y) {
            let e = t - r.predict(row);
            for j in 0..3 {
                g[j] -= 2.0 * e * row[j];
            }
        }
        for j in 0..3 {
            g[j] += 2.0 * lambda * r.weights[j];
        }
        prop_assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8);
    }

    #[test]
    fn svr_dual_is_feasible(seed in any::<u64>(), n in 5usize..30, c in 0.1f64..20.0) {
        let (x, y) = dataset(n, seed);
        let p = SvrParams { c, gamma: 0.5, ..SvrParams::default() };
        let fit = train_svr(&x, &y, &p).unwrap();
        prop_assert!(fit.alpha.iter().all(|a| *a >= 0.0 && *a <= c));
        prop_assert!(fit.violation <= p.tolerance);
        let sum: f64 = fit.alpha[..n].iter().zip(&fit.alpha[n..]).map(|(a, s)| a - s).sum();
        prop_assert!(sum.abs() < 1e-9 * c * n as f64);
    }

    #[test]
    fn boosting_loss_never_increases(seed in any::<u64>(), n in 4usize..40) {
        let (x, y) = dataset(n, seed);
        let (_, losses) = train_boosting(&x, &y, &BoostParams::default()).unwrap();
        prop_assert!(losses.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn length_rates_match_jacobian_along_trajectory() {
    let m = ContinuumModel::default();
    let n = m.link_lengths.len();
    let dt = 1e-3;
    let mut st = ContinuumState::zeros(n);
    for k in 0..2000 {
        let t = k as f64 * dt;
        let f = [0.4 + 0.3 * (7.0 * t).sin(), 0.2];
        let next = step_dynamics(&st, f, &ContactSpec::none(), t, dt, &m).unwrap();
        let (l0, l1) = (tendon_lengths(&st.q, &m), tendon_lengths(&next.q, &m));
        let jac = tendon_jacobian(&next.q, &m);
        for i in 0..2 {
            let fd = (l1[i] - l0[i]) / dt;
            let an: f64 = jac[i].iter().zip(&next.qdot).map(|(a, b)| a * b).sum();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-9), "step {k}: {fd} vs {an}");
        }
        st = next;
    }
}

fn small_problem() -> IdentProblem {
    let mut base = ScenarioConfig::new(ScenarioKind::ForceStep);
    base.seed = 5;
    let mut ex = default_excitation(&base);
    for c in &mut ex {
        c.duration = 0.03;
        c.tendons[0].onset = 0.005;
    }
    let reference = simulate_trace(&[0.8, 2e-4, 3e-5], &ex).unwrap();
    let times = (0..reference.len()).map(|k| k as f64 * 1e-3).collect();
    let mut prob = IdentProblem::new(times, reference, &base);
    prob.excitation = ex;
    prob.max_evals = 60;
    prob.starts = 2;
    prob
}

#[test]
fn identification_is_reproducible_and_monotone() {
    let prob = small_problem();
    let a = identify(&prob).unwrap();
    let b = identify(&prob).unwrap();
    assert_eq!(a.p_star.map(f64::to_bits), b.p_star.map(f64::to_bits));
    assert!(a.best_so_far.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(a.best_so_far.len(), a.evaluations);

    let mut ms = prob.clone();
    ms.times = prob.times.iter().map(|t| t * 1e3).collect();
    let c = identify(&ms).unwrap();
    assert_eq!(a.p_star.map(f64::to_bits), c.p_star.map(f64::to_bits));
}
