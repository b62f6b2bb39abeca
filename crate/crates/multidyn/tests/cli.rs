use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn multidyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multidyn")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = multidyn(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{args:?} failed: {stderr}");
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = multidyn(args);
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
}

#[test]
fn simulate_is_reproducible_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("force_step.cfg");
    fs::write(&cfg, "scenario = force-step\nduration = 0.3\nseed = 3\n").unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["simulate", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["simulate", "--config", s(&cfg), "--out", s(&b)]);
    let log_a = fs::read(a.join("log.csv")).unwrap();
    assert_eq!(log_a, fs::read(b.join("log.csv")).unwrap());
    assert!(a.join("baseline.csv").exists());

    let manifest = fs::read_to_string(a.join("run_manifest.txt")).unwrap();
    assert_eq!(value(&manifest, "seed"), Some("3"));
    assert_eq!(value(&manifest, "command"), Some("simulate"));
    assert!(value(&manifest, "multidyn").is_some());
    ok(&["simulate", "--config", s(&a.join("config.cfg")), "--out", s(&c)]);
    assert_eq!(log_a, fs::read(c.join("log.csv")).unwrap());

    let text = String::from_utf8(log_a).unwrap();
    assert!(text.starts_with("# multidyn log schema 1\n# scenario = force-step\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 302);

    let r = dir.path().join("r");
    let summary = ok(&["report", "--input", s(&a.join("log.csv")), "--kind", "force-step", "--baseline", s(&a.join("baseline.csv")), "--out", s(&r)]);
    let delay: f64 = value(&summary, "delay_ms").unwrap().parse().unwrap();
    let base_delay: f64 = value(&summary, "baseline_delay_ms").unwrap().parse().unwrap();
    assert!(delay > base_delay, "{summary}");
    assert!(fs::read_to_string(r.join("force_step.csv")).unwrap().contains("\nbaseline,"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    ok(&["simulate", "--scenario", "single-contact", "--seed", "11", "--out", s(&out)]);
    let manifest = fs::read_to_string(out.join("run_manifest.txt")).unwrap();
    assert_eq!(value(&manifest, "seed"), Some("11"));
    assert!(fs::read_to_string(out.join("log.csv")).unwrap().contains("# seed = 11\n"));
}

#[test]
fn identify_reports_parameters_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ident.cfg");
    fs::write(&cfg, "scenario = force-step\nduration = 0.03\nsubsteps = 5\nelectrical_dt = 1e-5\n\n[tendon0]\nonset = 0.005\n").unwrap();
    let run = dir.path().join("run");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&run)]);
    let out = dir.path().join("ident");
    let text = ok(&["identify", "--ref", s(&run.join("log.csv")), "--starts", "2", "--max-evals", "40", "--out", s(&out)]);
    let eta: f64 = value(&text, "eta").unwrap().parse().unwrap();
    assert!(eta > 0.6 && eta <= 1.0);
    assert_eq!(value(&text, "signal"), Some("i_obs_dstar_0"));
    let trace = fs::read_to_string(out.join("objective.csv")).unwrap();
    let best: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!best.is_empty() && best.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(fs::read_to_string(out.join("starts.csv")).unwrap().lines().count(), 3);
}

#[test]
fn dataset_train_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, model, pred) = (dir.path().join("ds"), dir.path().join("model"), dir.path().join("pred"));
    let gen = ok(&["gen-dataset", "--diameters", "10,30,50", "--reps", "5", "--jobs", "2", "--out", s(&ds)]);
    assert_eq!(value(&gen, "samples"), Some("15"));
    let manifest = fs::read_to_string(ds.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 16);

    let again = dir.path().join("ds2");
    ok(&["gen-dataset", "--diameters", "10,30,50", "--reps", "5", "--jobs", "1", "--out", s(&again)]);
    assert_eq!(fs::read(ds.join("sample_07.csv")).unwrap(), fs::read(again.join("sample_07.csv")).unwrap());

    let trained = ok(&["train", "--data", s(&ds), "--out", s(&model)]);
    assert!(value(&trained, "holdout_mae_mm").is_some());
    assert!(model.join("model.json").exists());
    assert!(model.join("summary.txt").exists());

    let p = ok(&["predict", "--model", s(&model), "--sample", s(&ds.join("sample_00.csv")), "--out", s(&pred)]);
    assert_eq!(value(&p, "true_diameter_mm"), Some("10.0"));
    let d: f64 = value(&p, "predicted_diameter_mm").unwrap().parse().unwrap();
    assert!((d - 10.0).abs() < 10.0, "{p}");
}

#[test]
fn fan_out_commands_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sens");
    let text = ok(&["sensitivity", "--links", "2,23", "--jobs", "2", "--out", s(&out)]);
    assert!(value(&text, "tip_over_base").is_some(), "{text}");
    assert_eq!(fs::read_to_string(out.join("sensitivity.csv")).unwrap().lines().count(), 3);

    let out = dir.path().join("period");
    ok(&["period", "--links", "23", "--out", s(&out)]);
    let p = fs::read_to_string(out.join("period.csv")).unwrap();
    let v: f64 = p.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.1).abs() < 0.01, "{p}");

    let out = dir.path().join("uncurl");
    let text = ok(&["uncurl", "--out", s(&out)]);
    assert_eq!(value(&text, "events"), Some("0"));
    assert!(out.join("log.csv").exists());
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&["simulate", "--nope"]).0, 2);
    assert_eq!(code(&["report", "--input", s(&dir.path().join("x.csv")), "--kind", "period", "--out", s(&out)]).0, 5);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&["report", "--input", s(&empty), "--kind", "bogus", "--out", s(&out)]).0, 2);
    let (c, err) = code(&["report", "--input", s(&empty), "--kind", "force-step", "--out", s(&out)]);
    assert_eq!(c, 3);
    assert!(err.contains("missing columns: t, setpoint_0, f_cmd_0, f_obs_0"), "{err}");

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "scenario = force-step\ndt = oops\n").unwrap();
    let (c, err) = code(&["simulate", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(c, 3);
    assert!(err.contains("dt"), "{err}");

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "id,y_true,y_pred\n0,0.02,0.01\n1,0.02,0.03\n").unwrap();
    assert_eq!(code(&["report", "--input", s(&flat), "--kind", "size", "--out", s(&out)]).0, 4);

    assert_eq!(code(&["simulate", "--config", s(&dir.path().join("missing.cfg")), "--out", s(&out)]).0, 5);
}

#[test]
fn default_output_root_comes_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let mut text = String::from("t,i_real\n");
    for k in 0..200 {
        text.push_str(&format!("{},1.0\n", k as f64 * 1e-3));
    }
    fs::write(&trace, text).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_multidyn"))
        .args(["detect", "--log", s(&trace)])
        .env("MULTIDYN_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("detect").join("events.csv").exists());
    assert!(dir.path().join("detect").join("run_manifest.txt").exists());
}
