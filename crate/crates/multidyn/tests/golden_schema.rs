use std::collections::HashMap;
use std::fs;

use multidyn::csvlog::format_log;
use multidyn::dataset::{write_dataset, MANIFEST};
use multidyn::model::to_json;
use multidyn_core::control::run_scenario;
use multidyn_core::scenario::{ScenarioConfig, ScenarioKind};
use multidyn_core::sizeest::{train_ensemble_features, EnsembleParams, Provenance, WrapSample, FEATURE_NAMES, N_FEATURES};

fn golden(name: &str) -> String {
    fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn golden_lines() -> HashMap<String, String> {
    golden("dataset.txt")
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn first_line(text: &str) -> &str {
    text.lines().next().unwrap_or("")
}

#[test]
fn log_columns_are_pinned() {
    let mut cfg = ScenarioConfig::new(ScenarioKind::ForceStep);
    cfg.duration = 0.01;
    let text = format_log(&run_scenario(&cfg).unwrap());
    let mut lines = text.lines();
    let want = golden("log_header.txt");
    let mut want = want.lines();
    assert_eq!(lines.next(), want.next());
    let header = lines.find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(Some(header), want.next());
}

#[test]
fn dataset_and_model_layouts_are_pinned() {
    let g = golden_lines();
    let dir = tempfile::tempdir().unwrap();
    let sample = WrapSample {
        id: 0,
        diameter: 0.02,
        current: vec![0.1; 80],
        displacement: (0..80).map(|k| k as f64 * 1e-4).collect(),
        dt: 1e-3,
        seed: 1,
        provenance: Provenance::Simulated,
    };
    write_dataset(dir.path(), &[sample]).unwrap();
    let manifest = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
    assert_eq!(first_line(&manifest), g["manifest"]);
    let s = fs::read_to_string(dir.path().join("sample_00.csv")).unwrap();
    assert_eq!(first_line(&s), g["sample"]);

    assert_eq!(FEATURE_NAMES.join(","), g["features"]);

    let ids: Vec<usize> = (0..10).collect();
    let y: Vec<f64> = ids.iter().map(|k| 0.01 * (1 + k % 2) as f64).collect();
    let x: Vec<[f64; N_FEATURES]> = y.iter().enumerate().map(|(k, d)| core::array::from_fn(|j| d * (j + k + 1) as f64)).collect();
    let m = train_ensemble_features(&ids, &x, &y, &EnsembleParams { folds: 2, ..Default::default() }).unwrap();
    let json = to_json(&m);
    let keys: Vec<&str> = g["model"].split(',').collect();
    let pos: Vec<usize> = keys.iter().map(|k| json.find(&format!("\n  \"{k}\":")).unwrap_or(usize::MAX)).collect();
    assert!(pos.iter().all(|p| *p != usize::MAX), "{json}");
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn event_columns_are_pinned() {
    let g = golden_lines();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trace.csv");
    let mut text = String::from("t,i_real\n");
    for k in 0..400 {
        text.push_str(&format!("{},{}\n", k as f64 * 0.01, if k >= 200 { 2.8 } else { 2.0 }));
    }
    fs::write(&log, text).unwrap();
    let out = dir.path().join("out");
    let code = multidyn::cli::main_with(["multidyn", "detect", "--log", log.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let events = fs::read_to_string(out.join("events.csv")).unwrap();
    assert_eq!(first_line(&events), g["events"]);
    assert_eq!(events.lines().count(), 2);
    assert!(events.contains(",abs,"));
}
