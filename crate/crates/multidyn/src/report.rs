//! Plot data: tidy CSVs per figure panel plus a `summary.txt` of the numbers
//! read off them.

use std::path::Path;

use multidyn_core::control::{rise_time, xcorr_delay};
use multidyn_core::perception::{detect_contact, spearman, DetectorConfig};
use multidyn_core::sizeest::metrics;

use crate::csvlog::{fmt_num, measured_current, write_text, Table};
use crate::error::{CliError, Result};

pub const SUMMARY_FILE: &str = "summary.txt";
/// Longest lag searched by the delay estimator (samples).
pub const MAX_DELAY_LAG: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    ForceStep,
    ExtremeCurl,
    Detection,
    Sensitivity,
    Period,
    Size,
}

impl ReportKind {
    pub const ALL: [ReportKind; 6] = [
        ReportKind::ForceStep,
        ReportKind::ExtremeCurl,
        ReportKind::Detection,
        ReportKind::Sensitivity,
        ReportKind::Period,
        ReportKind::Size,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::ForceStep => "force-step",
            ReportKind::ExtremeCurl => "extreme-curl",
            ReportKind::Detection => "detection",
            ReportKind::Sensitivity => "sensitivity",
            ReportKind::Period => "period",
            ReportKind::Size => "size",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Columns the input table must carry.
    pub fn required_columns(self) -> &'static [&'static str] {
        match self {
            ReportKind::ForceStep => &["t", "setpoint_0", "f_cmd_0", "f_obs_0"],
            ReportKind::ExtremeCurl => &["t", "dl_dot_0", "i_cmd_0", "i_obs_star_0", "i_obs_dstar_0"],
            ReportKind::Detection => &["t"],
            ReportKind::Sensitivity => &["link", "shift"],
            ReportKind::Period => &["link", "apparent_period"],
            ReportKind::Size => &["id", "y_true", "y_pred"],
        }
    }
}

/// Optional inputs some kinds use.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs<'a> {
    /// Baseline log drawn next to a force step.
    pub baseline: Option<&'a Table>,
    /// Overrides the thresholds echoed in the log header.
    pub detector: Option<DetectorConfig>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    pub summary: Vec<(String, String)>,
}

impl Report {
    pub fn summary_text(&self) -> String {
        self.summary.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, text) in &self.files {
            write_text(&dir.join(name), text)?;
        }
        write_text(&dir.join(SUMMARY_FILE), &self.summary_text())
    }

    fn put(&mut self, key: &str, v: impl ToString) {
        self.summary.push((key.to_string(), v.to_string()));
    }
}

/// `series,<x>,value` rows, one block per series.
pub fn tidy(x_name: &str, series: &[(&str, &[f64], &[f64])]) -> String {
    let mut out = format!("series,{x_name},value\n");
    for (name, x, y) in series {
        for (a, b) in x.iter().zip(y.iter()) {
            out.push_str(&format!("{name},{},{}\n", fmt_num(*a), fmt_num(*b)));
        }
    }
    out
}

fn col(t: &Table, name: &str) -> Vec<f64> {
    t.column(name).unwrap_or_default()
}

pub fn report(table: &Table, kind: ReportKind, inputs: &ReportInputs) -> Result<Report> {
    table.require(kind.required_columns())?;
    if table.rows.is_empty() {
        return Err(CliError::config("input has no rows"));
    }
    match kind {
        ReportKind::ForceStep => force_step(table, inputs.baseline),
        ReportKind::ExtremeCurl => extreme_curl(table),
        ReportKind::Detection => detection(table, inputs.detector),
        ReportKind::Sensitivity => sensitivity(table),
        ReportKind::Period => period(table),
        ReportKind::Size => size(table),
    }
}

fn dt_of(table: &Table) -> Result<f64> {
    table.dt().filter(|d| *d > 0.0).ok_or_else(|| CliError::config("cannot tell the sample spacing (need dt or two t samples)"))
}

fn step_delay(table: &Table) -> Result<(f64, Option<f64>)> {
    let t = col(table, "t");
    let sp = col(table, "setpoint_0");
    let f = col(table, "f_obs_0");
    let dt = dt_of(table)?;
    let start = sp.iter().position(|v| *v != sp[0]).map_or(0, |k| k.saturating_sub(1));
    Ok((xcorr_delay(&sp, &f, dt, MAX_DELAY_LAG), rise_time(&t, &f, start)))
}

fn force_step(table: &Table, baseline: Option<&Table>) -> Result<Report> {
    let t = col(table, "t");
    let (sp, fc, fo) = (col(table, "setpoint_0"), col(table, "f_cmd_0"), col(table, "f_obs_0"));
    let mut r = Report::default();
    let (delay, rise) = step_delay(table)?;
    r.put("delay_ms", fmt_num(delay * 1e3));
    r.put("rise_time_ms", rise.map_or("none".into(), |v| fmt_num(v * 1e3)));
    let mut series: Vec<(&str, &[f64], &[f64])> = vec![("commanded", &t, &sp), ("predicted", &t, &fc), ("observed", &t, &fo)];
    let (bt, bf);
    if let Some(b) = baseline {
        b.require(ReportKind::ForceStep.required_columns())?;
        let (bd, brise) = step_delay(b)?;
        r.put("baseline_delay_ms", fmt_num(bd * 1e3));
        r.put("baseline_rise_time_ms", brise.map_or("none".into(), |v| fmt_num(v * 1e3)));
        bt = col(b, "t");
        bf = col(b, "f_obs_0");
        series.push(("baseline", &bt, &bf));
    }
    r.files.push(("force_step.csv".into(), tidy("t", &series)));
    Ok(r)
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn extreme_curl(table: &Table) -> Result<Report> {
    let t = col(table, "t");
    let (v, ic, is, id) = (col(table, "dl_dot_0"), col(table, "i_cmd_0"), col(table, "i_obs_star_0"), col(table, "i_obs_dstar_0"));
    let mut r = Report::default();
    let peak = v.iter().fold(0.0f64, |m, x| m.max(*x));
    let tail = &v[v.len() - (v.len() / 10).max(1)..];
    let last = tail.iter().sum::<f64>() / tail.len() as f64;
    r.put("peak_dl_dot", fmt_num(peak));
    r.put("final_dl_dot", fmt_num(last));
    r.put("final_over_peak", if peak > 0.0 { fmt_num(last / peak) } else { "none".into() });
    r.put("max_abs_i_cmd", fmt_num(max_abs(&ic)));
    r.put("max_abs_i_obs_star", fmt_num(max_abs(&is)));
    r.put("max_abs_i_obs_dstar", fmt_num(max_abs(&id)));
    r.files.push(("extreme_curl_rate.csv".into(), tidy("t", &[("dl_dot", &t, &v)])));
    r.files.push((
        "extreme_curl_current.csv".into(),
        tidy("t", &[("i_cmd", &t, &ic), ("i_obs_star", &t, &is), ("i_obs_dstar", &t, &id)]),
    ));
    Ok(r)
}

fn detection(table: &Table, detector: Option<DetectorConfig>) -> Result<Report> {
    let t = col(table, "t");
    let (name, trace) = measured_current(table, "i_obs_dstar_filt_0")?;
    let cfg = match detector {
        Some(d) => d,
        None => table.config()?.map(|c| c.detector).unwrap_or_default(),
    };
    let events = detect_contact(&trace, dt_of(table)?, &cfg)?;
    let mut r = Report::default();
    r.put("signal", &name);
    r.put("events", events.len());
    let first_contact = table.column("contact").and_then(|c| c.iter().position(|v| *v != 0.0)).map(|k| t[k]);
    if let Some(tc) = first_contact {
        r.put("first_contact_s", fmt_num(tc));
    }
    if let Some(e) = events.first() {
        r.put("first_event_s", fmt_num(e.time));
        r.put("first_rule", e.rule.as_str());
        if let Some(tc) = first_contact {
            r.put("latency_ms", fmt_num((e.time - tc) * 1e3));
        }
    }
    let mut text = tidy("t", &[("current", &t, &trace)]);
    for e in &events {
        text.push_str(&format!("event_{},{},{}\n", e.rule.as_str(), fmt_num(e.time), fmt_num(e.value)));
    }
    r.files.push(("detection.csv".into(), text));
    Ok(r)
}

fn sorted_by_link(table: &Table, value: &str) -> (Vec<f64>, Vec<f64>) {
    let mut rows: Vec<(f64, f64)> = col(table, "link").into_iter().zip(col(table, value)).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows.into_iter().unzip()
}

fn sensitivity(table: &Table) -> Result<Report> {
    let (links, shift) = sorted_by_link(table, "shift");
    let mut r = Report::default();
    let (first, last) = (shift[0], shift[shift.len() - 1]);
    r.put("base_link", links[0]);
    r.put("tip_link", links[links.len() - 1]);
    r.put("tip_over_base", if first > 0.0 { fmt_num(last / first) } else { "none".into() });
    r.put("spearman", fmt_num(spearman(&links, &shift)?));
    r.files.push(("sensitivity_bars.csv".into(), tidy("link", &[("shift", &links, &shift)])));
    Ok(r)
}

fn period(table: &Table) -> Result<Report> {
    let (links, p) = sorted_by_link(table, "apparent_period");
    let mut r = Report::default();
    for (l, v) in links.iter().zip(&p) {
        r.put(&format!("link_{l}_period_s"), fmt_num(*v));
    }
    r.files.push(("period_bars.csv".into(), tidy("link", &[("apparent_period", &links, &p)])));
    Ok(r)
}

fn size(table: &Table) -> Result<Report> {
    let (y, p) = (col(table, "y_true"), col(table, "y_pred"));
    let m = metrics(&y, &p)?;
    let mut r = Report::default();
    r.put("samples", y.len());
    r.put("mae_mm", fmt_num(m.mae * 1e3));
    r.put("r2", fmt_num(m.r2));
    let mm = |v: &[f64]| v.iter().map(|x| x * 1e3).collect::<Vec<_>>();
    let (ym, pm) = (mm(&y), mm(&p));
    r.files.push(("size_scatter.csv".into(), tidy("true_mm", &[("predicted_mm", &ym, &pm)])));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_log_lists_missing_columns() {
        let t = Table::parse("").unwrap();
        let msg = report(&t, ReportKind::ForceStep, &ReportInputs::default()).unwrap_err().to_string();
        assert_eq!(msg, "missing columns: t, setpoint_0, f_cmd_0, f_obs_0");
    }

    #[test]
    fn perfect_predictions_summary() {
        let t = Table::parse("id,y_true,y_pred\n0,0.01,0.01\n1,0.02,0.02\n2,0.04,0.04\n").unwrap();
        let r = report(&t, ReportKind::Size, &ReportInputs::default()).unwrap();
        assert_eq!(r.value("mae_mm"), Some("0.0"));
        assert_eq!(r.value("r2"), Some("1.0"));
    }

    #[test]
    fn synthetic_step_delay() {
        let mut text = String::from("# dt = 0.001\nt,setpoint_0,f_cmd_0,f_obs_0\n");
        for k in 0..500 {
            let s = if k >= 100 { 1.0 } else { 0.0 };
            let o = if k >= 120 { 1.0 } else { 0.0 };
            text.push_str(&format!("{},{s},{s},{o}\n", k as f64 * 1e-3));
        }
        let r = report(&Table::parse(&text).unwrap(), ReportKind::ForceStep, &ReportInputs::default()).unwrap();
        assert_eq!(r.value("delay_ms"), Some("20.0"));
        assert!(r.files[0].1.starts_with("series,t,value\ncommanded,0.0,0.0\n"));
    }

    #[test]
    fn sensitivity_sorted_by_link() {
        let t = Table::parse("link,shift\n8,2\n2,1\n23,5\n").unwrap();
        let r = report(&t, ReportKind::Sensitivity, &ReportInputs::default()).unwrap();
        assert_eq!(r.value("tip_over_base"), Some("5.0"));
        assert_eq!(r.value("spearman"), Some("1.0"));
    }

    #[test]
    fn kinds_parse() {
        for k in ReportKind::ALL {
            assert_eq!(ReportKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(ReportKind::parse("bogus"), None);
    }
}
