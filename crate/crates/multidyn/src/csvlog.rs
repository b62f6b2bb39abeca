//! Log files: a `#` header block echoing the resolved config, one header
//! row, then numeric rows.
//!
//! ```text
//! # multidyn log schema 1
//! # scenario = force-step
//! # dt = 0.001
//! t,i_cmd_0,...
//! 0.0,0.0,...
//! ```
//!
//! Numbers use the shortest form that reads back to the same bits, so a
//! rerun with the same config writes the same bytes.

use std::fs;
use std::path::Path;

use multidyn_core::log::{LogRow, TimeSeriesLog, COLUMNS, SCHEMA_VERSION};
use multidyn_core::scenario::{load_config, ScenarioConfig};

use crate::error::{CliError, Result};

/// Column accepted in place of the reconstructed current of tendon 0.
pub const MEASURED_ALIAS: &str = "i_real";

pub fn format_log(log: &TimeSeriesLog) -> String {
    let mut out = String::new();
    out.push_str(&format!("# multidyn log schema {SCHEMA_VERSION}\n"));
    for (k, v) in &log.header {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for row in &log.rows {
        let vals = row.values();
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_num(*v));
        }
        out.push('\n');
    }
    out
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_log(path: &Path, log: &TimeSeriesLog) -> Result<()> {
    write_text(path, &format_log(log))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Any numeric CSV with an optional `# key = value` header block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut header = Vec::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { continue };
            if let Some((k, v)) = rest.split_once('=') {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let columns: Vec<String> = match rdr.headers() {
            Ok(h) => h.iter().map(str::to_string).filter(|s| !s.is_empty()).collect(),
            Err(e) => return Err(CliError::config(format!("malformed CSV header: {e}"))),
        };
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| CliError::config(format!("malformed CSV row {}: {e}", n + 1)))?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| CliError::config(format!("row {}: non-numeric field", n + 1)))?;
            if row.len() != columns.len() {
                return Err(CliError::config(format!(
                    "row {}: {} fields, header has {}",
                    n + 1,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, columns, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Error naming every absent column.
    pub fn require(&self, names: &[&str]) -> Result<()> {
        let missing: Vec<&str> = names.iter().copied().filter(|n| self.index(n).is_none()).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(format!("missing columns: {}", missing.join(", "))))
        }
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Scenario config echoed in the header, if there is one.
    pub fn config(&self) -> Result<Option<ScenarioConfig>> {
        if self.header_value("scenario").is_none() {
            return Ok(None);
        }
        let doc: String = self.header.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        load_config(&doc).map(Some).map_err(|e| CliError::config(format!("log header: {e}")))
    }

    /// Sample spacing from the header, else from the `t` column.
    pub fn dt(&self) -> Option<f64> {
        if let Some(dt) = self.header_value("dt").and_then(|v| v.parse().ok()) {
            return Some(dt);
        }
        let t = self.column("t")?;
        (t.len() >= 2).then(|| t[1] - t[0])
    }

    pub fn to_log(&self) -> Result<TimeSeriesLog> {
        self.require(&COLUMNS)?;
        let idx: Vec<usize> = COLUMNS.iter().map(|c| self.index(c).unwrap()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v = [0.0; 34];
                for (slot, &i) in v.iter_mut().zip(&idx) {
                    *slot = r[i];
                }
                LogRow::from_values(&v)
            })
            .collect();
        Ok(TimeSeriesLog { dt: self.dt().unwrap_or(0.0), header: self.header.clone(), rows })
    }
}

/// Measured current: `i_real` when present, else `fallback`.
pub fn measured_current(table: &Table, fallback: &str) -> Result<(String, Vec<f64>)> {
    for name in [MEASURED_ALIAS, fallback] {
        if let Some(c) = table.column(name) {
            return Ok((name.to_string(), c));
        }
    }
    Err(CliError::config(format!("missing columns: {MEASURED_ALIAS} or {fallback}")))
}
