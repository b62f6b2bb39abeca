//! Dataset directories: one trace CSV per sample plus `manifest.csv`.
//!
//! ```text
//! id,file,diameter,seed,provenance,dt
//! 0,sample_00.csv,0.01,0,simulated,0.001
//! ```
//!
//! Sample files hold `t,current,displacement`.

use std::fs;
use std::path::{Path, PathBuf};

use multidyn_core::sizeest::{Provenance, WrapSample};

use crate::csvlog::{fmt_num, read_text, write_text, Table};
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.csv";
pub const MANIFEST_COLUMNS: [&str; 6] = ["id", "file", "diameter", "seed", "provenance", "dt"];
pub const SAMPLE_COLUMNS: [&str; 3] = ["t", "current", "displacement"];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: usize,
    pub file: String,
    pub diameter: f64,
    pub seed: u64,
    pub provenance: Provenance,
    pub dt: f64,
}

pub fn sample_file_name(id: usize) -> String {
    format!("sample_{id:02}.csv")
}

pub fn format_sample(s: &WrapSample) -> String {
    let mut out = SAMPLE_COLUMNS.join(",");
    out.push('\n');
    for (k, (i, d)) in s.current.iter().zip(&s.displacement).enumerate() {
        out.push_str(&format!("{},{},{}\n", fmt_num(k as f64 * s.dt), fmt_num(*i), fmt_num(*d)));
    }
    out
}

pub fn write_dataset(dir: &Path, samples: &[WrapSample]) -> Result<Vec<ManifestEntry>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut entries = Vec::with_capacity(samples.len());
    for s in samples {
        let file = sample_file_name(s.id);
        write_text(&dir.join(&file), &format_sample(s))?;
        entries.push(ManifestEntry {
            id: s.id,
            file,
            diameter: s.diameter,
            seed: s.seed,
            provenance: s.provenance,
            dt: s.dt,
        });
    }
    write_manifest(&dir.join(MANIFEST), &entries)?;
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    w.write_record(MANIFEST_COLUMNS).map_err(io)?;
    for e in entries {
        w.write_record([
            e.id.to_string(),
            e.file.clone(),
            fmt_num(e.diameter),
            e.seed.to_string(),
            e.provenance.as_str().to_string(),
            fmt_num(e.dt),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    write_text(path, &String::from_utf8_lossy(&bytes))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let bad = |what: String| CliError::config(format!("{}: {what}", path.display()));
    let headers: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing columns: {name}")));
    let (ci, cf, cd, cs, cp, ct) =
        (col("id")?, col("file")?, col("diameter")?, col("seed")?, col("provenance")?, col("dt")?);
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let row = n + 1;
        out.push(ManifestEntry {
            id: field(ci).parse().map_err(|_| bad(format!("row {row}: bad id")))?,
            file: field(cf).to_string(),
            diameter: field(cd).parse().map_err(|_| bad(format!("row {row}: bad diameter")))?,
            seed: field(cs).parse().map_err(|_| bad(format!("row {row}: bad seed")))?,
            provenance: Provenance::parse(field(cp)).ok_or_else(|| bad(format!("row {row}: bad provenance")))?,
            dt: field(ct).parse().map_err(|_| bad(format!("row {row}: bad dt")))?,
        });
    }
    Ok(out)
}

/// Trace columns of one sample file; label and metadata come from `entry`.
pub fn read_sample(path: &Path, entry: &ManifestEntry) -> Result<WrapSample> {
    let t = Table::read(path)?;
    t.require(&SAMPLE_COLUMNS[1..])?;
    Ok(WrapSample {
        id: entry.id,
        diameter: entry.diameter,
        current: t.column("current").unwrap_or_default(),
        displacement: t.column("displacement").unwrap_or_default(),
        dt: entry.dt,
        seed: entry.seed,
        provenance: entry.provenance,
    })
}

pub fn read_dataset(dir: &Path) -> Result<Vec<WrapSample>> {
    let entries = read_manifest(&dir.join(MANIFEST))?;
    entries.iter().map(|e| read_sample(&dir.join(&e.file), e)).collect()
}

/// Manifest entry describing `sample`, looked up next to the file.
pub fn lookup_entry(sample: &Path) -> Result<Option<ManifestEntry>> {
    let dir: PathBuf = sample.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = dir.join(MANIFEST);
    if !manifest.exists() {
        return Ok(None);
    }
    let name = sample.file_name().and_then(|n| n.to_str()).unwrap_or("");
    Ok(read_manifest(&manifest)?.into_iter().find(|e| e.file == name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<WrapSample> = (0..3)
            .map(|id| WrapSample {
                id,
                diameter: 0.01 * (id + 1) as f64,
                current: (0..70).map(|k| k as f64 * 0.1 + id as f64).collect(),
                displacement: (0..70).map(|k| k as f64 * 1e-4).collect(),
                dt: 1e-3,
                seed: 42 + id as u64,
                provenance: Provenance::Simulated,
            })
            .collect();
        write_dataset(dir.path(), &samples).unwrap();
        assert_eq!(read_dataset(dir.path()).unwrap(), samples);
        let e = lookup_entry(&dir.path().join("sample_01.csv")).unwrap().unwrap();
        assert_eq!(e.diameter, 0.02);
    }
}
