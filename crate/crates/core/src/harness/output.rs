use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::run::{execute, num, FileEntry, RunRecord, Table};
use super::Scenario;
use crate::error::{Error, Result};

/// Values of `q` for the guide lines `I = I₀ + q(1 − I₀)`.
pub const GUIDE_Q: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const FAILURE_MARKER: &str = "FAILED";

fn write_table(dir: &Path, rel: &str, table: &Table) -> Result<FileEntry> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fs::write(&path, &bytes)?;
    Ok(FileEntry {
        file: rel.into(),
        rows: table.rows.len(),
        sha256: Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect(),
    })
}

/// Per-figure splits derived from the result tables.
fn plot_tables(record: &RunRecord) -> Vec<(String, Table)> {
    let mut out = Vec::new();
    if let Some(t) = record.table("tradeoff") {
        let mut methods: Vec<&str> = Vec::new();
        for r in &t.rows {
            if !methods.contains(&r[1].as_str()) {
                methods.push(&r[1]);
            }
        }
        for m in methods {
            let mut split = Table::new(&format!("tradeoff_{m}"), &["source_id", "b_ratio", "indist"]);
            split.rows = t
                .rows
                .iter()
                .filter(|r| r[1] == m)
                .map(|r| vec![r[0].clone(), r[2].clone(), r[3].clone()])
                .collect();
            out.push((format!("plotdata/tradeoff_{m}.csv"), split));
        }
        let mut guides = Table::new("guides", &["source_id", "I0", "q", "indist"]);
        for item in &record.items {
            for q in GUIDE_Q {
                let i0 = item.input_purity;
                guides.rows.push(vec![
                    num(item.source_id as f64),
                    num(i0),
                    num(q),
                    num(i0 + q * (1.0 - i0)),
                ]);
            }
        }
        out.push(("plotdata/guides.csv".into(), guides));
    }
    out
}

/// Writes every table, the per-figure plot data, `manifest.csv` and
/// `run_record.toml` into `dir`; fills `record.files`.
pub fn emit_plotdata(record: &mut RunRecord, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &record.tables {
        files.push(write_table(dir, &format!("{}.csv", t.name), t)?);
    }
    for (rel, t) in plot_tables(record) {
        files.push(write_table(dir, &rel, &t)?);
    }
    let mut manifest = Table::new("manifest", &["file", "rows", "sha256"]);
    for f in &files {
        manifest.rows.push(vec![f.file.clone(), f.rows.to_string(), f.sha256.clone()]);
    }
    write_table(dir, "manifest.csv", &manifest)?;
    record.files = files;
    fs::write(dir.join("scenario.toml"), &record.canonical_config)?;
    let text = toml::to_string(record).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("run_record.toml"), text)?;
    let mut paths: Vec<PathBuf> = record.files.iter().map(|f| dir.join(&f.file)).collect();
    paths.push(dir.join("manifest.csv"));
    Ok(paths)
}

/// Runs `scenario` and writes its outputs into `dir`. When the run fails,
/// finished results are still written together with a `FAILED` marker.
pub fn run_to_dir(scenario: &Scenario, dir: impl AsRef<Path>) -> Result<RunRecord> {
    let dir = dir.as_ref();
    let (mut record, err) = execute(scenario)?;
    let marker = dir.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    emit_plotdata(&mut record, dir)?;
    match err {
        Some(e) => {
            fs::write(&marker, format!("{e}\n"))?;
            Err(e)
        }
        None => Ok(record),
    }
}
