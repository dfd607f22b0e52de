//! CSV output of run records and summary curves.
//!
//! Floats are written with Rust's `Display`, the shortest decimal that
//! parses back to the same `f64`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::experiment::RunRecord;
use super::summary::Summary;
use crate::error::{Error, Result};

pub const RECORD_HEADER: [&str; 6] = ["run", "t", "policy", "avg_regret_cum", "weak_regret_cum", "select_ns"];

pub const CURVE_HEADER: [&str; 7] = ["policy", "t", "runs", "avg_mean", "avg_std", "weak_mean", "weak_std"];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.display().to_string(), source }
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file)))
}

/// Writes records to any writer, one row per (run, t, policy), rows
/// grouped by run and then by round.
pub fn write_records_to<W: Write>(records: &[RunRecord], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RECORD_HEADER)?;
    let mut runs: Vec<usize> = records.iter().map(|r| r.run).collect();
    runs.sort_unstable();
    runs.dedup();
    for run in runs {
        let group: Vec<&RunRecord> = records.iter().filter(|r| r.run == run).collect();
        let horizon = group.iter().map(|r| r.horizon()).max().unwrap_or(0);
        for t in 0..horizon {
            for r in group.iter().filter(|r| t < r.horizon()) {
                w.write_record([
                    r.run.to_string(),
                    (t + 1).to_string(),
                    r.policy.clone(),
                    r.avg_regret_cum[t].to_string(),
                    r.weak_regret_cum[t].to_string(),
                    r.select_ns[t].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    write_records_to(records, BufWriter::new(file)).map_err(csv_err(path))
}

/// Reads a file written by [`write_records`]. Estimator time is not part of
/// the file format and comes back as 0.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(Error::Parameter(format!("{}: unexpected header '{}'", path.display(), header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut index: HashMap<(usize, String), usize> = HashMap::new();
    let mut records: Vec<RunRecord> = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let bad = |what: &str| Error::Parameter(format!("{}: row {}: invalid {what}", path.display(), line + 2));
        let run: usize = row[0].parse().map_err(|_| bad("run"))?;
        let t: usize = row[1].parse().map_err(|_| bad("t"))?;
        let policy = row[2].to_string();
        let avg: f64 = row[3].parse().map_err(|_| bad("avg_regret_cum"))?;
        let weak: f64 = row[4].parse().map_err(|_| bad("weak_regret_cum"))?;
        let ns: u64 = row[5].parse().map_err(|_| bad("select_ns"))?;
        let k = *index.entry((run, policy.clone())).or_insert_with(|| {
            records.push(RunRecord {
                run,
                policy,
                avg_regret_cum: Vec::new(),
                weak_regret_cum: Vec::new(),
                select_ns: Vec::new(),
                estimator_ns: 0,
            });
            records.len() - 1
        });
        let rec = &mut records[k];
        if t != rec.horizon() + 1 {
            return Err(bad("round order"));
        }
        rec.avg_regret_cum.push(avg);
        rec.weak_regret_cum.push(weak);
        rec.select_ns.push(ns);
    }
    Ok(records)
}

/// Writes the per-round mean and std curves of every policy.
pub fn write_curves(summary: &Summary, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let err = csv_err(path);
    w.write_record(CURVE_HEADER).map_err(&err)?;
    for c in &summary.curves {
        for t in 0..c.avg_mean.len() {
            w.write_record([
                c.policy.clone(),
                (t + 1).to_string(),
                c.runs.to_string(),
                c.avg_mean[t].to_string(),
                c.avg_std[t].to_string(),
                c.weak_mean[t].to_string(),
                c.weak_std[t].to_string(),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|source| Error::Io { path: path.display().to_string(), source })
}
