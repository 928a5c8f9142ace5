use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::{Report, RunFailure, RunRecord, TrackerKind};
use crate::{Error, Result};

/// Headline numbers of one tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Time average of the per-step mean OSPA [m].
    pub mean_ospa: f64,
    /// 90th percentile of the matched position errors [m]; `None` without
    /// any matched pair.
    pub rmse_p90: Option<f64>,
    /// Mean absolute difference between reported and true cardinality.
    pub mean_cardinality_error: f64,
    pub runs: usize,
    pub failed_runs: usize,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    /// The tracker the top-level numbers refer to.
    tracker: &'static str,
    #[serde(flatten)]
    headline: &'a Summary,
    trackers: std::collections::BTreeMap<&'static str, &'a Summary>,
}

/// Writes `ospa_per_step.csv`, `cardinality_per_step.csv`, `rmse_cdf.csv`,
/// `tracks_example.csv` and `summary.json` into `dir`, creating it if
/// needed. Returns the written paths.
pub fn emit_reports(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let kinds: Vec<TrackerKind> = report.trackers.keys().copied().collect();
    let first = *kinds.first().ok_or(Error::Empty("no tracker in the report"))?;
    let mut written = Vec::new();

    let path = dir.join("ospa_per_step.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
    let mut header = vec!["step".to_string()];
    for k in &kinds {
        header.push(format!("{}_mean", k.name()));
        header.push(format!("{}_std", k.name()));
    }
    w.write_record(&header).map_err(csv_error)?;
    for (i, n) in report.steps.iter().enumerate() {
        let mut row = vec![n.to_string()];
        for k in &kinds {
            let s = report.trackers[k].ospa[i];
            row.push(s.mean.to_string());
            row.push(s.std.to_string());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("cardinality_per_step.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
    header[0] = "step".into();
    header.insert(1, "truth".into());
    w.write_record(&header).map_err(csv_error)?;
    for (i, n) in report.steps.iter().enumerate() {
        let mut row = vec![n.to_string(), report.truth_cardinality[i].to_string()];
        for k in &kinds {
            let s = report.trackers[k].cardinality[i];
            row.push(s.mean.to_string());
            row.push(s.std.to_string());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("rmse_cdf.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
    w.write_record(["tracker", "error", "cdf"]).map_err(csv_error)?;
    for k in &kinds {
        if let Some(cdf) = &report.trackers[k].rmse {
            for (e, p) in cdf.table() {
                w.write_record([k.name().to_string(), e.to_string(), p.to_string()]).map_err(csv_error)?;
            }
        }
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("tracks_example.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
    w.write_record(["seed", "step", "source", "id", "x", "y"]).map_err(csv_error)?;
    let seed = report.example.get(&first).map_or(0, |r| r.seed);
    for (i, n) in report.steps.iter().enumerate() {
        for (id, p) in &report.truth[i] {
            w.write_record(row(seed, *n, "truth", *id as u64, *p)).map_err(csv_error)?;
        }
        for (k, rec) in &report.example {
            for o in &rec.estimates[i] {
                w.write_record(row(rec.seed, *n, k.name(), o.id, o.position)).map_err(csv_error)?;
            }
        }
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("summary.json");
    let file = SummaryFile {
        tracker: first.name(),
        headline: &report.trackers[&first].summary,
        trackers: report.trackers.iter().map(|(k, t)| (k.name(), &t.summary)).collect(),
    };
    std::fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")?;
    written.push(path);
    Ok(written)
}

fn row(seed: u64, step: usize, source: &str, id: u64, p: [f64; 2]) -> [String; 6] {
    [seed.to_string(), step.to_string(), source.to_string(), id.to_string(), p[0].to_string(), p[1].to_string()]
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Outcome of one tracker on one run, as stored between CLI stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunFile {
    Ok(RunRecord),
    Failed(RunFailure),
}

impl RunFile {
    fn name(&self) -> String {
        let (kind, seed) = match self {
            Self::Ok(r) => (r.tracker, r.seed),
            Self::Failed(f) => (f.tracker, f.seed),
        };
        format!("{}_seed{seed}.json", kind.name())
    }
}

pub fn write_run_file(dir: &Path, file: &RunFile) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(file.name());
    std::fs::write(&path, serde_json::to_string(file)?)?;
    Ok(path)
}

/// Every run file in `dir`, in file-name order.
pub fn read_run_files(dir: &Path) -> Result<Vec<RunFile>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?))
        .collect()
}
