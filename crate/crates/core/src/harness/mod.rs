//! Seeded Monte-Carlo batches: simulate, track with the VMP tracker and/or
//! the detect-then-track baseline, score against the ground truth and
//! aggregate per-step statistics.

mod cache;
mod report;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{SnapshotCache, MAGIC, VERSION};
pub use report::{emit_reports, read_run_files, write_run_file, RunFile, Summary};

use crate::baseline::{BaselineConfig, BaselineTracker};
use crate::metrics::{cardinality_stats, matched_errors, ospa, per_step_stats, rmse_cdf, EmpiricalCdf, OspaConfig, StepStats};
use crate::radar_sim::{Scenario, Simulator, Snapshot};
use crate::steering::SteeringModel;
use crate::tracker::{Checkpoint, Estimate, Tracker, TrackerConfig};
use crate::{Error, Result};

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "VMPTRACK_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerKind {
    Vmp,
    Baseline,
}

impl TrackerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Vmp => "vmp",
            Self::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub num_runs: usize,
    pub base_seed: u64,
    pub trackers: Vec<TrackerKind>,
    pub ospa: OspaConfig,
    pub tracker: TrackerConfig,
    pub baseline: BaselineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            num_runs: 100,
            base_seed: 0,
            trackers: vec![TrackerKind::Vmp, TrackerKind::Baseline],
            ospa: OspaConfig::default(),
            tracker: TrackerConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_runs == 0 {
            return Err(Error::Config("num_runs must be at least 1".into()));
        }
        if self.trackers.is_empty() {
            return Err(Error::Config("no tracker selected".into()));
        }
        self.ospa.validate()?;
        self.tracker.validate()?;
        self.baseline.validate()
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.num_runs as u64).map(|i| self.base_seed.wrapping_add(i))
    }
}

/// Worker count from [`WORKERS_ENV`]; `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>> {
    std::env::var(WORKERS_ENV).ok().map(|v| parse_workers(&v)).transpose()
}

fn parse_workers(v: &str) -> Result<usize> {
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
    }
}

/// Reported object of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportedObject {
    pub id: u64,
    pub position: [f64; 2],
}

/// Scores of one tracker on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub tracker: TrackerKind,
    pub ospa: Vec<f64>,
    pub cardinality: Vec<usize>,
    /// Position errors of OSPA-matched pairs, pooled over steps.
    pub errors: Vec<f64>,
    pub estimates: Vec<Vec<ReportedObject>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub tracker: TrackerKind,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct BatchResult {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl BatchResult {
    pub fn failure_fraction(&self) -> f64 {
        let total = self.records.len() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }
}

pub fn truth_positions(scenario: &Scenario, step: usize) -> Vec<[f64; 2]> {
    scenario.truth_at(step).iter().map(|(_, s)| [s[0], s[1]]).collect()
}

pub fn simulate_run(sim: &Simulator, scenario: &Scenario, seed: u64) -> Result<Vec<Snapshot>> {
    scenario.steps().map(|n| Ok(sim.simulate_step(scenario, n, seed)?.0)).collect()
}

/// Scores per-step estimates against the scenario.
pub fn evaluate(
    scenario: &Scenario,
    kind: TrackerKind,
    seed: u64,
    estimates: &[Vec<Estimate>],
    cfg: &OspaConfig,
) -> Result<RunRecord> {
    if estimates.len() != scenario.num_steps {
        return Err(Error::Dimension { expected: scenario.num_steps, got: estimates.len() });
    }
    let mut record = RunRecord {
        seed,
        tracker: kind,
        ospa: Vec::with_capacity(estimates.len()),
        cardinality: Vec::with_capacity(estimates.len()),
        errors: Vec::new(),
        estimates: Vec::with_capacity(estimates.len()),
    };
    for (n, est) in scenario.steps().zip(estimates) {
        let truth = truth_positions(scenario, n);
        let pos: Vec<[f64; 2]> = est.iter().map(Estimate::position).collect();
        record.ospa.push(ospa(&truth, &pos, cfg)?);
        record.cardinality.push(pos.len());
        record.errors.extend(matched_errors(&truth, &pos, cfg)?);
        record
            .estimates
            .push(est.iter().map(|e| ReportedObject { id: e.track_id, position: e.position() }).collect());
    }
    Ok(record)
}

/// Runs one tracker over a run's snapshots. The checkpoint is the VMP
/// tracker's full history.
pub fn track_run(
    kind: TrackerKind,
    scenario: &Scenario,
    model: &Arc<SteeringModel>,
    snapshots: &[Snapshot],
    seed: u64,
    cfg: &RunConfig,
) -> Result<(RunRecord, Option<Checkpoint>)> {
    let mut estimates = Vec::with_capacity(snapshots.len());
    let checkpoint = match kind {
        TrackerKind::Vmp => {
            let mut t = Tracker::with_model(&scenario.radar, cfg.tracker.clone(), Arc::clone(model))?;
            for s in snapshots {
                estimates.push(t.step(s)?);
            }
            Some(t.checkpoint(Some(seed)))
        }
        TrackerKind::Baseline => {
            let mut t = BaselineTracker::new(&scenario.radar, cfg.baseline.clone())?;
            for s in snapshots {
                estimates.push(t.step(model, s)?);
            }
            None
        }
    };
    Ok((evaluate(scenario, kind, seed, &estimates, &cfg.ospa)?, checkpoint))
}

/// Runs `f` on a pool sized by `workers`, or by [`WORKERS_ENV`] if `None`.
pub fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let n = match workers {
        Some(n) => Some(n),
        None => workers_from_env()?,
    };
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Simulates and tracks every seed. Runs that fail are recorded and the
/// batch continues; results come back in seed order.
pub fn run_monte_carlo(scenario: &Scenario, cfg: &RunConfig, workers: Option<usize>) -> Result<BatchResult> {
    cfg.validate()?;
    let sim = Simulator::new(&scenario.radar)?;
    let seeds: Vec<u64> = cfg.seeds().collect();
    let per_seed: Vec<Vec<std::result::Result<RunRecord, RunFailure>>> = with_pool(workers, || {
        seeds
            .par_iter()
            .map(|&seed| {
                let fail = |kind, e: Error| RunFailure { seed, tracker: kind, message: e.to_string() };
                match simulate_run(&sim, scenario, seed) {
                    Ok(snaps) => cfg
                        .trackers
                        .iter()
                        .map(|&k| {
                            track_run(k, scenario, sim.model(), &snaps, seed, cfg)
                                .map(|(r, _)| r)
                                .map_err(|e| fail(k, e))
                        })
                        .collect(),
                    Err(e) => cfg.trackers.iter().map(|&k| Err(fail(k, Error::Simulation(e.to_string())))).collect(),
                }
            })
            .collect()
    })?;
    let mut out = BatchResult::default();
    for r in per_seed.into_iter().flatten() {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

/// Aggregate statistics of one tracker.
#[derive(Debug, Clone)]
pub struct TrackerReport {
    pub runs: usize,
    pub failed_runs: usize,
    pub ospa: Vec<StepStats>,
    pub cardinality: Vec<StepStats>,
    pub rmse: Option<EmpiricalCdf>,
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub steps: Vec<usize>,
    pub truth_cardinality: Vec<usize>,
    pub trackers: BTreeMap<TrackerKind, TrackerReport>,
    /// Run with the smallest seed, per tracker, for trajectory plots.
    pub example: BTreeMap<TrackerKind, RunRecord>,
    pub truth: Vec<Vec<(usize, [f64; 2])>>,
}

/// Per-step statistics and headline numbers. Records are ordered by
/// `(tracker, seed)` first, so the result does not depend on run order.
pub fn aggregate(scenario: &Scenario, batch: &BatchResult) -> Result<Report> {
    let mut records: Vec<&RunRecord> = batch.records.iter().collect();
    records.sort_by_key(|r| (r.tracker, r.seed));
    let steps: Vec<usize> = scenario.steps().collect();
    let truth_cardinality: Vec<usize> = steps.iter().map(|n| scenario.cardinality(*n)).collect();
    let mut kinds: Vec<TrackerKind> = records.iter().map(|r| r.tracker).collect();
    kinds.extend(batch.failures.iter().map(|f| f.tracker));
    kinds.sort();
    kinds.dedup();
    let mut trackers = BTreeMap::new();
    let mut example = BTreeMap::new();
    for kind in kinds {
        let mine: Vec<&RunRecord> = records.iter().copied().filter(|r| r.tracker == kind).collect();
        let failed_runs = batch.failures.iter().filter(|f| f.tracker == kind).count();
        if mine.is_empty() {
            return Err(Error::Empty("every run of a tracker failed"));
        }
        let ospa_runs: Vec<Vec<f64>> = mine.iter().map(|r| r.ospa.clone()).collect();
        let card_runs: Vec<Vec<usize>> = mine.iter().map(|r| r.cardinality.clone()).collect();
        let ospa = per_step_stats(&ospa_runs)?;
        let cardinality = cardinality_stats(&card_runs)?;
        let errors: Vec<f64> = mine.iter().flat_map(|r| r.errors.iter().copied()).collect();
        let rmse = if errors.is_empty() { None } else { Some(rmse_cdf(errors)?) };
        let card_err: f64 = card_runs
            .iter()
            .flat_map(|r| r.iter().zip(&truth_cardinality).map(|(a, b)| a.abs_diff(*b) as f64))
            .sum::<f64>()
            / (card_runs.len() * steps.len()) as f64;
        let summary = Summary {
            mean_ospa: ospa.iter().map(|s| s.mean).sum::<f64>() / ospa.len() as f64,
            rmse_p90: rmse.as_ref().map(|c| c.quantile(0.9)),
            mean_cardinality_error: card_err,
            runs: mine.len(),
            failed_runs,
        };
        example.insert(kind, mine[0].clone());
        trackers.insert(kind, TrackerReport { runs: mine.len(), failed_runs, ospa, cardinality, rmse, summary });
    }
    let truth = steps
        .iter()
        .map(|n| scenario.truth_at(*n).into_iter().map(|(i, s)| (i, [s[0], s[1]])).collect())
        .collect();
    Ok(Report { steps, truth_cardinality, trackers, example, truth })
}
