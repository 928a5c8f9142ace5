use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use vmptrack::harness::{
    aggregate, emit_reports, read_run_files, run_monte_carlo, simulate_run, track_run, with_pool, write_run_file,
    BatchResult, RunConfig, RunFailure, RunFile, SnapshotCache, TrackerKind,
};
use vmptrack::radar_sim::{generate_scenario, Scenario, ScenarioSpec, Simulator};

/// Direct multi-object tracking on simulated MIMO-radar data.
///
/// Exit codes: 0 success, 1 other error, 2 unreadable scenario, 3 unwritable
/// output, 4 more than 1% of the runs failed.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate snapshots and store them in `<out>/snapshots/`.
    Simulate(Common),
    /// Track cached (or freshly simulated) snapshots; writes `<out>/runs/`
    /// and VMP checkpoints in `<out>/checkpoints/`.
    Track(TrackArgs),
    /// Aggregate `<out>/runs/` into report tables in `<out>`.
    Report(ReportArgs),
    /// Simulate, track and report in one go.
    Bench(TrackArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; the built-in three-track scene when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Seed of the first run; run `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Which::Both)]
    tracker: Which,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Vmp,
    Baseline,
    Both,
}

impl Which {
    fn kinds(self) -> Vec<TrackerKind> {
        match self {
            Self::Vmp => vec![TrackerKind::Vmp],
            Self::Baseline => vec![TrackerKind::Baseline],
            Self::Both => vec![TrackerKind::Vmp, TrackerKind::Baseline],
        }
    }
}

enum Failure {
    Scenario(String),
    Output(String),
    TooManyFailures(usize, usize),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Other(_) => 1,
            Self::Scenario(_) => 2,
            Self::Output(_) => 3,
            Self::TooManyFailures(..) => 4,
        }
    }
}

fn other(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn output(path: &Path) -> impl FnOnce(vmptrack::Error) -> Failure + '_ {
    move |e| Failure::Output(format!("{}: {e}", path.display()))
}

fn load_scenario(path: Option<&Path>) -> Result<Scenario, Failure> {
    let spec = match path {
        Some(p) => ScenarioSpec::load(p).map_err(|e| Failure::Scenario(format!("{}: {e}", p.display())))?,
        None => ScenarioSpec::reference(),
    };
    generate_scenario(&spec).map_err(|e| Failure::Scenario(e.to_string()))
}

fn run_config(common: &Common, trackers: Vec<TrackerKind>) -> Result<RunConfig, Failure> {
    let cfg = RunConfig { num_runs: common.runs, base_seed: common.seed, trackers, ..RunConfig::default() };
    cfg.validate().map_err(other)?;
    Ok(cfg)
}

fn cache_path(out: &Path, seed: u64) -> PathBuf {
    out.join("snapshots").join(format!("seed{seed}.bin"))
}

fn check_failures(batch: &BatchResult) -> Result<(), Failure> {
    for f in &batch.failures {
        eprintln!("run failed: {} seed {}: {}", f.tracker.name(), f.seed, f.message);
    }
    if batch.failure_fraction() > 0.01 {
        return Err(Failure::TooManyFailures(batch.failures.len(), batch.records.len() + batch.failures.len()));
    }
    Ok(())
}

fn simulate(args: &Common) -> Result<(), Failure> {
    let scenario = load_scenario(args.scenario.as_deref())?;
    let cfg = run_config(args, vec![TrackerKind::Vmp])?;
    let sim = Simulator::new(&scenario.radar).map_err(other)?;
    let dir = args.out.join("snapshots");
    std::fs::create_dir_all(&dir).map_err(|e| output(&dir)(e.into()))?;
    let model = sim.model().clone();
    let seeds: Vec<u64> = cfg.seeds().collect();
    let results: Vec<Result<(), Failure>> = with_pool(None, || {
        seeds
            .par_iter()
            .map(|&seed| {
                let snapshots = simulate_run(&sim, &scenario, seed).map_err(other)?;
                let path = cache_path(&args.out, seed);
                let cache = SnapshotCache {
                    seed,
                    num_channels: model.num_channels(),
                    num_samples: model.num_samples(),
                    snapshots,
                };
                cache.write(&path).map_err(output(&path))
            })
            .collect()
    })
    .map_err(other)?;
    results.into_iter().collect::<Result<(), _>>()?;
    eprintln!("wrote {} snapshot files to {}", seeds.len(), dir.display());
    Ok(())
}

fn track(args: &TrackArgs) -> Result<(), Failure> {
    let c = &args.common;
    let scenario = load_scenario(c.scenario.as_deref())?;
    let cfg = run_config(c, args.tracker.kinds())?;
    let sim = Simulator::new(&scenario.radar).map_err(other)?;
    let runs_dir = c.out.join("runs");
    let ckpt_dir = c.out.join("checkpoints");
    for d in [&runs_dir, &ckpt_dir] {
        std::fs::create_dir_all(d).map_err(|e| output(d)(e.into()))?;
    }
    let seeds: Vec<u64> = cfg.seeds().collect();
    let files: Vec<Result<Vec<RunFile>, Failure>> = with_pool(None, || {
        seeds
            .par_iter()
            .map(|&seed| {
                let path = cache_path(&c.out, seed);
                let snapshots = if path.exists() {
                    let cache = SnapshotCache::read(&path, sim.noise_precision().clone()).map_err(other)?;
                    if cache.snapshots.len() != scenario.num_steps {
                        return Err(Failure::Other(format!("{} does not match the scenario", path.display())));
                    }
                    cache.snapshots
                } else {
                    simulate_run(&sim, &scenario, seed).map_err(other)?
                };
                let mut out = Vec::new();
                for &kind in &cfg.trackers {
                    let file = match track_run(kind, &scenario, sim.model(), &snapshots, seed, &cfg) {
                        Ok((record, checkpoint)) => {
                            if let Some(ck) = checkpoint {
                                let p = ckpt_dir.join(format!("{}_seed{seed}.json", kind.name()));
                                ck.save(&p).map_err(output(&p))?;
                            }
                            RunFile::Ok(record)
                        }
                        Err(e) => RunFile::Failed(RunFailure { seed, tracker: kind, message: e.to_string() }),
                    };
                    write_run_file(&runs_dir, &file).map_err(output(&runs_dir))?;
                    out.push(file);
                }
                Ok(out)
            })
            .collect()
    })
    .map_err(other)?;
    let batch = to_batch(files.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten());
    eprintln!("tracked {} runs into {}", seeds.len(), runs_dir.display());
    check_failures(&batch)
}

fn to_batch(files: impl IntoIterator<Item = RunFile>) -> BatchResult {
    let mut batch = BatchResult::default();
    for f in files {
        match f {
            RunFile::Ok(r) => batch.records.push(r),
            RunFile::Failed(f) => batch.failures.push(f),
        }
    }
    batch
}

fn write_reports(scenario: &Scenario, batch: &BatchResult, out: &Path) -> Result<(), Failure> {
    let report = aggregate(scenario, batch).map_err(other)?;
    let written = emit_reports(&report, out).map_err(output(out))?;
    for (kind, t) in &report.trackers {
        let s = &t.summary;
        eprintln!(
            "{:>8}: mean OSPA {:.3} m, RMSE p90 {}, mean cardinality error {:.3} ({} runs, {} failed)",
            kind.name(),
            s.mean_ospa,
            s.rmse_p90.map_or("n/a".into(), |v| format!("{v:.3} m")),
            s.mean_cardinality_error,
            s.runs,
            s.failed_runs
        );
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), Failure> {
    let scenario = load_scenario(args.scenario.as_deref())?;
    let files = read_run_files(&args.out.join("runs")).map_err(other)?;
    let batch = to_batch(files);
    write_reports(&scenario, &batch, &args.out)?;
    check_failures(&batch)
}

fn bench(args: &TrackArgs) -> Result<(), Failure> {
    let c = &args.common;
    let scenario = load_scenario(c.scenario.as_deref())?;
    let cfg = run_config(c, args.tracker.kinds())?;
    std::fs::create_dir_all(&c.out).map_err(|e| output(&c.out)(e.into()))?;
    let batch = run_monte_carlo(&scenario, &cfg, None).map_err(other)?;
    write_reports(&scenario, &batch, &c.out)?;
    check_failures(&batch)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Track(a) => track(a),
        Command::Report(a) => report(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Scenario(m) => eprintln!("error: cannot read scenario: {m}"),
                Failure::Output(m) => eprintln!("error: cannot write output: {m}"),
                Failure::TooManyFailures(n, total) => eprintln!("error: {n} of {total} runs failed"),
                Failure::Other(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
