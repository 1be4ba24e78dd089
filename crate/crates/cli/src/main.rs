//! Command-line front end: simulate the world, run the full prediction
//! pipeline, evaluate a recorded run, and export plot-ready data bundles.
//!
//! Every command is deterministic given a config file and seed, and writes
//! only under its output directory. Exit codes: 2 for invalid configuration,
//! 3 for I/O failures, 4 for a missing record file, 1 for anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use zonopred::config::RunConfig;
use zonopred::export;
use zonopred::sim::{
    baseline_metrics, compute_metrics, run_experiment, simulate_world, timing_report,
};
use zonopred::{Error, MetricsReport, TimingReport};

#[derive(Parser)]
#[command(name = "zonopred", version, about = "Occupancy prediction for tracked vehicles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the world loop only and write trajectory and measurement CSVs.
    Simulate {
        /// TOML config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline and export records, metrics, and timings.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the prediction horizon.
        #[arg(long)]
        np: Option<usize>,
        /// Also score the fixed worst-case control set and embed the
        /// comparison in the metrics.
        #[arg(long)]
        baseline: bool,
        /// Also write the full reachable tubes (large).
        #[arg(long)]
        dump_tubes: bool,
        /// Run a batch over these seeds, one subdirectory per seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads for seed batches.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Summarize a recorded run: success rates per step and timing.
    Evaluate {
        /// Directory a `run` command wrote.
        record_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Write plot-ready CSV bundles next to a recorded run.
    ExportPlots {
        record_dir: PathBuf,
        /// Keep occupancy polygons only for these iteration indices.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) => 2,
        Error::Io(_) => 3,
        Error::MissingRecordFile(_) => 4,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { config, seed, out } => {
            let cfg = load_config(config.as_deref(), seed, out, None)?;
            let trace = simulate_world(&cfg)?;
            let files = export::write_world_exports(&trace, cfg.run.t_s, &cfg.run.output_dir)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Run { config, seed, out, np, baseline, dump_tubes, seeds, jobs } => {
            let cfg = load_config(config.as_deref(), seed, out, np)?;
            match seeds {
                None => {
                    run_one(&cfg, &cfg.run.output_dir.clone(), baseline, dump_tubes)
                }
                Some(seeds) => run_batch(&cfg, &seeds, jobs.max(1), baseline, dump_tubes),
            }
        }
        Command::Evaluate { record_dir, format } => evaluate(&record_dir, format),
        Command::ExportPlots { record_dir, steps } => {
            let files = export::export_plot_bundles(&record_dir, steps.as_deref())?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

fn load_config(
    path: Option<&Path>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    np: Option<usize>,
) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = out {
        cfg.run.output_dir = out;
    }
    if let Some(np) = np {
        cfg.reachability.horizon = np;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_one(cfg: &RunConfig, dir: &Path, baseline: bool, dump_tubes: bool) -> Result<(), Error> {
    let record = run_experiment(cfg)?;
    let mut metrics = compute_metrics(&record)?;
    if baseline {
        metrics.baseline = Some(baseline_metrics(&record, &metrics)?);
    }
    let timing = timing_report(&record)?;
    let files = export::write_run_exports(&record, &metrics, &timing, dir, dump_tubes)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    println!(
        "seed {}: containment {:.2}%, occupancy overall {:.2}%",
        cfg.run.seed, metrics.control_containment_percent, metrics.occupancy_overall_percent
    );
    Ok(())
}

/// One run per seed into `out/seed-N/`, fanned out over at most `jobs`
/// threads. Results stay deterministic per seed because each run owns its
/// config and output directory; only console interleaving varies.
fn run_batch(
    base: &RunConfig,
    seeds: &[u64],
    jobs: usize,
    baseline: bool,
    dump_tubes: bool,
) -> Result<(), Error> {
    let root = base.run.output_dir.clone();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: std::sync::Mutex<Vec<Option<Result<(), Error>>>> =
        std::sync::Mutex::new((0..seeds.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(seeds.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let mut cfg = base.clone();
                cfg.run.seed = seeds[i];
                let dir = root.join(format!("seed-{}", seeds[i]));
                let outcome = run_one(&cfg, &dir, baseline, dump_tubes);
                results.lock().expect("results lock")[i] = Some(outcome);
            });
        }
    });

    for outcome in results.into_inner().expect("results lock") {
        outcome.expect("every seed ran")?;
    }
    Ok(())
}

fn evaluate(dir: &Path, format: Format) -> Result<(), Error> {
    let metrics = export::read_metrics(dir)?;
    let timing = export::read_timings(dir)?;
    let summary = serde_json::json!({ "metrics": metrics, "timing": timing });
    let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    std::fs::write(dir.join("evaluation.json"), format!("{json}\n")).map_err(Error::from)?;

    match format {
        Format::Json => println!("{json}"),
        Format::Table => print_tables(&metrics, &timing),
    }
    Ok(())
}

fn print_tables(metrics: &MetricsReport, timing: &TimingReport) {
    println!("occupancy success and mean area per prediction step");
    println!("{:>4}  {:>9}  {:>12}", "step", "success%", "mean area m2");
    for (i, (rate, area)) in metrics
        .occupancy_step_percent
        .iter()
        .zip(&metrics.mean_step_area)
        .enumerate()
    {
        println!("{:>4}  {:>9.2}  {:>12.2}", i + 1, rate, area);
    }
    println!(
        "overall occupancy success: {:.2}%  ({} iterations, horizon {})",
        metrics.occupancy_overall_percent, metrics.iterations, metrics.horizon
    );
    println!("control containment: {:.2}%", metrics.control_containment_percent);
    if let Some(b) = &metrics.baseline {
        println!(
            "worst-case baseline: final-step area ratio {:.2}",
            b.final_step_area_ratio
        );
    }
    let s = &timing.mean_stage_seconds;
    println!(
        "mean per-iteration cost: {:.3} ms (estimator {:.3}, control fit {:.3}, reachability {:.3}, occupancy {:.3})",
        timing.mean_total_seconds * 1e3,
        s.estimator * 1e3,
        s.control_fit * 1e3,
        s.reachability * 1e3,
        s.occupancy * 1e3
    );
}
