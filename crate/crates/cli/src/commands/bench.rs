use std::path::PathBuf;

use cellist_core::latency::LatencyReport;
use clap::Args;
use serde::Serialize;

use super::replay::replay;
use crate::inputs::{load_engine, read_packets};
use crate::{CliError, EngineArgs};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub stream: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Number of full passes over the stream.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub repetitions: u32,
    /// Print a JSON report instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub runs: Vec<LatencyReport>,
    pub aggregate: LatencyReport,
}

/// Engine time only: the stream is parsed and the models are loaded before
/// timing starts, and each frame is timed inside the engine.
pub fn bench(args: &BenchArgs) -> Result<BenchReport, CliError> {
    let loaded = load_engine(&args.engine)?;
    let packets = read_packets(&args.stream)?;
    let mut runs = Vec::new();
    let mut all = Vec::new();
    for _ in 0..args.repetitions {
        let r = replay(&loaded, &packets)?;
        runs.push(LatencyReport::from_micros(&r.latencies_us).ok_or_else(|| CliError::user("stream has no frames"))?);
        all.extend(r.latencies_us);
    }
    let aggregate = LatencyReport::from_micros(&all).expect("runs are non-empty");
    Ok(BenchReport { runs, aggregate })
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    let report = bench(args)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
        return Ok(());
    }
    println!("{:<10} {:>8} {:>10} {:>10} {:>10} {:>10} {:>12}", "run", "frames", "mean_us", "p50_us", "p95_us", "p99_us", "fps");
    let rows = report
        .runs
        .iter()
        .enumerate()
        .map(|(i, r)| ((i + 1).to_string(), r))
        .chain(std::iter::once(("all".to_string(), &report.aggregate)));
    for (name, r) in rows {
        println!(
            "{:<10} {:>8} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>12.0}",
            name, r.frames, r.mean_us, r.p50_us, r.p95_us, r.p99_us, r.fps
        );
    }
    Ok(())
}
