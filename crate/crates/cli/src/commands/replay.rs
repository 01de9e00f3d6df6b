use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use cellist_core::engine::{FrameOutput, SessionEngine};
use cellist_core::feedback::Instruction;
use cellist_core::ingest::FramePacket;
use cellist_core::session::SessionSummary;
use clap::Args;
use serde::Serialize;

use crate::inputs::{load_engine, read_packets, Loaded};
use crate::{CliError, EngineArgs};

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Recorded stream (JSON lines).
    #[arg(long)]
    pub stream: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

/// A change in the displayed instructions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineEntry {
    pub t_ms: u64,
    pub instructions: Vec<Instruction>,
}

pub struct Replay {
    pub frames: Vec<FrameOutput>,
    pub timeline: Vec<TimelineEntry>,
    pub summary: SessionSummary,
    pub latencies_us: Vec<f64>,
}

impl Replay {
    pub fn frames_jsonl(&self) -> String {
        lines(&self.frames)
    }

    pub fn timeline_jsonl(&self) -> String {
        lines(&self.timeline)
    }
}

fn lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("outputs always serialize"));
        out.push('\n');
    }
    out
}

/// Runs a whole stream through one fresh session.
pub fn replay(loaded: &Loaded, packets: &[FramePacket]) -> Result<Replay, CliError> {
    let mut engine = SessionEngine::new(&loaded.models, &loaded.config, Arc::new(loaded.catalog.clone()))
        .map_err(CliError::user)?;
    let mut frames = Vec::with_capacity(packets.len());
    let mut timeline: Vec<TimelineEntry> = Vec::new();
    for (i, packet) in packets.iter().enumerate() {
        let out = engine
            .submit(packet)
            .map_err(|e| CliError::user(format!("record {}: {e}", i + 1)))?;
        let previous = timeline.last().map_or(&[][..], |e| e.instructions.as_slice());
        if out.instructions != previous {
            timeline.push(TimelineEntry {
                t_ms: out.t_ms,
                instructions: out.instructions.clone(),
            });
        }
        frames.push(out);
    }
    let summary = engine.summary().map_err(CliError::user)?;
    Ok(Replay {
        frames,
        timeline,
        summary,
        latencies_us: engine.latencies_us().to_vec(),
    })
}

pub fn write_outputs(replay: &Replay, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let files = [
        ("frames.jsonl", replay.frames_jsonl()),
        ("instructions.jsonl", replay.timeline_jsonl()),
        ("summary.json", replay.summary.to_pretty_json()),
    ];
    for (name, body) in files {
        let path = out.join(name);
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

pub fn run(args: &ReplayArgs) -> Result<(), CliError> {
    let loaded = load_engine(&args.engine)?;
    let packets = read_packets(&args.stream)?;
    let result = replay(&loaded, &packets)?;
    write_outputs(&result, &args.out)?;
    eprintln!(
        "replayed {} frames, {} instruction changes -> {}",
        result.frames.len(),
        result.timeline.len(),
        args.out.display()
    );
    Ok(())
}
