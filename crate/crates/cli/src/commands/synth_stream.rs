use std::path::PathBuf;

use anyhow::Context;
use cellist_core::ingest::write_stream;
use cellist_core::synth::generate_stream;
use clap::Args;

use crate::CliError;

#[derive(Debug, Args)]
pub struct SynthStreamArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 3600)]
    pub frames: usize,
    /// How long each scripted posture scenario lasts.
    #[arg(long, default_value_t = 7000)]
    pub segment_ms: u64,
    /// Landmark noise in limb-scale units.
    #[arg(long, default_value_t = 0.03)]
    pub sigma: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SynthStreamArgs) -> Result<(), CliError> {
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) || args.segment_ms == 0 {
        return Err(CliError::user("sigma must be finite and non-negative, segment-ms positive"));
    }
    let packets = generate_stream(args.seed, args.frames, args.segment_ms, args.sigma);
    let file = std::fs::File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write_stream(std::io::BufWriter::new(file), &packets).with_context(|| format!("cannot write {}", args.out.display()))?;
    eprintln!("wrote {} frames to {}", packets.len(), args.out.display());
    Ok(())
}
