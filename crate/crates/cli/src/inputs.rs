//! Loading streams, models and configs with file-and-line diagnostics.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;
use cellist_core::config::EngineConfig;
use cellist_core::engine::{load_catalog, ModelPair};
use cellist_core::feedback::InstructionCatalog;
use cellist_core::ingest::{FramePacket, StreamReader};

use crate::{CliError, EngineArgs};

pub fn read_packets(path: &Path) -> Result<Vec<FramePacket>, CliError> {
    let file = File::open(path).with_context(|| format!("cannot open stream {}", path.display()))?;
    StreamReader::new(BufReader::new(file))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::user(format!("{}:{}: {e}", path.display(), e.line())))
}

pub fn read_config(path: Option<&Path>) -> Result<EngineConfig, CliError> {
    let Some(path) = path else {
        return Ok(EngineConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let mut cfg = EngineConfig::from_json(&text).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    // a relative catalog path is relative to the config file
    if let (Some(p), Some(dir)) = (&cfg.instructions_path, path.parent()) {
        if p.is_relative() {
            cfg.instructions_path = Some(dir.join(p));
        }
    }
    Ok(cfg)
}

pub struct Loaded {
    pub models: ModelPair,
    pub config: EngineConfig,
    pub catalog: InstructionCatalog,
}

pub fn load_engine(args: &EngineArgs) -> Result<Loaded, CliError> {
    let models = ModelPair::load(&args.wrist_model, &args.elbow_model).map_err(CliError::user)?;
    let config = read_config(args.config.as_deref())?;
    let catalog = load_catalog(&config).map_err(CliError::user)?;
    Ok(Loaded {
        models,
        config,
        catalog,
    })
}
