//! One evaluation session: classification, instruction timing, tallies.
//!
//! Both offline replay and the live service drive sessions through
//! [`SessionEngine::submit`], so they produce identical outputs for the same
//! packets.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyError, Colors, FrameClassifier, FrameResult};
use crate::config::{ConfigError, EngineConfig};
use crate::feedback::{FeedbackState, Instruction, InstructionCatalog};
use crate::ingest::{FramePacket, IngestError};
use crate::neuralnet::{self, MlpModel, NnError};
use crate::session::{sha256_hex, ModelDigests, SessionAccumulator, SessionError, SessionSummary, StreamDigest};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Model { path: String, source: NnError },
    #[error("{path}: {source}")]
    Catalog {
        path: String,
        source: crate::feedback::FeedbackError,
    },
}

/// Wrist and elbow models plus digests of the files they came from.
#[derive(Debug, Clone)]
pub struct ModelPair {
    pub wrist: Arc<MlpModel>,
    pub elbow: Arc<MlpModel>,
    pub digests: ModelDigests,
}

impl ModelPair {
    pub fn from_bytes(wrist: &[u8], elbow: &[u8]) -> Result<Self, EngineError> {
        Self::parse(("wrist model", wrist), ("elbow model", elbow))
    }

    pub fn load(wrist: &Path, elbow: &Path) -> Result<Self, EngineError> {
        let read = |p: &Path| {
            std::fs::read(p).map_err(|e| EngineError::Model {
                path: p.display().to_string(),
                source: NnError::Io(e),
            })
        };
        let (w, e) = (read(wrist)?, read(elbow)?);
        Self::parse((&wrist.display().to_string(), &w), (&elbow.display().to_string(), &e))
    }

    fn parse(wrist: (&str, &[u8]), elbow: (&str, &[u8])) -> Result<Self, EngineError> {
        let model = |(name, bytes): (&str, &[u8])| {
            neuralnet::load(bytes).map(Arc::new).map_err(|source| EngineError::Model {
                path: name.to_string(),
                source,
            })
        };
        Ok(Self {
            wrist: model(wrist)?,
            elbow: model(elbow)?,
            digests: ModelDigests {
                wrist: sha256_hex(wrist.1),
                elbow: sha256_hex(elbow.1),
            },
        })
    }
}

/// Loads the instruction catalog named by the config, or the bundled one.
pub fn load_catalog(cfg: &EngineConfig) -> Result<InstructionCatalog, EngineError> {
    let Some(path) = &cfg.instructions_path else {
        return Ok(InstructionCatalog::default());
    };
    let catalog_err = |source| EngineError::Catalog {
        path: path.display().to_string(),
        source,
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| catalog_err(crate::feedback::FeedbackError::BadCatalog(e.to_string())))?;
    InstructionCatalog::from_json(&text).map_err(catalog_err)
}

/// What a client sees for each frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutput {
    pub t_ms: u64,
    pub result: FrameResult,
    pub instructions: Vec<Instruction>,
    pub colors: ColorsOwned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorsOwned {
    pub wrist: String,
    pub elbow: String,
    pub bow_height: String,
    pub bow_angle: String,
}

impl From<Colors> for ColorsOwned {
    fn from(c: Colors) -> Self {
        Self {
            wrist: c.wrist.into(),
            elbow: c.elbow.into(),
            bow_height: c.bow_height.into(),
            bow_angle: c.bow_angle.into(),
        }
    }
}

/// Per-session pipeline state.
#[derive(Debug, Clone)]
pub struct SessionEngine {
    classifier: FrameClassifier,
    feedback: FeedbackState,
    acc: SessionAccumulator,
    digest: StreamDigest,
    last_t: Option<u64>,
    latencies_us: Vec<f64>,
}

impl SessionEngine {
    pub fn new(models: &ModelPair, cfg: &EngineConfig, catalog: Arc<InstructionCatalog>) -> Result<Self, EngineError> {
        cfg.validate()?;
        let classifier = FrameClassifier::new(models.wrist.clone(), models.elbow.clone(), cfg.bow, cfg.classify)?;
        Ok(Self {
            classifier,
            feedback: FeedbackState::new(cfg.feedback, catalog),
            acc: SessionAccumulator::new(),
            digest: StreamDigest::new(),
            last_t: None,
            latencies_us: Vec::new(),
        })
    }

    /// Processes one packet. A rejected packet leaves the session unchanged.
    pub fn submit(&mut self, packet: &FramePacket) -> Result<FrameOutput, EngineError> {
        packet.validate()?;
        if let Some(previous) = self.last_t {
            if packet.t_ms <= previous {
                return Err(IngestError::NonMonotonicTimestamp {
                    previous,
                    got: packet.t_ms,
                }
                .into());
            }
        }
        let started = Instant::now();
        let result = self.classifier.classify_frame(packet);
        let instructions = self
            .feedback
            .update(&result)
            .expect("timestamps were checked before feedback");
        self.acc.accumulate(&result)?;
        self.latencies_us.push(started.elapsed().as_secs_f64() * 1e6);
        self.digest.update(packet);
        self.last_t = Some(packet.t_ms);
        Ok(FrameOutput {
            t_ms: packet.t_ms,
            colors: result.flags.colors().into(),
            result,
            instructions,
        })
    }

    pub fn frames(&self) -> u64 {
        self.acc.total_frames()
    }

    pub fn summary(&self) -> Result<SessionSummary, SessionError> {
        self.acc.summarize()
    }

    pub fn stream_digest(&self) -> String {
        self.digest.hex()
    }

    /// Engine time per accepted frame, in microseconds.
    pub fn latencies_us(&self) -> &[f64] {
        &self.latencies_us
    }

    pub fn feedback(&self) -> &FeedbackState {
        &self.feedback
    }
}
