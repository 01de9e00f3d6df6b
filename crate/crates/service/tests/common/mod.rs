#![allow(dead_code)]

use std::sync::Arc;

use cellist_core::config::EngineConfig;
use cellist_core::engine::ModelPair;
use cellist_core::feedback::InstructionCatalog;
use cellist_core::ingest::{read_stream, FramePacket};
use cellist_core::session::SessionStore;
use cellist_service::SessionManager;

pub const WRIST: &[u8] = include_bytes!("../../../core/fixtures/wrist_model.json");
pub const ELBOW: &[u8] = include_bytes!("../../../core/fixtures/elbow_model.json");
pub const STREAM: &[u8] = include_bytes!("../../../core/fixtures/stream.jsonl");

pub fn models() -> ModelPair {
    ModelPair::from_bytes(WRIST, ELBOW).unwrap()
}

pub fn packets() -> Vec<FramePacket> {
    read_stream(STREAM).unwrap()
}

pub fn manager(store: &std::path::Path) -> Arc<SessionManager> {
    Arc::new(SessionManager::new(
        models(),
        EngineConfig::default(),
        InstructionCatalog::default(),
        SessionStore::open(store).unwrap(),
    ))
}
