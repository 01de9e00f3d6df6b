//! Live session registry.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use cellist_core::config::EngineConfig;
use cellist_core::engine::{EngineError, FrameOutput, ModelPair, SessionEngine};
use cellist_core::feedback::InstructionCatalog;
use cellist_core::ingest::{FramePacket, IngestError};
use cellist_core::latency::LatencyReport;
use cellist_core::session::{
    validate_identifier, SessionError, SessionRecord, SessionStore, SessionSummary, RECORD_VERSION,
};
use chrono::{DateTime, Utc};
use serde_json::Value;
use thiserror::Error;
use uuid::Uuid;

use crate::protocol::ErrorCode;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session")]
    UnknownSession,
    #[error("invalid user id: {0}")]
    BadUser(String),
    #[error("{0}")]
    BadConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("malformed record: {0}")]
    MalformedPacket(String),
}

impl ServiceError {
    pub fn code(&self) -> ErrorCode {
        match self {
            Self::UnknownSession => ErrorCode::UnknownSession,
            Self::BadUser(_) => ErrorCode::BadUser,
            Self::BadConfig(_) | Self::Engine(EngineError::Config(_) | EngineError::Classify(_)) => ErrorCode::BadConfig,
            Self::MalformedPacket(_) | Self::Engine(EngineError::Ingest(IngestError::MalformedRecord(_))) => {
                ErrorCode::MalformedRecord
            }
            Self::Engine(EngineError::Ingest(IngestError::OutOfRange { .. })) => ErrorCode::OutOfRange,
            Self::Engine(EngineError::Ingest(IngestError::NonMonotonicTimestamp { .. }))
            | Self::Session(SessionError::NonMonotonicTime { .. }) => ErrorCode::NonMonotonicTime,
            Self::Session(SessionError::EmptySession) | Self::Engine(EngineError::Session(SessionError::EmptySession)) => {
                ErrorCode::EmptySession
            }
            Self::Session(SessionError::StoreUnavailable(_) | SessionError::CorruptRecord { .. }) => {
                ErrorCode::StoreUnavailable
            }
            Self::Session(SessionError::BadIdentifier(_)) => ErrorCode::BadUser,
            _ => ErrorCode::Internal,
        }
    }
}

struct LiveSession {
    session_id: String,
    user: String,
    started_at: DateTime<Utc>,
    config: EngineConfig,
    engine: SessionEngine,
}

#[derive(Debug, Clone)]
pub struct Started {
    pub token: String,
    pub session_id: String,
    pub config: EngineConfig,
}

#[derive(Debug, Clone)]
pub struct Ended {
    pub record: SessionRecord,
    pub latency: Option<LatencyReport>,
}

impl Ended {
    pub fn summary(&self) -> &SessionSummary {
        &self.record.summary
    }
}

/// Shared service state: loaded models, defaults, the history store and
/// the sessions in flight. Frames of one session are serialized by that
/// session's lock; different sessions proceed independently.
pub struct SessionManager {
    models: ModelPair,
    defaults: EngineConfig,
    catalog: Arc<InstructionCatalog>,
    store: SessionStore,
    sessions: Mutex<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

impl SessionManager {
    pub fn new(models: ModelPair, defaults: EngineConfig, catalog: InstructionCatalog, store: SessionStore) -> Self {
        Self {
            models,
            defaults,
            catalog: Arc::new(catalog),
            store,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn defaults(&self) -> &EngineConfig {
        &self.defaults
    }

    pub fn active_sessions(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    pub fn start(&self, user: &str, overrides: Option<&Value>) -> Result<Started, ServiceError> {
        validate_identifier(user).map_err(|e| ServiceError::BadUser(e.to_string()))?;
        let config = match overrides {
            None | Some(Value::Null) => self.defaults.clone(),
            Some(Value::Object(o)) if o.contains_key("instructions_path") => {
                return Err(ServiceError::BadConfig("instructions_path is fixed by the service".into()));
            }
            Some(v) => self.defaults.with_overrides(v).map_err(|e| ServiceError::BadConfig(e.to_string()))?,
        };
        let engine = SessionEngine::new(&self.models, &config, self.catalog.clone())?;
        let token = Uuid::new_v4().to_string();
        let session_id = Uuid::new_v4().to_string();
        let live = LiveSession {
            session_id: session_id.clone(),
            user: user.to_string(),
            started_at: Utc::now(),
            config: config.clone(),
            engine,
        };
        self.sessions
            .lock()
            .expect("session map poisoned")
            .insert(token.clone(), Arc::new(Mutex::new(live)));
        Ok(Started {
            token,
            session_id,
            config,
        })
    }

    fn session(&self, token: &str) -> Result<Arc<Mutex<LiveSession>>, ServiceError> {
        self.sessions
            .lock()
            .expect("session map poisoned")
            .get(token)
            .cloned()
            .ok_or(ServiceError::UnknownSession)
    }

    /// Decodes and processes one packet. Rejected packets leave the session
    /// as it was.
    pub fn submit_value(&self, token: &str, packet: Value) -> Result<FrameOutput, ServiceError> {
        let session = self.session(token)?;
        let packet: FramePacket =
            serde_json::from_value(packet).map_err(|e| ServiceError::MalformedPacket(e.to_string()))?;
        let mut live = session.lock().expect("session poisoned");
        Ok(live.engine.submit(&packet)?)
    }

    pub fn submit(&self, token: &str, packet: &FramePacket) -> Result<FrameOutput, ServiceError> {
        let session = self.session(token)?;
        let mut live = session.lock().expect("session poisoned");
        Ok(live.engine.submit(packet)?)
    }

    /// Ends the session, persisting its record. The token is invalid
    /// afterwards, including when the session had no frames.
    pub fn end(&self, token: &str) -> Result<Ended, ServiceError> {
        let session = self
            .sessions
            .lock()
            .expect("session map poisoned")
            .remove(token)
            .ok_or(ServiceError::UnknownSession)?;
        let live = session.lock().expect("session poisoned");
        let summary = live.engine.summary()?;
        let record = SessionRecord {
            version: RECORD_VERSION,
            session_id: live.session_id.clone(),
            user: live.user.clone(),
            started_at: live.started_at,
            summary,
            config: live.config.clone(),
            model_digests: self.models.digests.clone(),
            stream_digest: live.engine.stream_digest(),
        };
        self.store.persist(&record)?;
        Ok(Ended {
            latency: LatencyReport::from_micros(live.engine.latencies_us()),
            record,
        })
    }

    /// Drops a session without persisting it.
    pub fn abandon(&self, token: &str) -> bool {
        self.sessions.lock().expect("session map poisoned").remove(token).is_some()
    }

    pub fn history(&self, user: &str) -> Result<Vec<SessionRecord>, ServiceError> {
        validate_identifier(user).map_err(|e| ServiceError::BadUser(e.to_string()))?;
        Ok(self.store.list_history(user)?)
    }
}
