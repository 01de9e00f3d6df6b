//! JSON messages exchanged over the WebSocket.

use cellist_core::config::EngineConfig;
use cellist_core::engine::FrameOutput;
use cellist_core::session::{SessionRecord, SessionSummary};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Start {
        user: String,
        #[serde(default)]
        config: Option<Value>,
    },
    Frame {
        token: String,
        /// Decoded separately so a bad packet is reported without losing the token.
        packet: Value,
    },
    End {
        token: String,
    },
    History {
        user: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Started {
        token: String,
        session_id: String,
        config: EngineConfig,
    },
    FrameResult(FrameOutput),
    Summary {
        session_id: String,
        summary: SessionSummary,
        stream_digest: String,
        /// 95th percentile engine time per frame, excluding transport.
        latency_p95_us: f64,
    },
    History {
        user: String,
        sessions: Vec<SessionRecord>,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    BadConfig,
    BadUser,
    UnknownSession,
    MalformedRecord,
    OutOfRange,
    NonMonotonicTime,
    EmptySession,
    StoreUnavailable,
    Internal,
}

impl ServerMessage {
    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        Self::Error {
            code,
            detail: detail.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn client_messages() {
        let m: ClientMessage = serde_json::from_value(json!({"type": "start", "user": "ana"})).unwrap();
        assert_eq!(m, ClientMessage::Start { user: "ana".into(), config: None });
        let m: ClientMessage =
            serde_json::from_value(json!({"type": "frame", "token": "t", "packet": {"t_ms": 5}})).unwrap();
        assert!(matches!(m, ClientMessage::Frame { .. }));
        assert!(serde_json::from_value::<ClientMessage>(json!({"type": "end"})).is_err());
        assert!(serde_json::from_value::<ClientMessage>(json!({"type": "end", "token": "t", "x": 1})).is_err());
    }

    #[test]
    fn error_shape() {
        let v: Value = serde_json::from_str(&ServerMessage::error(ErrorCode::UnknownSession, "nope").to_json()).unwrap();
        assert_eq!(v, json!({"type": "error", "code": "unknown_session", "detail": "nope"}));
    }
}
