//! Real-time session service for the posture engine.
//!
//! Clients connect to `/ws`, start a session, stream frame packets and get
//! one `frame_result` (or `error`) per packet, in order. Ending a session
//! returns its summary and stores a record in the per-user history.
//! Sessions live in memory only; a restart drops sessions in flight.

pub mod manager;
pub mod protocol;
pub mod ws;

pub use manager::{Ended, ServiceError, SessionManager, Started};
pub use protocol::{ClientMessage, ErrorCode, ServerMessage};
pub use ws::{handle_message, router, serve};
