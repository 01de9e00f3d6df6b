//! Posture evaluation engine for cello practice.
//!
//! The engine consumes per-frame detections (hand landmarks, a shoulder /
//! elbow / wrist triplet, and oriented boxes for the bow and the string
//! region), classifies bow-arm posture, decides which correction
//! instructions to show, and tallies a session report. It never sees
//! pixels; any detector that emits the [`ingest::FramePacket`] format can
//! drive it.

pub mod classify;
pub mod config;
pub mod engine;
pub mod features;
pub mod feedback;
pub mod geometry;
pub mod ingest;
pub mod latency;
pub mod neuralnet;
pub mod session;
pub mod synth;
