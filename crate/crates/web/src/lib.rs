//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings. The `*_json` functions hold
//! the logic and are plain Rust, so they are tested on the host.

use std::sync::{Arc, OnceLock};

use cellist_core::classify::FrameClassifier;
use cellist_core::config::EngineConfig;
use cellist_core::engine::{ColorsOwned, ModelPair};
use cellist_core::features::elbow_features;
use cellist_core::feedback::{active_categories, ActiveSet, ErrorCategory, FeedbackState, InstructionCatalog};
use cellist_core::geometry::{classify_bow, obb_corners, obb_intersects, zone_axis, OrientedBox};
use cellist_core::ingest::FramePacket;
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const WRIST_MODEL: &[u8] = include_bytes!("../../core/fixtures/wrist_model.json");
const ELBOW_MODEL: &[u8] = include_bytes!("../../core/fixtures/elbow_model.json");

fn models() -> &'static ModelPair {
    static MODELS: OnceLock<ModelPair> = OnceLock::new();
    MODELS.get_or_init(|| ModelPair::from_bytes(WRIST_MODEL, ELBOW_MODEL).expect("bundled models are valid"))
}

fn config(overrides: &str) -> Result<EngineConfig, String> {
    if overrides.trim().is_empty() {
        return Ok(EngineConfig::default());
    }
    let v: Value = serde_json::from_str(overrides).map_err(|e| format!("config: {e}"))?;
    EngineConfig::default().with_overrides(&v).map_err(|e| e.to_string())
}

fn parse<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("{what}: {e}"))
}

#[derive(Deserialize)]
struct RawBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta_deg: f64,
}

impl RawBox {
    fn build(&self) -> Result<OrientedBox, String> {
        OrientedBox::new(self.cx, self.cy, self.w, self.h, self.theta_deg).map_err(|e| e.to_string())
    }
}

/// Corners, contact and verdicts for a bow box against a strings box.
pub fn bow_geometry_json(bow: &str, strings: &str, overrides: &str) -> Result<String, String> {
    let cfg = config(overrides)?;
    let bow = parse::<RawBox>("bow", bow)?.build()?;
    let strings = parse::<RawBox>("strings", strings)?.build()?;
    let assessment = classify_bow(Some(&bow), Some(&strings), &cfg.bow);
    let (bridge, fingerboard) = zone_axis(&strings);
    Ok(json!({
        "bow_corners": obb_corners(&bow),
        "strings_corners": obb_corners(&strings),
        "zone_axis": [bridge, fingerboard],
        "intersects": obb_intersects(&bow, &strings),
        "assessment": assessment,
        "thresholds": cfg.bow,
    })
    .to_string())
}

/// Classifies one frame packet with the bundled models.
pub fn classify_frame_json(packet: &str, overrides: &str) -> Result<String, String> {
    let cfg = config(overrides)?;
    let packet: FramePacket = parse("packet", packet)?;
    packet.validate().map_err(|e| e.to_string())?;
    let m = models();
    let classifier = FrameClassifier::new(m.wrist.clone(), m.elbow.clone(), cfg.bow, cfg.classify)
        .map_err(|e| e.to_string())?;
    let result = classifier.classify_frame(&packet);
    let elbow_angle = packet
        .pose
        .as_ref()
        .and_then(|p| elbow_features(p).ok())
        .map(|f| f.joint_angle().to_degrees());
    let colors: ColorsOwned = result.flags.colors().into();
    let errors: Vec<ErrorCategory> = active_categories(&result).iter().collect();
    Ok(json!({
        "result": result,
        "colors": colors,
        "errors": errors,
        "elbow_angle_deg": elbow_angle,
    })
    .to_string())
}

#[derive(Deserialize)]
struct Segment {
    from_ms: u64,
    to_ms: u64,
    #[serde(default)]
    active: Vec<ErrorCategory>,
}

#[derive(Deserialize)]
struct Script {
    frame_ms: u64,
    segments: Vec<Segment>,
}

/// Runs the instruction state machine over a scripted sequence of error
/// segments sampled every `frame_ms`, returning each change of the display.
pub fn simulate_feedback_json(script: &str, overrides: &str) -> Result<String, String> {
    let cfg = config(overrides)?;
    let script: Script = parse("script", script)?;
    if script.frame_ms == 0 {
        return Err("frame_ms must be positive".into());
    }
    let end = script.segments.iter().map(|s| s.to_ms).max().unwrap_or(0);
    if end / script.frame_ms > 1_000_000 {
        return Err("script too long".into());
    }
    let catalog = Arc::new(InstructionCatalog::default());
    let mut state = FeedbackState::new(cfg.feedback, catalog.clone());
    let mut changes: Vec<Value> = Vec::new();
    let mut previous: Option<Value> = None;
    let mut t = 0;
    while t <= end {
        let active: ActiveSet = script
            .segments
            .iter()
            .filter(|s| s.from_ms <= t && t < s.to_ms)
            .flat_map(|s| s.active.iter().copied())
            .collect();
        let shown: Vec<Value> = state
            .observe(t, active)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|s| json!({"category": s.category, "text": catalog.text(s.category), "since_ms": s.since_ms}))
            .collect();
        let shown = Value::from(shown);
        if previous.as_ref() != Some(&shown) {
            changes.push(json!({"t_ms": t, "shown": shown}));
            previous = Some(shown);
        }
        t += script.frame_ms;
    }
    Ok(json!({"end_ms": end, "changes": changes}).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bow_geometry(bow: &str, strings: &str, config: &str) -> Result<String, JsError> {
    js(bow_geometry_json(bow, strings, config))
}

#[wasm_bindgen]
pub fn classify_frame(packet: &str, config: &str) -> Result<String, JsError> {
    js(classify_frame_json(packet, config))
}

#[wasm_bindgen]
pub fn simulate_feedback(script: &str, config: &str) -> Result<String, JsError> {
    js(simulate_feedback_json(script, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    const STRINGS: &str = r#"{"cx":0.5,"cy":0.5,"w":0.6,"h":0.1,"theta_deg":-90}"#;

    #[test]
    fn perpendicular_bow_in_the_middle() {
        let bow = r#"{"cx":0.5,"cy":0.5,"w":0.5,"h":0.02,"theta_deg":0}"#;
        let v = value(bow_geometry_json(bow, STRINGS, "").unwrap());
        assert_eq!(v["intersects"], true);
        assert_eq!(v["assessment"]["height"], "ok");
        assert_eq!(v["assessment"]["angle"], "correct");
        assert_eq!(v["bow_corners"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn tilted_bow_is_flagged_and_tolerance_applies() {
        let bow = r#"{"cx":0.5,"cy":0.5,"w":0.5,"h":0.02,"theta_deg":20}"#;
        let v = value(bow_geometry_json(bow, STRINGS, "").unwrap());
        assert_eq!(v["assessment"]["angle"], "incorrect");
        let v = value(bow_geometry_json(bow, STRINGS, r#"{"angle_tolerance_deg": 25}"#).unwrap());
        assert_eq!(v["assessment"]["angle"], "correct");
    }

    #[test]
    fn geometry_errors_are_messages() {
        assert!(bow_geometry_json("{}", STRINGS, "").is_err());
        let flat = r#"{"cx":0.5,"cy":0.5,"w":0.0,"h":0.02,"theta_deg":0}"#;
        assert!(bow_geometry_json(flat, STRINGS, "").is_err());
        assert!(bow_geometry_json(STRINGS, STRINGS, r#"{"low_threshold": 2}"#).is_err());
    }

    #[test]
    fn classifies_fixture_frames() {
        let stream = include_str!("../../core/fixtures/stream.jsonl");
        for line in stream.lines().step_by(97) {
            let v = value(classify_frame_json(line, "").unwrap());
            assert!(v["colors"]["elbow"].is_string());
            if let Some(a) = v["elbow_angle_deg"].as_f64() {
                assert!((0.0..=180.0).contains(&a), "{a}");
            }
        }
        let v = value(classify_frame_json(r#"{"t_ms": 0}"#, "").unwrap());
        assert_eq!(v["result"]["elbow"]["class"], "undetected");
        assert_eq!(v["errors"], json!([]));
    }

    #[test]
    fn feedback_script_shows_after_onset() {
        let script = r#"{"frame_ms": 100, "segments": [
            {"from_ms": 0, "to_ms": 8000, "active": ["elbow_too_low"]},
            {"from_ms": 2000, "to_ms": 9000, "active": ["bow_angle_off"]},
            {"from_ms": 9000, "to_ms": 12000}
        ]}"#;
        let v = value(simulate_feedback_json(script, "").unwrap());
        let changes = v["changes"].as_array().unwrap();
        assert_eq!(changes[0], json!({"t_ms": 0, "shown": []}));
        assert_eq!(changes[1]["t_ms"], 5000);
        assert_eq!(changes[1]["shown"][0]["category"], "elbow_too_low");
        assert_eq!(changes[2]["t_ms"], 7000);
        assert_eq!(changes[2]["shown"].as_array().unwrap().len(), 2);
        // last elbow frame is 7900, so its streak is over 500 ms later
        assert_eq!(changes[3]["t_ms"], 8400);
        assert_eq!(changes[3]["shown"][0]["category"], "bow_angle_off");
        // the bow instruction must stay 3000 ms even though its streak ends sooner
        assert_eq!(changes[4]["t_ms"], 10000);
        assert_eq!(changes.last().unwrap()["shown"], json!([]));
    }

    #[test]
    fn feedback_rejects_bad_scripts() {
        assert!(simulate_feedback_json(r#"{"frame_ms": 0, "segments": []}"#, "").is_err());
        assert!(simulate_feedback_json(r#"{"frame_ms": 10, "segments": [{"from_ms":0,"to_ms":10,"active":["nope"]}]}"#, "").is_err());
    }
}
