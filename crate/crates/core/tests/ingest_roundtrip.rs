use cellist_core::ingest::{parse_frame_line, read_stream, write_stream, FramePacket};
use proptest::prelude::*;
use serde_json::{json, Map, Value};

/// Rewrites a box the way a reader should: larger extent first, angle in
/// [-90, 90), square boxes folded into [-45, 45).
fn canonical_box(b: &Value) -> Value {
    let (mut w, mut h, mut theta) = (b["w"].as_f64().unwrap(), b["h"].as_f64().unwrap(), b["theta_deg"].as_f64().unwrap());
    if h > w {
        std::mem::swap(&mut w, &mut h);
        theta += 90.0;
    }
    while theta >= 90.0 {
        theta -= 180.0;
    }
    while theta < -90.0 {
        theta += 180.0;
    }
    if w == h {
        while theta >= 45.0 {
            theta -= 90.0;
        }
        while theta < -45.0 {
            theta += 90.0;
        }
    }
    json!({"cx": b["cx"], "cy": b["cy"], "w": w, "h": h, "theta_deg": theta})
}

fn canonicalize(record: &Value) -> Value {
    let mut out = Map::new();
    out.insert("t_ms".into(), record["t_ms"].clone());
    for key in ["hand", "pose"] {
        out.insert(key.into(), record.get(key).cloned().unwrap_or(Value::Null));
    }
    for key in ["bow", "strings"] {
        let v = match record.get(key) {
            None | Some(Value::Null) => Value::Null,
            Some(b) => canonical_box(b),
        };
        out.insert(key.into(), v);
    }
    Value::Object(out)
}

fn approx_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            (x - y).abs() <= 1e-9 * x.abs().max(1.0)
        }
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| approx_eq(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| approx_eq(v, w)))
        }
        _ => a == b,
    }
}

fn coord() -> impl Strategy<Value = f64> {
    -0.5f64..=1.5
}

fn arb_box() -> impl Strategy<Value = Value> {
    (coord(), coord(), 0.001f64..0.8, 0.001f64..0.8, -720.0f64..720.0, any::<bool>()).prop_map(|(cx, cy, w, h, t, square)| {
        let h = if square { w } else { h };
        json!({"cx": cx, "cy": cy, "w": w, "h": h, "theta_deg": t})
    })
}

fn arb_record() -> impl Strategy<Value = Value> {
    (
        0u64..10_000_000,
        prop::option::of(prop::collection::vec((coord(), coord()), 21)),
        prop::option::of(prop::collection::vec(coord(), 9)),
        prop::option::of(arb_box()),
        prop::option::of(arb_box()),
        any::<[bool; 4]>(),
    )
        .prop_map(|(t, hand, pose, bow, strings, omit)| {
            let mut m = Map::new();
            m.insert("t_ms".into(), json!(t));
            let fields = [
                ("hand", hand.map(|h| json!(h.iter().map(|(x, y)| [*x, *y]).collect::<Vec<_>>()))),
                ("pose", pose.map(|p| json!({"shoulder": &p[0..3], "elbow": &p[3..6], "wrist": &p[6..9]}))),
                ("bow", bow),
                ("strings", strings),
            ];
            // absent fields are either left out or written as null
            for ((key, value), omit) in fields.into_iter().zip(omit) {
                match value {
                    Some(v) => {
                        m.insert(key.into(), v);
                    }
                    None if !omit => {
                        m.insert(key.into(), Value::Null);
                    }
                    None => {}
                }
            }
            Value::Object(m)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_parse_is_canonicalize(record in arb_record()) {
        let text = serde_json::to_string(&record).unwrap();
        let packet = parse_frame_line(&text).unwrap();
        let back: Value = serde_json::from_str(&packet.to_line()).unwrap();
        let expected = canonicalize(&record);
        prop_assert!(approx_eq(&back, &expected), "{back} != {expected}");
        // canonical records are fixed points
        prop_assert_eq!(parse_frame_line(&packet.to_line()).unwrap(), packet);
    }
}

#[test]
fn stream_round_trip() {
    let packets: Vec<FramePacket> = cellist_core::synth::generate_stream(3, 400, 2000, 0.02);
    let mut buf = Vec::new();
    write_stream(&mut buf, &packets).unwrap();
    assert_eq!(read_stream(buf.as_slice()).unwrap(), packets);
}
