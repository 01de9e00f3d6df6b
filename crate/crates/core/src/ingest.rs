//! Frame-stream data model and the line-delimited JSON stream format.
//!
//! One record per line:
//!
//! ```text
//! {"t_ms":0,"hand":[[x,y],...21],"pose":{"shoulder":[x,y,z],...},"bow":{...},"strings":{...}}
//! ```
//!
//! Absent detections are `null`. Coordinates may sit slightly outside the
//! frame (`[-0.5, 1.5]`); anything further out is treated as corrupt.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::OrientedBox;

pub const HAND_LANDMARKS: usize = 21;
pub const COORD_MIN: f64 = -0.5;
pub const COORD_MAX: f64 = 1.5;

pub type HandLandmarks = [[f64; 2]; HAND_LANDMARKS];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("{field} = {value} is outside [{COORD_MIN}, {COORD_MAX}]")]
    OutOfRange { field: String, value: f64 },
    #[error("timestamp {got} ms does not follow {previous} ms")]
    NonMonotonicTimestamp { previous: u64, got: u64 },
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: IngestError,
    },
    #[error("line {line}: read failed: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

impl StreamError {
    pub fn line(&self) -> usize {
        match self {
            StreamError::Record { line, .. } | StreamError::Io { line, .. } => *line,
        }
    }
}

/// Bow-side shoulder, elbow and wrist in normalized image coordinates plus
/// relative depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseTriplet {
    pub shoulder: [f64; 3],
    pub elbow: [f64; 3],
    pub wrist: [f64; 3],
}

impl PoseTriplet {
    /// Two of the three joints coincide exactly.
    pub fn is_degenerate(&self) -> bool {
        self.shoulder == self.elbow || self.elbow == self.wrist || self.shoulder == self.wrist
    }
}

/// One timestamped observation from the upstream detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramePacket {
    pub t_ms: u64,
    #[serde(default)]
    pub hand: Option<HandLandmarks>,
    #[serde(default)]
    pub pose: Option<PoseTriplet>,
    #[serde(default)]
    pub bow: Option<OrientedBox>,
    #[serde(default)]
    pub strings: Option<OrientedBox>,
}

impl FramePacket {
    pub fn empty(t_ms: u64) -> Self {
        Self {
            t_ms,
            hand: None,
            pose: None,
            bow: None,
            strings: None,
        }
    }

    /// Checks every coordinate against the accepted range.
    pub fn validate(&self) -> Result<(), IngestError> {
        let check = |field: String, value: f64| {
            if (COORD_MIN..=COORD_MAX).contains(&value) {
                Ok(())
            } else {
                Err(IngestError::OutOfRange { field, value })
            }
        };
        if let Some(hand) = &self.hand {
            for (i, p) in hand.iter().enumerate() {
                check(format!("hand[{i}].x"), p[0])?;
                check(format!("hand[{i}].y"), p[1])?;
            }
        }
        if let Some(pose) = &self.pose {
            for (name, p) in [("shoulder", pose.shoulder), ("elbow", pose.elbow), ("wrist", pose.wrist)] {
                for (axis, v) in ["x", "y", "z"].iter().zip(p) {
                    check(format!("pose.{name}.{axis}"), v)?;
                }
            }
        }
        for (name, b) in [("bow", &self.bow), ("strings", &self.strings)] {
            if let Some(b) = b {
                check(format!("{name}.cx"), b.cx())?;
                check(format!("{name}.cy"), b.cy())?;
            }
        }
        Ok(())
    }

    /// Canonical single-line serialization (no trailing newline).
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frame packets always serialize")
    }
}

/// Parses and validates one record. Timestamp ordering is checked by
/// [`StreamReader`], not here.
pub fn parse_frame_line(text: &str) -> Result<FramePacket, IngestError> {
    let packet: FramePacket =
        serde_json::from_str(text).map_err(|e| IngestError::MalformedRecord(e.to_string()))?;
    packet.validate()?;
    Ok(packet)
}

/// Reads packets line by line and enforces strictly increasing timestamps.
/// Blank lines are skipped. After the first error the reader is exhausted.
pub struct StreamReader<R> {
    source: R,
    line: usize,
    last_t: Option<u64>,
    failed: bool,
    buf: String,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(source: R) -> Self {
        Self {
            source,
            line: 0,
            last_t: None,
            failed: false,
            buf: String::new(),
        }
    }

    fn fail(&mut self, err: StreamError) -> Option<Result<FramePacket, StreamError>> {
        self.failed = true;
        Some(Err(err))
    }
}

impl<R: BufRead> Iterator for StreamReader<R> {
    type Item = Result<FramePacket, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            self.line += 1;
            let line = self.line;
            match self.source.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => return self.fail(StreamError::Io { line, source }),
            }
            let text = self.buf.trim();
            if text.is_empty() {
                continue;
            }
            let packet = match parse_frame_line(text) {
                Ok(p) => p,
                Err(source) => return self.fail(StreamError::Record { line, source }),
            };
            if let Some(previous) = self.last_t {
                if packet.t_ms <= previous {
                    let source = IngestError::NonMonotonicTimestamp {
                        previous,
                        got: packet.t_ms,
                    };
                    return self.fail(StreamError::Record { line, source });
                }
            }
            self.last_t = Some(packet.t_ms);
            return Some(Ok(packet));
        }
    }
}

/// Reads a whole stream, stopping at the first error.
pub fn read_stream<R: BufRead>(source: R) -> Result<Vec<FramePacket>, StreamError> {
    StreamReader::new(source).collect()
}

/// Writes packets in canonical line form.
pub fn write_stream<W: std::io::Write>(mut sink: W, packets: &[FramePacket]) -> std::io::Result<()> {
    for p in packets {
        writeln!(sink, "{}", p.to_line())?;
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_json(n: usize) -> String {
        let pts: Vec<String> = (0..n).map(|i| format!("[{},{}]", 0.4 + i as f64 * 0.01, 0.5)).collect();
        format!("[{}]", pts.join(","))
    }

    #[test]
    fn all_absent_record() {
        let p = parse_frame_line(r#"{"t_ms": 42, "hand": null, "pose": null, "bow": null, "strings": null}"#).unwrap();
        assert_eq!(p, FramePacket::empty(42));
        assert_eq!(p.to_line(), r#"{"t_ms":42,"hand":null,"pose":null,"bow":null,"strings":null}"#);
    }

    #[test]
    fn missing_optional_keys_are_absent() {
        assert_eq!(parse_frame_line(r#"{"t_ms":7}"#).unwrap(), FramePacket::empty(7));
    }

    #[test]
    fn wrong_landmark_count() {
        let line = format!(r#"{{"t_ms":0,"hand":{}}}"#, hand_json(20));
        assert!(matches!(parse_frame_line(&line), Err(IngestError::MalformedRecord(_))));
        let line = format!(r#"{{"t_ms":0,"hand":{}}}"#, hand_json(21));
        assert!(parse_frame_line(&line).unwrap().hand.is_some());
    }

    #[test]
    fn syntax_and_schema_errors() {
        for bad in [
            "",
            "{",
            r#"{"t_ms":-1}"#,
            r#"{"t_ms":1.5}"#,
            r#"{"hand":null}"#,
            r#"{"t_ms":0,"extra":1}"#,
            r#"{"t_ms":0,"bow":{"cx":0.5,"cy":0.5,"w":0,"h":0.1,"theta_deg":0}}"#,
            r#"{"t_ms":0,"pose":{"shoulder":[0,0,0],"elbow":[1,0,0]}}"#,
        ] {
            assert!(matches!(parse_frame_line(bad), Err(IngestError::MalformedRecord(_))), "{bad}");
        }
    }

    #[test]
    fn coordinate_range() {
        let ok = r#"{"t_ms":0,"pose":{"shoulder":[-0.5,1.5,0],"elbow":[0.2,0.3,0.1],"wrist":[0.3,0.4,0.0]}}"#;
        assert!(parse_frame_line(ok).is_ok());
        let bad = r#"{"t_ms":0,"pose":{"shoulder":[-0.51,0.5,0],"elbow":[0.2,0.3,0.1],"wrist":[0.3,0.4,0.0]}}"#;
        match parse_frame_line(bad) {
            Err(IngestError::OutOfRange { field, .. }) => assert_eq!(field, "pose.shoulder.x"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"t_ms":0,"strings":{"cx":1.6,"cy":0.5,"w":0.2,"h":0.1,"theta_deg":0}}"#;
        assert!(matches!(parse_frame_line(bad), Err(IngestError::OutOfRange { .. })));
    }

    #[test]
    fn box_is_canonicalized_on_parse() {
        let p = parse_frame_line(r#"{"t_ms":0,"bow":{"cx":0.5,"cy":0.5,"w":0.1,"h":0.4,"theta_deg":0}}"#).unwrap();
        assert_eq!(
            p.to_line(),
            r#"{"t_ms":0,"hand":null,"pose":null,"bow":{"cx":0.5,"cy":0.5,"w":0.4,"h":0.1,"theta_deg":-90.0},"strings":null}"#
        );
    }

    #[test]
    fn degenerate_pose_is_accepted_and_flagged() {
        let p = parse_frame_line(r#"{"t_ms":0,"pose":{"shoulder":[0.1,0.1,0],"elbow":[0.1,0.1,0],"wrist":[0.3,0.4,0]}}"#).unwrap();
        assert!(p.pose.unwrap().is_degenerate());
    }

    #[test]
    fn empty_stream() {
        assert!(read_stream("".as_bytes()).unwrap().is_empty());
        assert!(read_stream("\n\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn ordered_stream() {
        let text = "{\"t_ms\":0}\n{\"t_ms\":33}\n{\"t_ms\":66}\n";
        let ts: Vec<u64> = read_stream(text.as_bytes()).unwrap().iter().map(|p| p.t_ms).collect();
        assert_eq!(ts, [0, 33, 66]);
    }

    #[test]
    fn duplicate_timestamp_reports_line() {
        let text = "{\"t_ms\":0}\n{\"t_ms\":33}\n{\"t_ms\":33}\n{\"t_ms\":99}\n";
        let mut reader = StreamReader::new(text.as_bytes());
        assert!(reader.next().unwrap().is_ok());
        assert!(reader.next().unwrap().is_ok());
        let err = reader.next().unwrap().unwrap_err();
        assert_eq!(err.line(), 3);
        assert!(matches!(
            err,
            StreamError::Record {
                source: IngestError::NonMonotonicTimestamp { previous: 33, got: 33 },
                ..
            }
        ));
        assert!(reader.next().is_none(), "reader must stop after an error");
    }

    #[test]
    fn parse_error_line_numbers_count_blank_lines() {
        let text = "{\"t_ms\":0}\n\n{oops\n";
        assert_eq!(read_stream(text.as_bytes()).unwrap_err().line(), 3);
    }
}
