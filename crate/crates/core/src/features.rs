//! Classifier inputs derived from raw landmarks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PoseTriplet, HAND_LANDMARKS};

pub const HAND_FEATURES: usize = 2 * HAND_LANDMARKS;
pub const ELBOW_FEATURES: usize = 9;

/// Landmark used as the hand origin. Index 0 is the wrist-base node of the
/// standard 21-point hand topology.
pub const DEFAULT_HAND_ORIGIN: usize = 0;

const DEGENERATE_EPS: f64 = 1e-9;
const POSE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("expected {HAND_LANDMARKS} hand points, got {0}")]
    WrongLandmarkCount(usize),
    #[error("origin index {0} out of range")]
    BadOrigin(usize),
    #[error("hand landmarks collapse to a single point")]
    DegenerateHand,
    #[error("pose joints coincide")]
    DegeneratePose,
}

/// Hand coordinates translated to the origin node and scaled into the unit
/// disc, flattened as `x0, y0, x1, y1, ...` in landmark order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandFeatureVector(pub Vec<f64>);

/// `[angle_rad, |shoulder-elbow|, |elbow-wrist|, u_se.xyz, u_we.xyz]` where
/// `u_se` points from shoulder to elbow and `u_we` from wrist to elbow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowFeatureVector(pub [f64; ELBOW_FEATURES]);

impl HandFeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl ElbowFeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn joint_angle(&self) -> f64 {
        self.0[0]
    }
}

pub fn normalize_hand(points: &[[f64; 2]], origin_index: usize) -> Result<HandFeatureVector, FeatureError> {
    if points.len() != HAND_LANDMARKS {
        return Err(FeatureError::WrongLandmarkCount(points.len()));
    }
    let origin = *points.get(origin_index).ok_or(FeatureError::BadOrigin(origin_index))?;
    let centered: Vec<[f64; 2]> = points.iter().map(|p| [p[0] - origin[0], p[1] - origin[1]]).collect();
    let scale = centered.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    if scale <= DEGENERATE_EPS {
        return Err(FeatureError::DegenerateHand);
    }
    Ok(HandFeatureVector(
        centered.iter().flat_map(|p| [p[0] / scale, p[1] / scale]).collect(),
    ))
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn elbow_features(pose: &PoseTriplet) -> Result<ElbowFeatureVector, FeatureError> {
    let se = sub3(pose.elbow, pose.shoulder);
    let we = sub3(pose.elbow, pose.wrist);
    let (d_se, d_we) = (norm3(se), norm3(we));
    if d_se <= POSE_EPS || d_we <= POSE_EPS || norm3(sub3(pose.wrist, pose.shoulder)) <= POSE_EPS {
        return Err(FeatureError::DegeneratePose);
    }
    let u_se = se.map(|c| c / d_se);
    let u_we = we.map(|c| c / d_we);
    // angle at the elbow between elbow->shoulder (-u_se) and elbow->wrist (-u_we)
    let cos = (u_se[0] * u_we[0] + u_se[1] * u_we[1] + u_se[2] * u_we[2]).clamp(-1.0, 1.0);
    let angle = cos.acos();
    Ok(ElbowFeatureVector([
        angle, d_se, d_we, u_se[0], u_se[1], u_se[2], u_we[0], u_we[1], u_we[2],
    ]))
}
