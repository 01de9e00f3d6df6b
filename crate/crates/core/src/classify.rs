//! Per-frame posture verdicts: landmarks through the two classifiers, boxes
//! through the bow geometry.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{elbow_features, normalize_hand, ELBOW_FEATURES, HAND_FEATURES};
use crate::geometry::{classify_bow, BowAngle, BowAssessment, BowConfig, BowHeight};
use crate::ingest::FramePacket;
use crate::neuralnet::{argmax, softmax, MlpModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("model shape mismatch: {0}")]
    ModelShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// A posture class that a three-way model can emit.
pub trait PostureClass: Copy + Eq + 'static {
    /// Classes in canonical order, as named in model files.
    const MODELED: [Self; 3];
    const UNDETECTED: Self;
    fn label(self) -> &'static str;
    fn is_correct(self) -> bool;

    fn from_label(label: &str) -> Option<Self> {
        Self::MODELED.into_iter().find(|c| c.label() == label)
    }

    fn correctness(self) -> Correctness {
        if self == Self::UNDETECTED {
            Correctness::NotApplicable
        } else if self.is_correct() {
            Correctness::Correct
        } else {
            Correctness::Incorrect
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WristClass {
    Normal,
    Supinated,
    OverPronated,
    Undetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowClass {
    Normal,
    TooLow,
    TooHigh,
    Undetected,
}

impl PostureClass for WristClass {
    const MODELED: [Self; 3] = [Self::Normal, Self::Supinated, Self::OverPronated];
    const UNDETECTED: Self = Self::Undetected;

    fn label(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Supinated => "supinated",
            Self::OverPronated => "over_pronated",
            Self::Undetected => "undetected",
        }
    }

    fn is_correct(self) -> bool {
        self == Self::Normal
    }
}

impl PostureClass for ElbowClass {
    const MODELED: [Self; 3] = [Self::Normal, Self::TooLow, Self::TooHigh];
    const UNDETECTED: Self = Self::Undetected;

    fn label(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::TooLow => "too_low",
            Self::TooHigh => "too_high",
            Self::Undetected => "undetected",
        }
    }

    fn is_correct(self) -> bool {
        self == Self::Normal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correctness {
    Correct,
    Incorrect,
    NotApplicable,
}

impl Correctness {
    /// Overlay color: blue for correct, orange for incorrect.
    pub fn color(self) -> &'static str {
        match self {
            Self::Correct => "blue",
            Self::Incorrect => "orange",
            Self::NotApplicable => "none",
        }
    }
}

impl From<BowHeight> for Correctness {
    fn from(h: BowHeight) -> Self {
        match h {
            BowHeight::Ok => Self::Correct,
            BowHeight::TooHigh | BowHeight::TooLow => Self::Incorrect,
            BowHeight::NotApplicable => Self::NotApplicable,
        }
    }
}

impl From<BowAngle> for Correctness {
    fn from(a: BowAngle) -> Self {
        match a {
            BowAngle::Correct => Self::Correct,
            BowAngle::Incorrect => Self::Incorrect,
            BowAngle::NotApplicable => Self::NotApplicable,
        }
    }
}

/// A class plus the model's probabilities in canonical class order. The
/// probabilities are present exactly when the class is not `Undetected`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict<C> {
    pub class: C,
    pub probs: Option<Vec<f64>>,
}

impl<C: PostureClass> Verdict<C> {
    pub fn undetected() -> Self {
        Self {
            class: C::UNDETECTED,
            probs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub wrist: Correctness,
    pub elbow: Correctness,
    pub bow_height: Correctness,
    pub bow_angle: Correctness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Colors {
    pub wrist: &'static str,
    pub elbow: &'static str,
    pub bow_height: &'static str,
    pub bow_angle: &'static str,
}

impl Flags {
    pub fn colors(&self) -> Colors {
        Colors {
            wrist: self.wrist.color(),
            elbow: self.elbow.color(),
            bow_height: self.bow_height.color(),
            bow_angle: self.bow_angle.color(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub t_ms: u64,
    pub wrist: Verdict<WristClass>,
    pub elbow: Verdict<ElbowClass>,
    pub bow: BowAssessment,
    pub flags: Flags,
}

impl FrameResult {
    /// Assembles a result, deriving the flags from the classes.
    pub fn new(t_ms: u64, wrist: Verdict<WristClass>, elbow: Verdict<ElbowClass>, bow: BowAssessment) -> Self {
        let flags = Flags {
            wrist: wrist.class.correctness(),
            elbow: elbow.class.correctness(),
            bow_height: bow.height.into(),
            bow_angle: bow.angle.into(),
        };
        Self {
            t_ms,
            wrist,
            elbow,
            bow,
            flags,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frame results always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Hand landmark used as the origin for hand features.
    pub hand_origin_index: usize,
    /// When set, verdicts whose top probability falls below this are
    /// reported as undetected. Off by default.
    pub min_confidence: Option<f64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            hand_origin_index: crate::features::DEFAULT_HAND_ORIGIN,
            min_confidence: None,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.hand_origin_index >= crate::ingest::HAND_LANDMARKS {
            return Err(ClassifyError::BadConfig(format!(
                "hand_origin_index {} out of range",
                self.hand_origin_index
            )));
        }
        if let Some(c) = self.min_confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(ClassifyError::BadConfig(format!("min_confidence {c} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A loaded model plus the mapping from its output index to a class.
#[derive(Debug, Clone)]
struct BoundModel<C> {
    model: Arc<MlpModel>,
    classes: Vec<C>,
}

impl<C: PostureClass> BoundModel<C> {
    fn bind(model: Arc<MlpModel>, name: &str, input: usize) -> Result<Self, ClassifyError> {
        if model.input_size() != input {
            return Err(ClassifyError::ModelShapeMismatch(format!(
                "{name} model takes {} inputs, expected {input}",
                model.input_size()
            )));
        }
        let classes = model
            .class_labels()
            .iter()
            .map(|l| {
                C::from_label(l).ok_or_else(|| {
                    ClassifyError::ModelShapeMismatch(format!("{name} model has unknown class {l:?}"))
                })
            })
            .collect::<Result<Vec<C>, _>>()?;
        let distinct = C::MODELED.iter().all(|c| classes.contains(c));
        if classes.len() != C::MODELED.len() || !distinct {
            return Err(ClassifyError::ModelShapeMismatch(format!(
                "{name} model must have exactly the classes {:?}",
                C::MODELED.map(PostureClass::label)
            )));
        }
        Ok(Self { model, classes })
    }

    fn verdict(&self, x: &[f64], min_confidence: Option<f64>) -> Verdict<C> {
        let Ok(logits) = self.model.logits(x) else {
            return Verdict::undetected();
        };
        let probs = softmax(&logits);
        let best = argmax(&logits);
        if min_confidence.is_some_and(|g| probs[best] < g) {
            return Verdict::undetected();
        }
        let canonical = C::MODELED.map(|c| {
            let i = self.classes.iter().position(|&k| k == c).expect("bound classes are complete");
            probs[i]
        });
        Verdict {
            class: self.classes[best],
            probs: Some(canonical.to_vec()),
        }
    }
}

/// Immutable per-frame classifier: two models and the bow thresholds.
/// Cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct FrameClassifier {
    wrist: BoundModel<WristClass>,
    elbow: BoundModel<ElbowClass>,
    bow: BowConfig,
    cfg: ClassifyConfig,
}

impl FrameClassifier {
    pub fn new(
        wrist_model: Arc<MlpModel>,
        elbow_model: Arc<MlpModel>,
        bow: BowConfig,
        cfg: ClassifyConfig,
    ) -> Result<Self, ClassifyError> {
        bow.validate().map_err(|e| ClassifyError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(Self {
            wrist: BoundModel::bind(wrist_model, "wrist", HAND_FEATURES)?,
            elbow: BoundModel::bind(elbow_model, "elbow", ELBOW_FEATURES)?,
            bow,
            cfg,
        })
    }

    pub fn bow_config(&self) -> &BowConfig {
        &self.bow
    }

    pub fn classify_frame(&self, packet: &FramePacket) -> FrameResult {
        let wrist = packet
            .hand
            .as_ref()
            .and_then(|h| normalize_hand(h, self.cfg.hand_origin_index).ok())
            .map_or_else(Verdict::undetected, |f| self.wrist.verdict(f.as_slice(), self.cfg.min_confidence));
        let elbow = packet
            .pose
            .as_ref()
            .and_then(|p| elbow_features(p).ok())
            .map_or_else(Verdict::undetected, |f| self.elbow.verdict(f.as_slice(), self.cfg.min_confidence));
        let bow = classify_bow(packet.bow.as_ref(), packet.strings.as_ref(), &self.bow);
        FrameResult::new(packet.t_ms, wrist, elbow, bow)
    }
}
