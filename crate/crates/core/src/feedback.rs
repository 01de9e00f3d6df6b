//! Correction-instruction timing.
//!
//! Rules, applied on every frame in timestamp order:
//!
//! 1. An error category's streak survives gaps shorter than the flicker
//!    allowance. A category becomes eligible for display once it is active
//!    and its streak is at least `onset_ms` old.
//! 2. A displayed instruction leaves only when it has been shown for at
//!    least `min_display_ms` and its streak has ended.
//! 3. Eligible categories fill free slots by cumulative error-frame count,
//!    highest first; ties go to category order.
//! 4. A displayed instruction is never evicted by a newly eligible one.
//!
//! Frames without a detection for a category count as "not active": short
//! runs of them are bridged by the allowance, longer ones end the streak.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ElbowClass, FrameResult, WristClass};
use crate::geometry::{BowAngle, BowHeight};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeedbackError {
    #[error("frame at {got} ms does not follow {previous} ms")]
    NonMonotonicTime { previous: u64, got: u64 },
    #[error("invalid feedback config: {0}")]
    BadConfig(String),
    #[error("invalid instruction catalog: {0}")]
    BadCatalog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    WristSupinated,
    WristOverPronated,
    ElbowTooLow,
    ElbowTooHigh,
    BowTooHigh,
    BowTooLow,
    BowAngleOff,
    BowOutOfZone,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 8] = [
        Self::WristSupinated,
        Self::WristOverPronated,
        Self::ElbowTooLow,
        Self::ElbowTooHigh,
        Self::BowTooHigh,
        Self::BowTooLow,
        Self::BowAngleOff,
        Self::BowOutOfZone,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::WristSupinated => "wrist_supinated",
            Self::WristOverPronated => "wrist_over_pronated",
            Self::ElbowTooLow => "elbow_too_low",
            Self::ElbowTooHigh => "elbow_too_high",
            Self::BowTooHigh => "bow_too_high",
            Self::BowTooLow => "bow_too_low",
            Self::BowAngleOff => "bow_angle_off",
            Self::BowOutOfZone => "bow_out_of_zone",
        }
    }
}

/// Set of categories active in one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ActiveSet(u8);

impl ActiveSet {
    pub fn insert(&mut self, c: ErrorCategory) {
        self.0 |= 1 << c.index();
    }

    pub fn contains(self, c: ErrorCategory) -> bool {
        self.0 & (1 << c.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ErrorCategory> {
        ErrorCategory::ALL.into_iter().filter(move |c| self.contains(*c))
    }
}

impl FromIterator<ErrorCategory> for ActiveSet {
    fn from_iter<I: IntoIterator<Item = ErrorCategory>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|c| s.insert(c));
        s
    }
}

/// Errors present in a frame. At most one per aspect (wrist, elbow, bow
/// height or zone, bow angle); an out-of-zone bow suppresses the other bow
/// categories.
pub fn active_categories(r: &FrameResult) -> ActiveSet {
    let mut s = ActiveSet::default();
    match r.wrist.class {
        WristClass::Supinated => s.insert(ErrorCategory::WristSupinated),
        WristClass::OverPronated => s.insert(ErrorCategory::WristOverPronated),
        WristClass::Normal | WristClass::Undetected => {}
    }
    match r.elbow.class {
        ElbowClass::TooLow => s.insert(ErrorCategory::ElbowTooLow),
        ElbowClass::TooHigh => s.insert(ErrorCategory::ElbowTooHigh),
        ElbowClass::Normal | ElbowClass::Undetected => {}
    }
    if r.bow.out_of_zone() {
        s.insert(ErrorCategory::BowOutOfZone);
    } else {
        match r.bow.height {
            BowHeight::TooHigh => s.insert(ErrorCategory::BowTooHigh),
            BowHeight::TooLow => s.insert(ErrorCategory::BowTooLow),
            BowHeight::Ok | BowHeight::NotApplicable => {}
        }
        if r.bow.angle == BowAngle::Incorrect {
            s.insert(ErrorCategory::BowAngleOff);
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackConfig {
    pub onset_ms: u64,
    pub min_display_ms: u64,
    pub flicker_allowance_ms: u64,
    pub max_displayed: usize,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self {
            onset_ms: 5000,
            min_display_ms: 3000,
            flicker_allowance_ms: 500,
            max_displayed: 2,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<(), FeedbackError> {
        if self.max_displayed == 0 {
            return Err(FeedbackError::BadConfig("max_displayed must be positive".into()));
        }
        if self.flicker_allowance_ms == 0 {
            return Err(FeedbackError::BadConfig("flicker_allowance_ms must be positive".into()));
        }
        Ok(())
    }
}

/// Display text per category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionCatalog {
    texts: BTreeMap<ErrorCategory, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    version: u32,
    instructions: BTreeMap<ErrorCategory, String>,
}

impl InstructionCatalog {
    pub const DEFAULT_JSON: &'static str = include_str!("../data/instructions.json");

    /// Parses a catalog document; every category needs a non-empty text.
    pub fn from_json(text: &str) -> Result<Self, FeedbackError> {
        let file: CatalogFile = serde_json::from_str(text).map_err(|e| FeedbackError::BadCatalog(e.to_string()))?;
        if file.version != 1 {
            return Err(FeedbackError::BadCatalog(format!("unsupported version {}", file.version)));
        }
        if let Some(c) = ErrorCategory::ALL
            .iter()
            .find(|c| file.instructions.get(c).is_none_or(|t| t.trim().is_empty()))
        {
            return Err(FeedbackError::BadCatalog(format!("missing text for {}", c.name())));
        }
        Ok(Self {
            texts: file.instructions,
        })
    }

    pub fn text(&self, c: ErrorCategory) -> &str {
        &self.texts[&c]
    }
}

impl Default for InstructionCatalog {
    fn default() -> Self {
        Self::from_json(Self::DEFAULT_JSON).expect("bundled catalog is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub category: ErrorCategory,
    pub text: String,
    pub shown_since_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Track {
    streak_start: Option<u64>,
    last_active: Option<u64>,
    frames: u64,
}

/// A displayed category and when it appeared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shown {
    pub category: ErrorCategory,
    pub since_ms: u64,
}

/// Per-session instruction state. Feed frames in timestamp order.
#[derive(Debug, Clone)]
pub struct FeedbackState {
    cfg: FeedbackConfig,
    catalog: Arc<InstructionCatalog>,
    last_t: Option<u64>,
    tracks: [Track; 8],
    shown: Vec<Shown>,
}

impl FeedbackState {
    pub fn new(cfg: FeedbackConfig, catalog: Arc<InstructionCatalog>) -> Self {
        Self {
            cfg,
            catalog,
            last_t: None,
            tracks: [Track::default(); 8],
            shown: Vec::new(),
        }
    }

    /// Cumulative number of frames in which `c` was active.
    pub fn error_frames(&self, c: ErrorCategory) -> u64 {
        self.tracks[c.index()].frames
    }

    /// Start of the live streak for `c`, if any.
    pub fn streak_start(&self, c: ErrorCategory) -> Option<u64> {
        self.tracks[c.index()].streak_start
    }

    pub fn shown(&self) -> &[Shown] {
        &self.shown
    }

    fn rank_key(&self, c: ErrorCategory) -> (std::cmp::Reverse<u64>, ErrorCategory) {
        (std::cmp::Reverse(self.tracks[c.index()].frames), c)
    }

    /// Advances the state by one frame given its active categories and
    /// returns the displayed set, highest-ranked first. On error the state
    /// is unchanged.
    pub fn observe(&mut self, t_ms: u64, active: ActiveSet) -> Result<&[Shown], FeedbackError> {
        if let Some(previous) = self.last_t {
            if t_ms <= previous {
                return Err(FeedbackError::NonMonotonicTime { previous, got: t_ms });
            }
        }
        self.last_t = Some(t_ms);
        let allowance = self.cfg.flicker_allowance_ms;
        for c in ErrorCategory::ALL {
            let track = &mut self.tracks[c.index()];
            let expired = track.last_active.is_some_and(|last| t_ms - last >= allowance);
            if active.contains(c) {
                track.frames += 1;
                if track.streak_start.is_none() || expired {
                    track.streak_start = Some(t_ms);
                }
                track.last_active = Some(t_ms);
            } else if expired {
                track.streak_start = None;
            }
        }

        let min_display = self.cfg.min_display_ms;
        let tracks = self.tracks;
        self.shown
            .retain(|s| t_ms - s.since_ms < min_display || tracks[s.category.index()].streak_start.is_some());

        let mut eligible: Vec<ErrorCategory> = active
            .iter()
            .filter(|c| {
                let start = tracks[c.index()].streak_start.expect("active categories have a streak");
                t_ms - start >= self.cfg.onset_ms && !self.shown.iter().any(|s| s.category == *c)
            })
            .collect();
        eligible.sort_by_key(|&c| self.rank_key(c));
        let free = self.cfg.max_displayed.saturating_sub(self.shown.len());
        self.shown.extend(eligible.into_iter().take(free).map(|category| Shown {
            category,
            since_ms: t_ms,
        }));
        let mut shown = std::mem::take(&mut self.shown);
        shown.sort_by_key(|s| self.rank_key(s.category));
        self.shown = shown;
        Ok(&self.shown)
    }

    /// [`observe`](Self::observe) on a classified frame, with instruction
    /// texts attached.
    pub fn update(&mut self, result: &FrameResult) -> Result<Vec<Instruction>, FeedbackError> {
        self.observe(result.t_ms, active_categories(result))?;
        Ok(self.instructions())
    }

    pub fn instructions(&self) -> Vec<Instruction> {
        self.shown
            .iter()
            .map(|s| Instruction {
                category: s.category,
                text: self.catalog.text(s.category).to_string(),
                shown_since_ms: s.since_ms,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Verdict;
    use crate::geometry::BowAssessment;
    use ErrorCategory::*;

    fn state() -> FeedbackState {
        FeedbackState::new(FeedbackConfig::default(), Arc::new(InstructionCatalog::default()))
    }

    fn set(cats: &[ErrorCategory]) -> ActiveSet {
        cats.iter().copied().collect()
    }

    fn shown_cats(s: &[Shown]) -> Vec<ErrorCategory> {
        s.iter().map(|x| x.category).collect()
    }

    #[test]
    fn onset_after_five_seconds() {
        let mut st = state();
        for t in (0..5000).step_by(50) {
            assert!(st.observe(t, set(&[WristSupinated])).unwrap().is_empty());
        }
        assert!(st.observe(4999, set(&[WristSupinated])).unwrap().is_empty());
        assert_eq!(shown_cats(st.observe(5000, set(&[WristSupinated])).unwrap()), [WristSupinated]);
    }

    #[test]
    fn minimum_display_time() {
        let mut st = state();
        let mut t = 0;
        while t <= 5000 {
            st.observe(t, set(&[ElbowTooHigh])).unwrap();
            t += 100;
        }
        assert_eq!(st.shown()[0].since_ms, 5000);
        // error clears 1000 ms after display began
        while t < 6000 {
            st.observe(t, set(&[ElbowTooHigh])).unwrap();
            t += 100;
        }
        while t < 8000 {
            assert_eq!(shown_cats(st.observe(t, ActiveSet::default()).unwrap()), [ElbowTooHigh], "t={t}");
            t += 100;
        }
        assert!(st.observe(8000, ActiveSet::default()).unwrap().is_empty());
    }

    #[test]
    fn stays_while_error_persists() {
        let mut st = state();
        for t in (0..=20_000).step_by(40) {
            assert_eq!(st.observe(t, set(&[BowAngleOff])).unwrap().len(), usize::from(t >= 5000));
        }
    }

    #[test]
    fn top_two_by_frequency() {
        let mut st = state();
        // counts end up 300, 200, 100-ish; all three have long streaks at the end
        let mut t = 0;
        for i in 0..300u64 {
            let mut cats = vec![BowTooLow];
            if i >= 100 {
                cats.push(WristSupinated);
            }
            if i >= 200 {
                cats.push(ElbowTooLow);
            }
            // hold back display until everything is counted by keeping gaps tiny
            st.observe(t, set(&cats)).unwrap();
            t += 10;
        }
        // at t = 2990 nothing is eligible yet; keep all three active past onset
        let mut last = Vec::new();
        while t <= 2000 + 5000 {
            last = shown_cats(st.observe(t, set(&[BowTooLow, WristSupinated, ElbowTooLow])).unwrap());
            t += 10;
        }
        assert_eq!(last, [BowTooLow, WristSupinated]);
        assert!(st.error_frames(BowTooLow) > st.error_frames(WristSupinated));
        assert!(st.error_frames(WristSupinated) > st.error_frames(ElbowTooLow));
    }

    #[test]
    fn flicker_allowance() {
        // 400 ms gap keeps the streak, 600 ms gap resets it
        for (gap, unbroken) in [(400u64, true), (600, false)] {
            let mut st = state();
            let mut t = 0;
            while t <= 2000 {
                st.observe(t, set(&[WristOverPronated])).unwrap();
                t += 50;
            }
            let resume = 2000 + gap;
            st.observe(2000 + gap / 2, ActiveSet::default()).unwrap();
            st.observe(resume, set(&[WristOverPronated])).unwrap();
            let start = st.streak_start(WristOverPronated).unwrap();
            assert_eq!(start == 0, unbroken, "gap {gap}");
            assert_eq!(start == resume, !unbroken);
        }
    }

    #[test]
    fn pinned_instruction_not_evicted() {
        let mut st = state();
        let mut t = 0;
        // A and B become eligible first
        while t <= 5000 {
            st.observe(t, set(&[WristSupinated, ElbowTooHigh])).unwrap();
            t += 50;
        }
        assert_eq!(st.shown().len(), 2);
        // C becomes eligible later with a larger count than either, but A and B persist
        for _ in 0..400 {
            st.observe(t, set(&[WristSupinated, ElbowTooHigh, BowOutOfZone])).unwrap();
            t += 50;
        }
        let cats = shown_cats(st.shown());
        assert!(!cats.contains(&BowOutOfZone));
        assert_eq!(cats.len(), 2);
    }

    #[test]
    fn rejects_non_monotonic_time() {
        let mut st = state();
        st.observe(100, set(&[WristSupinated])).unwrap();
        let before = st.clone();
        assert_eq!(
            st.observe(100, ActiveSet::default()),
            Err(FeedbackError::NonMonotonicTime { previous: 100, got: 100 })
        );
        assert_eq!(st.tracks, before.tracks);
        assert_eq!(st.last_t, before.last_t);
    }

    #[test]
    fn categories_from_frame_result() {
        let bow_out = BowAssessment {
            detected: true,
            in_zone: false,
            height: BowHeight::NotApplicable,
            angle: BowAngle::NotApplicable,
            zone_position: None,
            deviation_deg: None,
        };
        let r = FrameResult::new(
            0,
            Verdict {
                class: WristClass::Supinated,
                probs: Some(vec![0.1, 0.8, 0.1]),
            },
            Verdict::undetected(),
            bow_out,
        );
        assert_eq!(active_categories(&r).iter().collect::<Vec<_>>(), [WristSupinated, BowOutOfZone]);
        let bow_bad = BowAssessment {
            in_zone: true,
            height: BowHeight::TooHigh,
            angle: BowAngle::Incorrect,
            zone_position: Some(0.9),
            deviation_deg: Some(30.0),
            ..bow_out
        };
        let r = FrameResult::new(0, Verdict::undetected(), Verdict::undetected(), bow_bad);
        assert_eq!(active_categories(&r).iter().collect::<Vec<_>>(), [BowTooHigh, BowAngleOff]);
    }

    #[test]
    fn catalog() {
        let c = InstructionCatalog::default();
        assert_eq!(c.text(WristSupinated), "Rotate your bow hand inward; avoid supination");
        assert!(InstructionCatalog::from_json(r#"{"version":1,"instructions":{"wrist_supinated":"x"}}"#).is_err());
    }
}
