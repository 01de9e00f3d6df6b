//! Seeded synthetic landmark data with known labels.
//!
//! Both generators work in a canonical limb frame whose characteristic
//! length is 1 (hand: farthest node from the origin node; arm: upper-arm
//! length), so `noise_sigma` is relative to limb size. Samples are then
//! mapped into normalized image coordinates, the same space a detector
//! stream uses.
//!
//! The per-class angle bands below are invented configuration, not measured
//! ground truth.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ElbowClass, PostureClass, WristClass};
use crate::features::{elbow_features, normalize_hand, DEFAULT_HAND_ORIGIN};
use crate::geometry::OrientedBox;
use crate::ingest::{FramePacket, HandLandmarks, PoseTriplet, HAND_LANDMARKS};
use crate::neuralnet::LabeledDataset;

/// Hand rotation band per wrist class, degrees, on-screen counterclockwise
/// about the origin node.
pub fn wrist_band(class: WristClass) -> Option<(f64, f64)> {
    match class {
        WristClass::Supinated => Some((25.0, 45.0)),
        WristClass::Normal => Some((-10.0, 10.0)),
        WristClass::OverPronated => Some((-45.0, -25.0)),
        WristClass::Undetected => None,
    }
}

/// Upper-arm elevation band per elbow class, degrees above horizontal.
pub fn elbow_band(class: ElbowClass) -> Option<(f64, f64)> {
    match class {
        ElbowClass::TooHigh => Some((20.0, 40.0)),
        ElbowClass::Normal => Some((-10.0, 10.0)),
        ElbowClass::TooLow => Some((-40.0, -20.0)),
        ElbowClass::Undetected => None,
    }
}

/// Image-space size of the hand (origin to farthest node).
pub const HAND_SCALE: f64 = 0.19;
/// Image-space length of one canonical arm unit.
pub const ARM_SCALE: f64 = 0.25;
const SHOULDER_AT: [f64; 3] = [0.30, 0.35, 0.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthTask {
    Wrist,
    Elbow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub task: SynthTask,
    pub n_per_class: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub const DEFAULT_SIGMA: f64 = 0.03;

    pub fn new(task: SynthTask, n_per_class: usize, seed: u64) -> Self {
        Self {
            task,
            n_per_class,
            noise_sigma: Self::DEFAULT_SIGMA,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_per_class == 0 {
            return Err(SynthError::InvalidSpec("n_per_class must be positive".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidSpec("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct TemplateFile {
    origin_index: usize,
    points: Vec<[f64; 2]>,
}

/// The bundled hand template in image coordinates.
pub fn hand_template() -> &'static HandLandmarks {
    static TEMPLATE: OnceLock<HandLandmarks> = OnceLock::new();
    TEMPLATE.get_or_init(|| {
        let file: TemplateFile = serde_json::from_str(include_str!("../data/hand_template.json"))
            .expect("bundled hand template parses");
        assert_eq!(file.origin_index, DEFAULT_HAND_ORIGIN);
        file.points.try_into().expect("template has 21 points")
    })
}

/// Template translated to the origin node and scaled to unit size.
fn canonical_hand() -> [[f64; 2]; HAND_LANDMARKS] {
    let v = normalize_hand(hand_template(), DEFAULT_HAND_ORIGIN).expect("template is not degenerate");
    std::array::from_fn(|i| [v.0[2 * i], v.0[2 * i + 1]])
}

/// Rotates a point on screen counterclockwise (y axis down).
fn rotate_screen(p: [f64; 2], deg: f64) -> [f64; 2] {
    let (s, c) = deg.to_radians().sin_cos();
    [p[0] * c + p[1] * s, -p[0] * s + p[1] * c]
}

fn noise(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma validated non-negative")
}

/// One hand of the given class, placed with its origin node at `anchor`.
pub fn sample_hand<R: Rng>(class: WristClass, sigma: f64, anchor: [f64; 2], rng: &mut R) -> Option<HandLandmarks> {
    let (lo, hi) = wrist_band(class)?;
    let angle = rng.random_range(lo..=hi);
    let n = noise(sigma);
    let base = canonical_hand();
    Some(std::array::from_fn(|i| {
        let r = rotate_screen(base[i], angle);
        [
            anchor[0] + HAND_SCALE * (r[0] + n.sample(rng)),
            anchor[1] + HAND_SCALE * (r[1] + n.sample(rng)),
        ]
    }))
}

fn unit_from_angles(elevation_deg: f64, azimuth_deg: f64) -> [f64; 3] {
    let (se, ce) = elevation_deg.to_radians().sin_cos();
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    // image y points down, so "above horizontal" is negative y
    [ce * ca, -se, ce * sa]
}

/// One bow-side arm of the given class. The shoulder sits at a fixed image
/// position; the forearm direction is random with an elbow angle between
/// 50° and 170°.
pub fn sample_pose<R: Rng>(class: ElbowClass, sigma: f64, rng: &mut R) -> Option<PoseTriplet> {
    let (lo, hi) = elbow_band(class)?;
    let upper_dir = unit_from_angles(rng.random_range(lo..=hi), rng.random_range(-40.0..=40.0));
    let upper_len = rng.random_range(0.9..=1.1);
    let fore_len = rng.random_range(0.8..=1.0);
    let fore_dir = loop {
        let d = unit_from_angles(rng.random_range(-60.0..=40.0), rng.random_range(60.0..=300.0));
        // angle at the elbow between elbow->shoulder and elbow->wrist
        let cos = -(upper_dir[0] * d[0] + upper_dir[1] * d[1] + upper_dir[2] * d[2]);
        let angle = cos.clamp(-1.0, 1.0).acos().to_degrees();
        if (50.0..=170.0).contains(&angle) {
            break d;
        }
    };
    let n = noise(sigma);
    let mut jitter = |p: [f64; 3]| p.map(|c| c + n.sample(rng));
    let shoulder = jitter([0.0; 3]);
    let elbow = jitter(upper_dir.map(|c| c * upper_len));
    let wrist = jitter(std::array::from_fn(|i| upper_dir[i] * upper_len + fore_dir[i] * fore_len));
    let place = |p: [f64; 3]| std::array::from_fn(|i| SHOULDER_AT[i] + ARM_SCALE * p[i]);
    Some(PoseTriplet {
        shoulder: place(shoulder),
        elbow: place(elbow),
        wrist: place(wrist),
    })
}

pub fn class_labels(task: SynthTask) -> Vec<String> {
    match task {
        SynthTask::Wrist => WristClass::MODELED.iter().map(|c| c.label().to_string()).collect(),
        SynthTask::Elbow => ElbowClass::MODELED.iter().map(|c| c.label().to_string()).collect(),
    }
}

/// Feature vectors labeled with their generating class, grouped by class in
/// canonical order.
pub fn generate(spec: &SynthSpec) -> Result<LabeledDataset, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut inputs = Vec::with_capacity(3 * spec.n_per_class);
    let mut labels = Vec::with_capacity(3 * spec.n_per_class);
    for label in 0..3 {
        for _ in 0..spec.n_per_class {
            let x = match spec.task {
                SynthTask::Wrist => loop {
                    let anchor = [rng.random_range(0.3..0.7), rng.random_range(0.5..0.8)];
                    let hand = sample_hand(WristClass::MODELED[label], spec.noise_sigma, anchor, &mut rng)
                        .expect("modeled class has a band");
                    if let Ok(f) = normalize_hand(&hand, DEFAULT_HAND_ORIGIN) {
                        break f.0;
                    }
                },
                SynthTask::Elbow => loop {
                    let pose = sample_pose(ElbowClass::MODELED[label], spec.noise_sigma, &mut rng)
                        .expect("modeled class has a band");
                    if let Ok(f) = elbow_features(&pose) {
                        break f.0.to_vec();
                    }
                },
            };
            inputs.push(x);
            labels.push(label);
        }
    }
    Ok(LabeledDataset {
        inputs,
        labels,
        class_labels: class_labels(spec.task),
    })
}

/// Label recovered from a feature vector by estimating the generating angle
/// and taking the nearest band. Exact at zero noise.
pub fn nearest_band_label(task: SynthTask, features: &[f64]) -> usize {
    let angle = match task {
        SynthTask::Wrist => {
            // least-squares rotation from the template to the sample
            let base = canonical_hand();
            let (mut dot, mut cross) = (0.0, 0.0);
            for (t, p) in base.iter().zip(features.chunks_exact(2)) {
                dot += t[0] * p[0] + t[1] * p[1];
                cross += t[1] * p[0] - t[0] * p[1];
            }
            cross.atan2(dot).to_degrees()
        }
        SynthTask::Elbow => (-features[4]).clamp(-1.0, 1.0).asin().to_degrees(),
    };
    let bands: Vec<(f64, f64)> = match task {
        SynthTask::Wrist => WristClass::MODELED.iter().filter_map(|&c| wrist_band(c)).collect(),
        SynthTask::Elbow => ElbowClass::MODELED.iter().filter_map(|&c| elbow_band(c)).collect(),
    };
    let gap = |(lo, hi): (f64, f64)| (lo - angle).max(angle - hi).max(0.0);
    (0..bands.len())
        .min_by(|&a, &b| gap(bands[a]).total_cmp(&gap(bands[b])))
        .expect("three bands")
}

/// One scripted posture scenario in a synthetic session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub wrist: WristClass,
    pub elbow: ElbowClass,
    pub bow: BowScenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BowScenario {
    Good,
    TooHigh,
    TooLow,
    Tilted,
    OutOfZone,
    Missing,
}

impl Scenario {
    const fn new(wrist: WristClass, elbow: ElbowClass, bow: BowScenario) -> Self {
        Self { wrist, elbow, bow }
    }
}

/// Scenario cycle used by [`generate_stream`].
pub const STREAM_SCRIPT: [Scenario; 8] = [
    Scenario::new(WristClass::Normal, ElbowClass::Normal, BowScenario::Good),
    Scenario::new(WristClass::Supinated, ElbowClass::Normal, BowScenario::Good),
    Scenario::new(WristClass::Normal, ElbowClass::TooHigh, BowScenario::Tilted),
    Scenario::new(WristClass::Normal, ElbowClass::Normal, BowScenario::TooHigh),
    Scenario::new(WristClass::OverPronated, ElbowClass::TooLow, BowScenario::Good),
    Scenario::new(WristClass::Undetected, ElbowClass::Normal, BowScenario::OutOfZone),
    Scenario::new(WristClass::Normal, ElbowClass::Undetected, BowScenario::TooLow),
    Scenario::new(WristClass::Supinated, ElbowClass::Normal, BowScenario::Missing),
];

fn strings_box<R: Rng>(rng: &mut R) -> OrientedBox {
    OrientedBox::new(
        0.55 + rng.random_range(-0.003..0.003),
        0.55 + rng.random_range(-0.003..0.003),
        0.36,
        0.07,
        84.0 + rng.random_range(-0.5..0.5),
    )
    .expect("valid strings box")
}

/// A bow box crossing the string zone at `position` with the given angular
/// deviation from perpendicular.
fn bow_box<R: Rng>(strings: &OrientedBox, position: f64, deviation: f64, rng: &mut R) -> OrientedBox {
    let (bridge, fingerboard) = crate::geometry::zone_axis(strings);
    let cross = [
        bridge[0] + position * (fingerboard[0] - bridge[0]),
        bridge[1] + position * (fingerboard[1] - bridge[1]),
    ];
    let theta = strings.theta_deg() + 90.0 + deviation;
    let along = rng.random_range(-0.08..0.08);
    let t = theta.to_radians();
    OrientedBox::new(cross[0] + along * t.cos(), cross[1] - along * t.sin(), 0.55, 0.015, theta)
        .expect("valid bow box")
}

fn scenario_packet<R: Rng>(t_ms: u64, s: Scenario, sigma: f64, rng: &mut R) -> FramePacket {
    let mut p = FramePacket::empty(t_ms);
    p.hand = sample_hand(s.wrist, sigma, [0.62, 0.62], rng);
    p.pose = sample_pose(s.elbow, sigma, rng);
    let strings = strings_box(rng);
    let jitter = rng.random_range(-2.0..2.0);
    let bow = match s.bow {
        BowScenario::Good => Some(bow_box(&strings, rng.random_range(0.35..0.7), jitter, rng)),
        BowScenario::TooHigh => Some(bow_box(&strings, rng.random_range(0.9..0.98), jitter, rng)),
        BowScenario::TooLow => Some(bow_box(&strings, rng.random_range(0.02..0.1), jitter, rng)),
        BowScenario::Tilted => Some(bow_box(&strings, rng.random_range(0.4..0.6), 25.0 + jitter, rng)),
        BowScenario::OutOfZone => Some(
            OrientedBox::new(0.2, 0.15 + rng.random_range(-0.01..0.01), 0.3, 0.015, 10.0).expect("valid bow box"),
        ),
        BowScenario::Missing => None,
    };
    p.strings = bow.map(|_| strings);
    p.bow = bow;
    p
}

fn quantize(p: FramePacket) -> FramePacket {
    let q = |v: f64| (v * 1e5).round() / 1e5;
    let qbox = |b: OrientedBox| {
        OrientedBox::new(q(b.cx()), q(b.cy()), q(b.w()), q(b.h()), q(b.theta_deg())).expect("rounding keeps boxes valid")
    };
    FramePacket {
        t_ms: p.t_ms,
        hand: p.hand.map(|h| h.map(|pt| pt.map(q))),
        pose: p.pose.map(|a| PoseTriplet {
            shoulder: a.shoulder.map(q),
            elbow: a.elbow.map(q),
            wrist: a.wrist.map(q),
        }),
        bow: p.bow.map(qbox),
        strings: p.strings.map(qbox),
    }
}

/// A scripted synthetic session: scenarios from [`STREAM_SCRIPT`] in order,
/// each held for `segment_ms`, frames every 33 ms with a little jitter.
/// Every fourth segment drops detections for one frame in twenty to mimic
/// detector flicker. Coordinates are rounded to 1e-5.
pub fn generate_stream(seed: u64, n_frames: usize, segment_ms: u64, sigma: f64) -> Vec<FramePacket> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    (0..n_frames)
        .map(|i| {
            let segment = (t / segment_ms) as usize;
            let scenario = STREAM_SCRIPT[segment % STREAM_SCRIPT.len()];
            let mut p = scenario_packet(t, scenario, sigma, &mut rng);
            if segment % 4 == 3 && i % 20 == 0 {
                p.hand = None;
                p.pose = None;
            }
            t += rng.random_range(30..=36);
            quantize(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ELBOW_FEATURES;

    #[test]
    fn deterministic_and_sized() {
        for task in [SynthTask::Wrist, SynthTask::Elbow] {
            let spec = SynthSpec::new(task, 100, 3);
            let a = generate(&spec).unwrap();
            assert_eq!(a, generate(&spec).unwrap());
            assert_eq!(a.len(), 300);
            assert_eq!(a.class_counts(), vec![100, 100, 100]);
            assert_ne!(a, generate(&SynthSpec::new(task, 100, 4)).unwrap());
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&SynthSpec::new(SynthTask::Wrist, 0, 1)).is_err());
        let mut s = SynthSpec::new(SynthTask::Elbow, 5, 1);
        s.noise_sigma = -0.1;
        assert!(generate(&s).is_err());
    }

    fn oracle_accuracy(task: SynthTask, sigma: f64) -> f64 {
        let ds = generate(&SynthSpec {
            task,
            n_per_class: 400,
            noise_sigma: sigma,
            seed: 21,
        })
        .unwrap();
        let hits = ds
            .inputs
            .iter()
            .zip(&ds.labels)
            .filter(|(x, &l)| nearest_band_label(task, x) == l)
            .count();
        hits as f64 / ds.len() as f64
    }

    #[test]
    fn zero_noise_is_perfectly_separable() {
        assert_eq!(oracle_accuracy(SynthTask::Wrist, 0.0), 1.0);
        assert_eq!(oracle_accuracy(SynthTask::Elbow, 0.0), 1.0);
    }

    #[test]
    fn overlap_grows_with_noise() {
        for task in [SynthTask::Wrist, SynthTask::Elbow] {
            let accs: Vec<f64> = [0.0, 0.03, 0.1].iter().map(|&s| oracle_accuracy(task, s)).collect();
            assert!(accs[0] >= accs[1] && accs[1] >= accs[2], "{task:?}: {accs:?}");
            assert!(accs[2] < accs[0], "{task:?}: {accs:?}");
        }
    }

    #[test]
    fn samples_satisfy_feature_invariants() {
        let ds = generate(&SynthSpec::new(SynthTask::Elbow, 200, 8)).unwrap();
        for x in &ds.inputs {
            assert_eq!(x.len(), ELBOW_FEATURES);
            assert!((0.0..=std::f64::consts::PI).contains(&x[0]));
            assert!(x[1] > 0.0 && x[2] > 0.0);
            for u in [&x[3..6], &x[6..9]] {
                let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                assert!((n - 1.0).abs() < 1e-9);
            }
        }
        let ds = generate(&SynthSpec::new(SynthTask::Wrist, 200, 8)).unwrap();
        for x in &ds.inputs {
            assert_eq!((x[0], x[1]), (0.0, 0.0));
            let max = x.chunks(2).map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stream_is_valid_and_ordered() {
        let packets = generate_stream(5, 2000, 8000, 0.03);
        assert_eq!(packets.len(), 2000);
        for w in packets.windows(2) {
            assert!(w[1].t_ms > w[0].t_ms);
        }
        for p in &packets {
            p.validate().unwrap();
            let line = p.to_line();
            assert_eq!(&crate::ingest::parse_frame_line(&line).unwrap(), p);
        }
        assert_eq!(packets, generate_stream(5, 2000, 8000, 0.03));
    }

    #[test]
    fn scripted_bow_geometry_matches_scenario() {
        use crate::geometry::{classify_bow, BowAngle, BowConfig, BowHeight};
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = BowConfig::default();
        for _ in 0..200 {
            for (scenario, height, angle) in [
                (BowScenario::Good, BowHeight::Ok, BowAngle::Correct),
                (BowScenario::TooHigh, BowHeight::TooHigh, BowAngle::Correct),
                (BowScenario::TooLow, BowHeight::TooLow, BowAngle::Correct),
                (BowScenario::Tilted, BowHeight::Ok, BowAngle::Incorrect),
                (BowScenario::OutOfZone, BowHeight::NotApplicable, BowAngle::NotApplicable),
            ] {
                let s = Scenario::new(WristClass::Normal, ElbowClass::Normal, scenario);
                let p = scenario_packet(0, s, 0.03, &mut rng);
                let r = classify_bow(p.bow.as_ref(), p.strings.as_ref(), &cfg);
                assert_eq!((r.height, r.angle), (height, angle), "{scenario:?}");
            }
        }
    }
}
