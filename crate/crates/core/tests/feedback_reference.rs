#[path = "oracles/feedback_reference.rs"]
mod reference;

use std::sync::Arc;

use cellist_core::feedback::{ActiveSet, ErrorCategory, FeedbackConfig, FeedbackState, InstructionCatalog};
use reference::{Frame, Timing};

fn run_engine(frames: &[Frame], cfg: FeedbackConfig) -> Vec<Vec<(usize, u64)>> {
    let mut state = FeedbackState::new(cfg, Arc::new(InstructionCatalog::default()));
    frames
        .iter()
        .map(|(t, active)| {
            let set: ActiveSet = ErrorCategory::ALL.into_iter().filter(|c| active[c.index()]).collect();
            state
                .observe(*t, set)
                .unwrap()
                .iter()
                .map(|s| (s.category.index(), s.since_ms))
                .collect()
        })
        .collect()
}

fn timing(cfg: &FeedbackConfig) -> Timing {
    Timing {
        onset_ms: cfg.onset_ms,
        min_display_ms: cfg.min_display_ms,
        allowance_ms: cfg.flicker_allowance_ms,
        max_displayed: cfg.max_displayed,
    }
}

fn compare(seed: u64, n: usize, cfg: FeedbackConfig) {
    let frames = reference::random_stream(seed, n);
    let engine = run_engine(&frames, cfg);
    let expected = reference::simulate(&frames, timing(&cfg));
    if let Some(i) = (0..frames.len()).find(|&i| engine[i] != expected[i]) {
        panic!("seed {seed}: frame {i} t={}: engine {:?} reference {:?}", frames[i].0, engine[i], expected[i]);
    }
    reference::check_rules(&frames, &engine, timing(&cfg)).unwrap();
}

#[test]
fn matches_reference_default_timing() {
    for seed in 0..40 {
        compare(seed, 10_000, FeedbackConfig::default());
    }
}

#[test]
fn matches_reference_other_timings() {
    let configs = [
        FeedbackConfig { onset_ms: 1000, min_display_ms: 500, flicker_allowance_ms: 200, max_displayed: 1 },
        FeedbackConfig { onset_ms: 0, min_display_ms: 3000, flicker_allowance_ms: 500, max_displayed: 3 },
        FeedbackConfig { onset_ms: 2500, min_display_ms: 8000, flicker_allowance_ms: 1000, max_displayed: 8 },
    ];
    for (i, cfg) in configs.into_iter().enumerate() {
        for seed in 0..10 {
            compare(1000 + 10 * i as u64 + seed, 5_000, cfg);
        }
    }
}

#[test]
fn streams_exercise_the_rules() {
    // the generated streams must actually show and remove instructions
    let frames = reference::random_stream(1, 10_000);
    let out = reference::simulate(&frames, reference::DEFAULT_TIMING);
    let shown = out.iter().filter(|d| !d.is_empty()).count();
    let full = out.iter().filter(|d| d.len() == 2).count();
    let changes = out.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(shown > 100 && full > 0 && changes > 4, "shown {shown} full {full} changes {changes}");
}
