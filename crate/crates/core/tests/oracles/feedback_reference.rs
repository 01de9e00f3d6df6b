//! Brute-force reference for instruction timing.
//!
//! Works offline on a whole stream: first every category's active frames
//! are split into episodes wherever two consecutive active frames are at
//! least the flicker allowance apart, then a second pass replays display
//! decisions frame by frame using those episodes.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATEGORIES: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct Timing {
    pub onset_ms: u64,
    pub min_display_ms: u64,
    pub allowance_ms: u64,
    pub max_displayed: usize,
}

pub const DEFAULT_TIMING: Timing = Timing {
    onset_ms: 5000,
    min_display_ms: 3000,
    allowance_ms: 500,
    max_displayed: 2,
};

pub type Frame = (u64, [bool; CATEGORIES]);

/// Displayed (category, shown_since) per frame, highest rank first.
pub fn simulate(frames: &[Frame], timing: Timing) -> Vec<Vec<(usize, u64)>> {
    // per category: times of active frames, and the episode start for each
    let mut active_times: Vec<Vec<u64>> = vec![Vec::new(); CATEGORIES];
    let mut episode_of: Vec<Vec<u64>> = vec![Vec::new(); CATEGORIES];
    for (t, active) in frames {
        for c in 0..CATEGORIES {
            if active[c] {
                let start = match (active_times[c].last(), episode_of[c].last()) {
                    (Some(prev), Some(start)) if t - prev < timing.allowance_ms => *start,
                    _ => *t,
                };
                active_times[c].push(*t);
                episode_of[c].push(start);
            }
        }
    }
    // streak start of c at time t: the episode of the latest active frame
    // at or before t, if that frame is recent enough
    let live_start = |c: usize, t: u64| -> Option<u64> {
        let k = active_times[c].partition_point(|&a| a <= t);
        if k == 0 {
            return None;
        }
        let a = active_times[c][k - 1];
        (t - a < timing.allowance_ms).then_some(episode_of[c][k - 1])
    };
    let count_upto = |c: usize, t: u64| active_times[c].partition_point(|&a| a <= t) as u64;

    let mut out = Vec::with_capacity(frames.len());
    let mut shown: Vec<(usize, u64)> = Vec::new();
    for (t, active) in frames {
        let t = *t;
        shown.retain(|&(c, since)| t - since < timing.min_display_ms || live_start(c, t).is_some());
        let mut candidates: Vec<usize> = (0..CATEGORIES)
            .filter(|&c| active[c] && !shown.iter().any(|s| s.0 == c))
            .filter(|&c| live_start(c, t).is_some_and(|s| t - s >= timing.onset_ms))
            .collect();
        candidates.sort_by(|&x, &y| count_upto(y, t).cmp(&count_upto(x, t)).then(x.cmp(&y)));
        for c in candidates {
            if shown.len() < timing.max_displayed {
                shown.push((c, t));
            }
        }
        shown.sort_by(|x, y| count_upto(y.0, t).cmp(&count_upto(x.0, t)).then(x.0.cmp(&y.0)));
        out.push(shown.clone());
    }
    out
}

/// Checks the timing rules directly on a displayed-set timeline.
pub fn check_rules(frames: &[Frame], displayed: &[Vec<(usize, u64)>], timing: Timing) -> Result<(), String> {
    let mut prev: &[(usize, u64)] = &[];
    for ((t, active), now) in frames.iter().zip(displayed) {
        if now.len() > timing.max_displayed {
            return Err(format!("t={t}: {} instructions shown", now.len()));
        }
        for &(c, since) in now {
            let was = prev.iter().find(|p| p.0 == c);
            match was {
                Some(&(_, old)) if old != since => return Err(format!("t={t}: category {c} restamped")),
                Some(_) => {}
                None if since != *t => return Err(format!("t={t}: category {c} appeared with stale stamp")),
                None if !active[c] => return Err(format!("t={t}: category {c} shown while inactive")),
                None => {}
            }
        }
        for &(c, since) in prev {
            if !now.iter().any(|x| x.0 == c) && t - since < timing.min_display_ms {
                return Err(format!("t={t}: category {c} removed after {} ms", t - since));
            }
        }
        prev = now;
    }
    Ok(())
}

/// A random session: each aspect follows a sticky Markov chain, frames come
/// every 20-50 ms with occasional long gaps, and detections flicker out.
pub fn random_stream(seed: u64, n_frames: usize) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // aspects: wrist {0,1}, elbow {2,3}, bow height {4,5}, angle {6}, zone {7}
    let groups: [&[usize]; 4] = [&[0, 1], &[2, 3], &[4, 5, 7], &[6]];
    let mut state: [Option<usize>; 4] = [None; 4];
    let stickiness = rng.random_range(0.95..0.999);
    let flicker = rng.random_range(0.0..0.15);
    let mut t = rng.random_range(0..1000u64);
    let mut frames = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        t += if rng.random_bool(0.005) { rng.random_range(300..1500) } else { rng.random_range(20..50) };
        for (g, members) in groups.iter().enumerate() {
            if !rng.random_bool(stickiness) {
                state[g] = if rng.random_bool(0.4) {
                    None
                } else {
                    Some(members[rng.random_range(0..members.len())])
                };
            }
        }
        let mut active = [false; CATEGORIES];
        for s in state.iter().flatten() {
            if !rng.random_bool(flicker) {
                active[*s] = true;
            }
        }
        if active[7] {
            // an out-of-zone bow has no height or angle verdict
            active[4] = false;
            active[5] = false;
            active[6] = false;
        }
        frames.push((t, active));
    }
    frames
}
