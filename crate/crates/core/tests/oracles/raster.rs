//! Rasterization oracle for rectangle overlap.
//!
//! Each box is rasterized on a square grid of the unit image by cell
//! centers, row by row; two boxes intersect when some cell is covered by
//! both. Row spans come from solving the two slab inequalities of the
//! rectangle in x, so the oracle shares no code with the separating-axis
//! predicate.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RESOLUTION: usize = 2048;

#[derive(Debug, Clone, Copy)]
pub struct RawBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta_deg: f64,
}

impl RawBox {
    /// Unit vectors along the extents, in image coordinates (y down,
    /// theta counterclockwise on screen).
    fn axes(&self) -> ([f64; 2], [f64; 2]) {
        let t = self.theta_deg.to_radians();
        ([t.cos(), -t.sin()], [t.sin(), t.cos()])
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (a, b) = self.axes();
        let (hw, hh) = (self.w / 2.0, self.h / 2.0);
        [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .map(|(s, r)| [self.cx + s * hw * a[0] + r * hh * b[0], self.cy + s * hw * a[1] + r * hh * b[1]])
    }

    /// x interval covered at height y, or None.
    fn span_at(&self, y: f64) -> Option<(f64, f64)> {
        let (a, b) = self.axes();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (axis, half) in [(a, self.w / 2.0), (b, self.h / 2.0)] {
            // |(x - cx) * ax + (y - cy) * ay| <= half
            let k = (y - self.cy) * axis[1];
            if axis[0].abs() < 1e-15 {
                if k.abs() > half {
                    return None;
                }
                continue;
            }
            let (x1, x2) = ((-half - k) / axis[0] + self.cx, (half - k) / axis[0] + self.cx);
            lo = lo.max(x1.min(x2));
            hi = hi.min(x1.max(x2));
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn y_extent(&self) -> (f64, f64) {
        let ys = self.corners().map(|c| c[1]);
        (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Cell-center index range [first, last] inside a real interval.
fn cells_in(lo: f64, hi: f64, n: usize) -> Option<(i64, i64)> {
    let first = (lo * n as f64 - 0.5).ceil() as i64;
    let last = (hi * n as f64 - 0.5).floor() as i64;
    (first <= last).then_some((first, last))
}

/// True when some raster cell center lies in both boxes.
pub fn raster_overlap(a: &RawBox, b: &RawBox) -> bool {
    let n = RESOLUTION;
    let (a0, a1) = a.y_extent();
    let (b0, b1) = b.y_extent();
    let Some((row0, row1)) = cells_in(a0.max(b0), a1.min(b1), n) else {
        return false;
    };
    (row0..=row1).any(|row| {
        let y = (row as f64 + 0.5) / n as f64;
        let (Some(sa), Some(sb)) = (a.span_at(y), b.span_at(y)) else {
            return false;
        };
        cells_in(sa.0.max(sb.0), sa.1.min(sb.1), n).is_some()
    })
}

fn dist_point_segment(p: [f64; 2], s0: [f64; 2], s1: [f64; 2]) -> f64 {
    let d = [s1[0] - s0[0], s1[1] - s0[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - s0[0]) * d[0] + (p[1] - s0[1]) * d[1]) / len2).clamp(0.0, 1.0);
    let q = [s0[0] + t * d[0], s0[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Smallest distance between the two outlines. For boxes that do not
/// overlap this is their separation; for overlapping boxes it bounds how
/// deep a thin overlap can be only from above, so callers pair it with
/// [`overlap_depth`].
pub fn boundary_distance(a: &RawBox, b: &RawBox) -> f64 {
    let (ca, cb) = (a.corners(), b.corners());
    let mut best = f64::INFINITY;
    for (p, q) in [(&ca, &cb), (&cb, &ca)] {
        for v in p {
            for i in 0..4 {
                best = best.min(dist_point_segment(*v, q[i], q[(i + 1) % 4]));
            }
        }
    }
    best
}

/// Width of the thinnest projection overlap over both boxes' edge
/// directions; ≤ 0 when the boxes are apart.
pub fn overlap_depth(a: &RawBox, b: &RawBox) -> f64 {
    let (ca, cb) = (a.corners(), b.corners());
    let mut depth = f64::INFINITY;
    for poly in [&ca, &cb] {
        for i in 0..2 {
            let e = [poly[i + 1][0] - poly[i][0], poly[i + 1][1] - poly[i][1]];
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            let n = [-e[1] / len, e[0] / len];
            let proj = |c: &[[f64; 2]; 4]| {
                let v = c.map(|p| p[0] * n[0] + p[1] * n[1]);
                (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            };
            let ((a0, a1), (b0, b1)) = (proj(&ca), proj(&cb));
            depth = depth.min(a1.min(b1) - a0.max(b0));
        }
    }
    depth
}

/// A disagreement with the raster is tolerated only for pairs whose
/// boundaries come within `cells` raster cells of each other.
pub fn within_raster_tolerance(a: &RawBox, b: &RawBox, cells: f64) -> bool {
    let limit = cells / RESOLUTION as f64;
    boundary_distance(a, b) < limit || overlap_depth(a, b).abs() < limit
}

pub fn random_box(rng: &mut ChaCha8Rng) -> RawBox {
    let w = rng.random_range(0.02..0.4);
    RawBox {
        cx: rng.random_range(0.2..0.8),
        cy: rng.random_range(0.2..0.8),
        w,
        h: rng.random_range(0.005..=w),
        theta_deg: rng.random_range(-90.0..90.0),
    }
}

/// Random pairs; every fourth pair is nudged into near contact.
pub fn random_pairs(seed: u64, count: usize) -> Vec<(RawBox, RawBox)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let a = random_box(&mut rng);
            let mut b = random_box(&mut rng);
            if i % 4 == 3 {
                // slide b along the line of centers until its outline is
                // within a few cells of a's
                let target = rng.random_range(-3.0..3.0) / RESOLUTION as f64;
                let d = [b.cx - a.cx, b.cy - a.cy];
                let gap = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-9);
                let dir = [d[0] / gap, d[1] / gap];
                let signed = |b: &RawBox| {
                    let depth = overlap_depth(&a, b);
                    if depth > 0.0 { -depth } else { boundary_distance(&a, b) }
                };
                let (mut lo, mut hi) = (-gap, 1.0f64);
                for _ in 0..60 {
                    let mid = (lo + hi) / 2.0;
                    let moved = RawBox { cx: b.cx + mid * dir[0], cy: b.cy + mid * dir[1], ..b };
                    if signed(&moved) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                b = RawBox { cx: b.cx + lo * dir[0], cy: b.cy + lo * dir[1], ..b };
            }
            (a, b)
        })
        .collect()
}
