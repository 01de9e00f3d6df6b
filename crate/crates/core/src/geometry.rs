//! Oriented-box math and bow/string placement classification.
//!
//! Boxes live in normalized image coordinates with the y axis pointing down.
//! `theta_deg` is the rotation of the box's major axis, measured
//! counterclockwise as seen on screen, so the major-axis unit vector in image
//! coordinates is `(cos θ, -sin θ)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point2 = [f64; 2];

/// Axes closer to parallel than this use the projection fallback in
/// [`zone_position`].
pub const PARALLEL_LIMIT_DEG: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box extents must be positive and finite (w={w}, h={h})")]
    BadExtent { w: f64, h: f64 },
    #[error("box parameters must be finite")]
    NonFinite,
    #[error("bow and string boxes do not intersect")]
    NotIntersecting,
    #[error("invalid bow config: {0}")]
    BadConfig(String),
}

/// A rectangle with rotation, always held in canonical form: `w >= h` and
/// `theta_deg` in `[-90, 90)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct OrientedBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta_deg: f64,
}

/// Wire shape of a box, before canonicalization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta_deg: f64,
}

impl TryFrom<RawBox> for OrientedBox {
    type Error = GeometryError;

    fn try_from(raw: RawBox) -> Result<Self, Self::Error> {
        OrientedBox::new(raw.cx, raw.cy, raw.w, raw.h, raw.theta_deg)
    }
}

impl From<OrientedBox> for RawBox {
    fn from(b: OrientedBox) -> Self {
        RawBox {
            cx: b.cx,
            cy: b.cy,
            w: b.w,
            h: b.h,
            theta_deg: b.theta_deg,
        }
    }
}

/// Maps an angle in degrees onto `[-90, 90)`.
pub fn normalize_theta(theta_deg: f64) -> f64 {
    // in-range values pass through untouched so canonical boxes are fixed points
    if (-90.0..90.0).contains(&theta_deg) {
        return theta_deg;
    }
    let t = (theta_deg + 90.0).rem_euclid(180.0) - 90.0;
    // rem_euclid can round up to exactly 180 for tiny negative inputs
    if t >= 90.0 {
        t - 180.0
    } else {
        t
    }
}

impl OrientedBox {
    /// Builds a box, swapping extents and rotating by 90° when `h > w`.
    /// Square boxes have their angle folded into `[-45, 45)`.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta_deg: f64) -> Result<Self, GeometryError> {
        if !(cx.is_finite() && cy.is_finite() && theta_deg.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(GeometryError::BadExtent { w, h });
        }
        let (w, h, mut theta) = if h > w {
            (h, w, theta_deg + 90.0)
        } else {
            (w, h, theta_deg)
        };
        theta = normalize_theta(theta);
        if w == h {
            if theta >= 45.0 {
                theta -= 90.0;
            } else if theta < -45.0 {
                theta += 90.0;
            }
        }
        Ok(Self {
            cx,
            cy,
            w,
            h,
            theta_deg: theta,
        })
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn center(&self) -> Point2 {
        [self.cx, self.cy]
    }

    /// Extent along the major axis.
    pub fn w(&self) -> f64 {
        self.w
    }

    /// Extent along the minor axis.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    /// Unit vector along the major axis, in image coordinates.
    pub fn major_axis(&self) -> Point2 {
        let t = self.theta_deg.to_radians();
        [t.cos(), -t.sin()]
    }

    /// Unit vector along the minor axis, in image coordinates. Together with
    /// [`major_axis`](Self::major_axis) this forms a counterclockwise frame
    /// on screen.
    pub fn minor_axis(&self) -> Point2 {
        let t = self.theta_deg.to_radians();
        [-t.sin(), -t.cos()]
    }

    /// Endpoints of the major-axis centerline segment.
    pub fn axis_endpoints(&self) -> (Point2, Point2) {
        let u = self.major_axis();
        let a = self.w / 2.0;
        (
            [self.cx - a * u[0], self.cy - a * u[1]],
            [self.cx + a * u[0], self.cy + a * u[1]],
        )
    }

    /// Applies a uniform scale about `pivot`.
    pub fn scaled_about(&self, pivot: Point2, factor: f64) -> Result<Self, GeometryError> {
        Self::new(
            pivot[0] + (self.cx - pivot[0]) * factor,
            pivot[1] + (self.cy - pivot[1]) * factor,
            self.w * factor,
            self.h * factor,
            self.theta_deg,
        )
    }

    /// Translates the box, then rotates it by `angle_deg` (on-screen
    /// counterclockwise) about `pivot`.
    pub fn moved(&self, offset: Point2, pivot: Point2, angle_deg: f64) -> Result<Self, GeometryError> {
        let c = [self.cx + offset[0] - pivot[0], self.cy + offset[1] - pivot[1]];
        let (s, k) = angle_deg.to_radians().sin_cos();
        // on-screen CCW with y down: (x, y) -> (x cos + y sin, -x sin + y cos)
        let rotated = [c[0] * k + c[1] * s, -c[0] * s + c[1] * k];
        Self::new(
            pivot[0] + rotated[0],
            pivot[1] + rotated[1],
            self.w,
            self.h,
            self.theta_deg + angle_deg,
        )
    }
}

fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// The four corners, counterclockwise on screen, starting from the corner at
/// `-major, -minor`.
pub fn obb_corners(b: &OrientedBox) -> [Point2; 4] {
    let u = b.major_axis();
    let v = b.minor_axis();
    let (a, c) = (b.w / 2.0, b.h / 2.0);
    let at = |su: f64, sv: f64| {
        [
            b.cx + su * a * u[0] + sv * c * v[0],
            b.cy + su * a * u[1] + sv * c * v[1],
        ]
    };
    [at(-1.0, -1.0), at(1.0, -1.0), at(1.0, 1.0), at(-1.0, 1.0)]
}

fn projected_radius(b: &OrientedBox, axis: Point2) -> f64 {
    b.w / 2.0 * dot(b.major_axis(), axis).abs() + b.h / 2.0 * dot(b.minor_axis(), axis).abs()
}

/// Closed-rectangle overlap via the separating-axis test over both boxes'
/// edge normals. Touching boundaries count as intersecting.
pub fn obb_intersects(a: &OrientedBox, b: &OrientedBox) -> bool {
    let d = sub(b.center(), a.center());
    [a.major_axis(), a.minor_axis(), b.major_axis(), b.minor_axis()]
        .into_iter()
        .all(|axis| dot(d, axis).abs() <= projected_radius(a, axis) + projected_radius(b, axis))
}

/// Acute angle between the two major axes, in degrees within `[0, 90]`.
pub fn axis_angle_between(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let d = (a.theta_deg - b.theta_deg).abs().rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Result of locating the bow along the string zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZoneCrossing {
    /// Fraction along the zone axis where the bow centerline crosses it,
    /// 0 at the bridge end and 1 at the fingerboard end.
    At(f64),
    /// Axes are within [`PARALLEL_LIMIT_DEG`]; the crossing is ill-conditioned.
    Parallel,
}

/// Zone axis oriented from the bridge end to the fingerboard end. The
/// fingerboard end is the endpoint higher on screen (smaller y); for a
/// horizontal zone the left endpoint is taken.
pub fn zone_axis(strings: &OrientedBox) -> (Point2, Point2) {
    let (p, q) = strings.axis_endpoints();
    let q_is_fingerboard = q[1] < p[1] || (q[1] == p[1] && q[0] < p[0]);
    if q_is_fingerboard {
        (p, q)
    } else {
        (q, p)
    }
}

/// Where the bow centerline crosses the string-zone axis.
pub fn zone_position(bow: &OrientedBox, strings: &OrientedBox) -> Result<ZoneCrossing, GeometryError> {
    if !obb_intersects(bow, strings) {
        return Err(GeometryError::NotIntersecting);
    }
    if axis_angle_between(bow, strings) < PARALLEL_LIMIT_DEG {
        return Ok(ZoneCrossing::Parallel);
    }
    let (bridge, fingerboard) = zone_axis(strings);
    let zone = sub(fingerboard, bridge);
    let dir = bow.major_axis();
    // bridge + s*zone = bow_center + t*dir, solved for s by Cramer's rule
    let rhs = sub(bow.center(), bridge);
    let det = dir[0] * zone[1] - dir[1] * zone[0];
    let s = (dir[0] * rhs[1] - dir[1] * rhs[0]) / det;
    Ok(ZoneCrossing::At(s.clamp(0.0, 1.0)))
}

/// Fraction along the zone axis of the bow center's orthogonal projection.
pub fn project_onto_zone(bow: &OrientedBox, strings: &OrientedBox) -> f64 {
    let (bridge, fingerboard) = zone_axis(strings);
    let zone = sub(fingerboard, bridge);
    let s = dot(sub(bow.center(), bridge), zone) / dot(zone, zone);
    s.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BowHeight {
    TooHigh,
    TooLow,
    Ok,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BowAngle {
    Correct,
    Incorrect,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BowAssessment {
    /// Both boxes were present in the frame.
    pub detected: bool,
    pub in_zone: bool,
    pub height: BowHeight,
    pub angle: BowAngle,
    pub zone_position: Option<f64>,
    pub deviation_deg: Option<f64>,
}

impl BowAssessment {
    fn outside(detected: bool) -> Self {
        Self {
            detected,
            in_zone: false,
            height: BowHeight::NotApplicable,
            angle: BowAngle::NotApplicable,
            zone_position: None,
            deviation_deg: None,
        }
    }

    /// Boxes were seen but do not touch.
    pub fn out_of_zone(&self) -> bool {
        self.detected && !self.in_zone
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BowConfig {
    pub angle_tolerance_deg: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
}

impl Default for BowConfig {
    fn default() -> Self {
        Self {
            angle_tolerance_deg: 10.0,
            low_threshold: 0.15,
            high_threshold: 0.85,
        }
    }
}

impl BowConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let Self {
            angle_tolerance_deg: tol,
            low_threshold: lo,
            high_threshold: hi,
        } = *self;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(GeometryError::BadConfig(format!(
                "thresholds must satisfy 0 < low ({lo}) < high ({hi}) < 1"
            )));
        }
        if !(0.0 < tol && tol < 45.0) {
            return Err(GeometryError::BadConfig(format!(
                "angle tolerance {tol} must be in (0, 45) degrees"
            )));
        }
        Ok(())
    }
}

/// Bow height and angle verdicts. Total: missing or disjoint boxes resolve to
/// `NotApplicable`.
pub fn classify_bow(
    bow: Option<&OrientedBox>,
    strings: Option<&OrientedBox>,
    cfg: &BowConfig,
) -> BowAssessment {
    let (Some(bow), Some(strings)) = (bow, strings) else {
        return BowAssessment::outside(false);
    };
    let position = match zone_position(bow, strings) {
        Ok(ZoneCrossing::At(p)) => p,
        Ok(ZoneCrossing::Parallel) => project_onto_zone(bow, strings),
        Err(_) => return BowAssessment::outside(true),
    };
    let deviation = (90.0 - axis_angle_between(bow, strings)).abs();
    let angle = if deviation <= cfg.angle_tolerance_deg {
        BowAngle::Correct
    } else {
        BowAngle::Incorrect
    };
    let height = if position < cfg.low_threshold {
        BowHeight::TooLow
    } else if position > cfg.high_threshold {
        BowHeight::TooHigh
    } else {
        BowHeight::Ok
    };
    BowAssessment {
        detected: true,
        in_zone: true,
        height,
        angle,
        zone_position: Some(position),
        deviation_deg: Some(deviation),
    }
}
