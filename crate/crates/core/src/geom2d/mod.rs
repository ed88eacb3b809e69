//! Planar geometry on image coordinates: oriented boxes, quadrilateral
//! corners and the area/centroid/edge/angle measurements the pose stage
//! consumes, plus convex hull and minimum-area rectangle fitting.
//!
//! Image coordinates put `x` to the right and `y` down. A pixel `(i, j)`
//! covers the unit square `[i, i + 1) x [j, j + 1)`. "Counter-clockwise"
//! means positive signed shoelace area in these coordinates.

mod hull;
mod quad;
mod rect;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hull::convex_hull;
pub use quad::{quad_fit, QuadFit};
pub use rect::min_area_rect;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate edge: corners {0} and {1} coincide")]
    DegenerateEdge(usize, usize),
    #[error("degenerate hull: all {0} points are collinear or coincident")]
    DegenerateHull(usize),
    #[error("duplicate corner points")]
    DuplicatePoints,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A point on the image plane, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_squared(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Self) -> f64 {
        self.distance_squared(other).sqrt()
    }
}

/// `(b - a) x (c - a)`; positive when `a -> b -> c` turns counter-clockwise.
#[inline]
pub(crate) fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Oriented rectangle `{cx, cy, l, w, theta}`.
///
/// `theta` is the direction of the length axis measured from the image
/// `x` axis towards `y`, normalized to `[-pi/2, pi/2)`; `length >= width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub length: f64,
    pub width: f64,
    pub theta: f64,
}

/// Wraps an angle into `[-pi/2, pi/2)`.
pub fn normalize_half_turn(theta: f64) -> f64 {
    let t = theta - PI * ((theta + FRAC_PI_2) / PI).floor();
    if t >= FRAC_PI_2 {
        t - PI
    } else {
        t
    }
}

impl OrientedBox {
    /// Builds a box from two side lengths and the direction of the first
    /// side, swapping sides so that `length >= width`.
    pub fn new(cx: f64, cy: f64, side_a: f64, side_b: f64, angle_a: f64) -> Self {
        let (length, width, theta) = if side_a >= side_b {
            (side_a, side_b, angle_a)
        } else {
            (side_b, side_a, angle_a + FRAC_PI_2)
        };
        Self {
            cx,
            cy,
            length,
            width,
            theta: normalize_half_turn(theta),
        }
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    /// Rotated corners in canonical order (no previous-frame hint).
    pub fn corners(&self) -> QuadCorners {
        let pts = rotated_corners(self);
        // Rotated corners of a positive-size box are distinct.
        canonical_order(pts, None).unwrap_or(QuadCorners(pts))
    }
}

/// How [`corners_from_box`] evaluates the corner formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerMode {
    /// `center + R(theta) * (+-l/2, +-w/2)`.
    TrueRotation,
    /// `x = cx -+ (l/2) cos(theta)`, `y = cy +- (w/2) sin(theta)` taken
    /// literally. It does not rotate the box and collapses at `theta = 0`
    /// and `theta = pi/2`.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxCorners {
    pub points: [Point2; 4],
    /// `true` when the points do not span a proper quadrilateral.
    pub degenerate: bool,
    /// `true` when `points` is in canonical order.
    pub ordered: bool,
}

fn rotated_corners(b: &OrientedBox) -> [Point2; 4] {
    let (s, c) = b.theta.sin_cos();
    let hl = b.length / 2.0;
    let hw = b.width / 2.0;
    // Sign pattern (-,+), (+,+), (-,-), (+,-).
    [(-hl, hw), (hl, hw), (-hl, -hw), (hl, -hw)]
        .map(|(u, v)| Point2::new(b.cx + c * u - s * v, b.cy + s * u + c * v))
}

fn literal_corners(b: &OrientedBox) -> [Point2; 4] {
    let (s, c) = b.theta.sin_cos();
    let dx = b.length / 2.0 * c;
    let dy = b.width / 2.0 * s;
    [
        Point2::new(b.cx - dx, b.cy + dy),
        Point2::new(b.cx + dx, b.cy + dy),
        Point2::new(b.cx - dx, b.cy - dy),
        Point2::new(b.cx + dx, b.cy - dy),
    ]
}

fn spans_quad(pts: &[Point2; 4]) -> bool {
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| p.distance_squared(*q)))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return false;
    }
    let mut max_cross: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                max_cross = max_cross.max(cross(pts[i], pts[j], pts[k]).abs());
            }
        }
    }
    max_cross > 1e-12 * scale
}

pub fn corners_from_box(b: &OrientedBox, mode: CornerMode) -> BoxCorners {
    match mode {
        CornerMode::TrueRotation => {
            let q = b.corners();
            BoxCorners {
                points: q.0,
                degenerate: !spans_quad(&q.0),
                ordered: true,
            }
        }
        CornerMode::Literal => {
            let points = literal_corners(b);
            BoxCorners {
                points,
                degenerate: !spans_quad(&points),
                ordered: false,
            }
        }
    }
}

/// Four corners in canonical counter-clockwise order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuadCorners([Point2; 4]);

impl QuadCorners {
    pub fn points(&self) -> &[Point2; 4] {
        &self.0
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.0, ShoelaceMode::Full)
    }

    pub fn centroid(&self) -> Point2 {
        centroid(&self.0)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self(self.0.map(|p| Point2::new(p.x + dx, p.y + dy)))
    }
}

/// Axis-aligned pixel bounds: top-left `(x, y)` and pixel extents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aabb {
    pub x: i64,
    pub y: i64,
    pub length: u32,
    pub width: u32,
}

impl Aabb {
    pub fn area(&self) -> f64 {
        f64::from(self.length) * f64::from(self.width)
    }

    pub fn contains_pixel(&self, px: i64, py: i64) -> bool {
        px >= self.x
            && py >= self.y
            && px < self.x + i64::from(self.length)
            && py < self.y + i64::from(self.width)
    }

    /// Gap in pixels between two boxes along the axis with the larger gap;
    /// zero when they touch or intersect.
    pub fn gap(&self, other: &Aabb) -> i64 {
        let gx = (other.x - (self.x + i64::from(self.length)))
            .max(self.x - (other.x + i64::from(other.length)));
        let gy = (other.y - (self.y + i64::from(self.width)))
            .max(self.y - (other.y + i64::from(other.width)));
        gx.max(gy).max(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShoelaceMode {
    /// Cyclic sum over all four edges.
    Full,
    /// Sum over `i = 1..3` only, dropping the closing edge. Signed; kept
    /// for comparison only.
    Truncated,
}

pub fn shoelace_area(pts: &[Point2; 4], mode: ShoelaceMode) -> f64 {
    let terms = match mode {
        ShoelaceMode::Full => 4,
        ShoelaceMode::Truncated => 3,
    };
    let mut forward = 0.0;
    let mut backward = 0.0;
    for i in 0..terms {
        let a = pts[i];
        let b = pts[(i + 1) % 4];
        forward += a.x * b.y;
        backward += b.x * a.y;
    }
    let signed = 0.5 * (forward - backward);
    match mode {
        ShoelaceMode::Full => signed.abs(),
        ShoelaceMode::Truncated => signed,
    }
}

pub(crate) fn signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Mean of the four corners.
pub fn centroid(pts: &[Point2; 4]) -> Point2 {
    let sx: f64 = pts.iter().map(|p| p.x).sum();
    let sy: f64 = pts.iter().map(|p| p.y).sum();
    Point2::new(sx / 4.0, sy / 4.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeDirection {
    /// `atan2(dy, dx)` of edge `i -> i+1`, in `(-pi, pi]`.
    pub angle: f64,
    /// `dy / dx`; `+inf` for vertical edges.
    pub slope: f64,
}

impl EdgeDirection {
    /// Inclination of the edge line folded to `(-pi/2, pi/2]`; equals
    /// `atan(slope)` for finite slopes and `pi/2` for vertical edges.
    pub fn inclination(&self) -> f64 {
        let mut a = self.angle;
        while a > FRAC_PI_2 {
            a -= PI;
        }
        while a <= -FRAC_PI_2 {
            a += PI;
        }
        a
    }
}

pub fn edge_directions(pts: &[Point2; 4]) -> Result<[EdgeDirection; 4], GeomError> {
    let mut out = [EdgeDirection {
        angle: 0.0,
        slope: 0.0,
    }; 4];
    for i in 0..4 {
        let j = (i + 1) % 4;
        let dx = pts[j].x - pts[i].x;
        let dy = pts[j].y - pts[i].y;
        if dx == 0.0 && dy == 0.0 {
            return Err(GeomError::DegenerateEdge(i, j));
        }
        let slope = if dx == 0.0 { f64::INFINITY } else { dy / dx };
        out[i] = EdgeDirection {
            angle: dy.atan2(dx),
            slope,
        };
    }
    Ok(out)
}

/// Internal angles `a_i`, `i = 1..4`, where `a_i` is formed by edges `i` and
/// `i % 4 + 1` (so it sits at corner `i % 4 + 1`).
///
/// Computed from edge vectors as `pi - atan2(cross, dot)`. Where the slope
/// form `atan((m' - m) / (1 + m' m))` is defined it agrees modulo `pi`;
/// unlike it, this stays finite for perpendicular and vertical edges.
pub fn internal_angles(pts: &[Point2; 4]) -> Result<[f64; 4], GeomError> {
    edge_directions(pts)?;
    let orientation = signed_area(pts).signum();
    let orientation = if orientation == 0.0 { 1.0 } else { orientation };
    let mut out = [0.0; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let a = pts[i];
        let b = pts[(i + 1) % 4];
        let c = pts[(i + 2) % 4];
        let e1 = (b.x - a.x, b.y - a.y);
        let e2 = (c.x - b.x, c.y - b.y);
        let cr = e1.0 * e2.1 - e1.1 * e2.0;
        let dot = e1.0 * e2.0 + e1.1 * e2.1;
        let turn = (orientation * cr).atan2(dot);
        *slot = PI - turn;
    }
    Ok(out)
}

/// Orders four points counter-clockwise. Corner 1 is the point nearest the
/// previous frame's corner 1 when `prev` is given, otherwise the topmost
/// (then leftmost) point.
pub fn canonical_order(
    pts: [Point2; 4],
    prev: Option<&QuadCorners>,
) -> Result<QuadCorners, GeomError> {
    if pts.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            if pts[i] == pts[j] {
                return Err(GeomError::DuplicatePoints);
            }
        }
    }
    let c = centroid(&pts);
    let mut sorted = pts;
    sorted.sort_by(|a, b| {
        let ta = (a.y - c.y).atan2(a.x - c.x);
        let tb = (b.y - c.y).atan2(b.x - c.x);
        ta.total_cmp(&tb)
    });
    if signed_area(&sorted) < 0.0 {
        sorted.reverse();
    }
    let start = match prev {
        Some(p) => {
            let anchor = p.0[0];
            (0..4)
                .min_by(|&i, &j| {
                    sorted[i]
                        .distance_squared(anchor)
                        .total_cmp(&sorted[j].distance_squared(anchor))
                })
                .unwrap_or(0)
        }
        None => (0..4)
            .min_by(|&i, &j| {
                sorted[i]
                    .y
                    .total_cmp(&sorted[j].y)
                    .then(sorted[i].x.total_cmp(&sorted[j].x))
            })
            .unwrap_or(0),
    };
    sorted.rotate_left(start);
    Ok(QuadCorners(sorted))
}
