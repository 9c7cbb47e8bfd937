//! Planar geometry kernel: oriented boxes, arc-length parameterized
//! polylines, distances and closed-set intersection tests.
//!
//! All operations are pure. Angles are radians, counterclockwise positive,
//! zero along +x. Boundary contact always counts as intersection.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("arclength {s} outside [0, {total}]")]
    Domain { s: f64, total: f64 },
    #[error("path needs at least two distinct points")]
    DegeneratePath,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `heading`.
    #[inline]
    pub fn from_heading(heading: f64) -> Self {
        let (s, c) = heading.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is to the left of `self`.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Left-hand perpendicular (rotated +90°).
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let r = (angle + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Signed shortest angular difference `to - from`, in `[-π, π)`.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    /// Extent along the heading.
    pub length: f64,
    /// Extent perpendicular to the heading.
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center,
            heading,
            length,
            width,
        }
    }

    pub fn point(center: Vec2) -> Self {
        Self::new(center, 0.0, 0.0, 0.0)
    }

    pub fn is_point(&self) -> bool {
        self.length == 0.0 && self.width == 0.0
    }

    /// Corners counterclockwise, starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let fwd = Vec2::from_heading(self.heading);
        let left = fwd.perp();
        let f = fwd * (0.5 * self.length);
        let l = left * (0.5 * self.width);
        let c = self.center;
        [c + f + l, c - f + l, c - f - l, c + f - l]
    }

    /// Midpoint of the front edge.
    pub fn front_center(&self) -> Vec2 {
        self.center + Vec2::from_heading(self.heading) * (0.5 * self.length)
    }

    /// Closed containment of a point.
    pub fn contains(&self, q: Vec2) -> bool {
        let fwd = Vec2::from_heading(self.heading);
        let d = q - self.center;
        d.dot(fwd).abs() <= 0.5 * self.length && d.dot(fwd.perp()).abs() <= 0.5 * self.width
    }

    fn axes(&self) -> [Vec2; 2] {
        let fwd = Vec2::from_heading(self.heading);
        [fwd, fwd.perp()]
    }
}

/// Convenience wrapper; see [`OrientedBox::corners`].
pub fn box_corners(b: &OrientedBox) -> [Vec2; 4] {
    b.corners()
}

fn project_interval(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        let p = c.dot(axis);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    (lo, hi)
}

fn sat_overlap(ca: &[Vec2; 4], cb: &[Vec2; 4], axes: &[Vec2]) -> bool {
    axes.iter().all(|&axis| {
        let (a_lo, a_hi) = project_interval(ca, axis);
        let (b_lo, b_hi) = project_interval(cb, axis);
        a_hi >= b_lo && b_hi >= a_lo
    })
}

/// Separating-axis test on the closed boxes.
pub fn boxes_intersect(a: &OrientedBox, b: &OrientedBox) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    let [a0, a1] = a.axes();
    let [b0, b1] = b.axes();
    sat_overlap(&ca, &cb, &[a0, a1, b0, b1])
}

/// Closest point on segment `[s0, s1]` to `p`, with its parameter in `[0, 1]`.
pub fn closest_on_segment(p: Vec2, s0: Vec2, s1: Vec2) -> (Vec2, f64) {
    let d = s1 - s0;
    let len_sq = d.norm_sq();
    if len_sq == 0.0 {
        return (s0, 0.0);
    }
    let t = ((p - s0).dot(d) / len_sq).clamp(0.0, 1.0);
    (s0 + d * t, t)
}

pub fn point_segment_distance(p: Vec2, s0: Vec2, s1: Vec2) -> f64 {
    let (c, _) = closest_on_segment(p, s0, s1);
    p.distance(c)
}

/// Closest pair of points between two boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub on_a: Vec2,
    pub on_b: Vec2,
    pub distance: f64,
}

/// Minimum distance between two boxes together with the pair of points
/// realizing it. Overlapping boxes report distance 0 with both witness
/// points at `a.center`.
pub fn box_witness(a: &OrientedBox, b: &OrientedBox) -> Witness {
    if boxes_intersect(a, b) {
        return Witness {
            on_a: a.center,
            on_b: a.center,
            distance: 0.0,
        };
    }
    let ca = a.corners();
    let cb = b.corners();
    let mut best = Witness {
        on_a: a.center,
        on_b: b.center,
        distance: f64::INFINITY,
    };
    for &v in &ca {
        for i in 0..4 {
            let (c, _) = closest_on_segment(v, cb[i], cb[(i + 1) % 4]);
            let d = v.distance(c);
            if d < best.distance {
                best = Witness {
                    on_a: v,
                    on_b: c,
                    distance: d,
                };
            }
        }
    }
    for &v in &cb {
        for i in 0..4 {
            let (c, _) = closest_on_segment(v, ca[i], ca[(i + 1) % 4]);
            let d = v.distance(c);
            if d < best.distance {
                best = Witness {
                    on_a: c,
                    on_b: v,
                    distance: d,
                };
            }
        }
    }
    best
}

/// Minimum Euclidean distance between the two closed boxes; zero iff they touch.
pub fn box_distance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    box_witness(a, b).distance
}

/// Closed segment intersection using exact orientation tests.
pub fn segments_intersect(p1: Vec2, p2: Vec2, p3: Vec2, p4: Vec2) -> bool {
    fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
        (b - a).cross(c - a)
    }
    fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    }
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// Closed point-in-polygon test for a simple ring (no repeated closing vertex).
pub fn polygon_contains(ring: &[Vec2], q: Vec2) -> bool {
    let n = ring.len();
    if n == 0 {
        return false;
    }
    for i in 0..n {
        if point_segment_distance(q, ring[i], ring[(i + 1) % n]) <= 1e-12 {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > q.y) != (b.y > q.y) {
            let x_cross = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if q.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from a point to a closed polygon region (zero inside).
pub fn polygon_distance(ring: &[Vec2], q: Vec2) -> f64 {
    if polygon_contains(ring, q) {
        return 0.0;
    }
    let n = ring.len();
    (0..n)
        .map(|i| point_segment_distance(q, ring[i], ring[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Whether a box and a simple polygon share at least one point.
pub fn polygon_intersects_box(ring: &[Vec2], b: &OrientedBox) -> bool {
    let corners = b.corners();
    if corners.iter().any(|&c| polygon_contains(ring, c)) {
        return true;
    }
    if b.is_point() {
        return false;
    }
    if ring.iter().any(|&v| b.contains(v)) {
        return true;
    }
    let n = ring.len();
    for i in 0..n {
        let (r0, r1) = (ring[i], ring[(i + 1) % n]);
        for k in 0..4 {
            if segments_intersect(r0, r1, corners[k], corners[(k + 1) % 4]) {
                return true;
            }
        }
    }
    false
}

/// Signed shoelace area; positive for counterclockwise rings.
pub fn polygon_signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| ring[i].cross(ring[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// True when no two non-adjacent edges of the ring touch.
pub fn polygon_is_simple(ring: &[Vec2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a0, a1) = (ring[i], ring[(i + 1) % n]);
        if a0 == a1 {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(a0, a1, ring[j], ring[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Minimum distance from `q` to an open polyline.
pub fn polyline_distance(points: &[Vec2], q: Vec2) -> f64 {
    match points.len() {
        0 => f64::INFINITY,
        1 => q.distance(points[0]),
        _ => points
            .windows(2)
            .map(|w| point_segment_distance(q, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// A polyline with cumulative arc length at each vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParam {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

/// Result of projecting a point onto a [`PathParam`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point.
    pub s: f64,
    /// Signed perpendicular offset relative to the closest segment, positive to the left.
    pub lateral: f64,
    /// Euclidean distance to the closest point.
    pub distance: f64,
}

impl PathParam {
    pub fn new(points: Vec<Vec2>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::DegeneratePath);
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            acc += w[0].distance(w[1]);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(GeometryError::DegeneratePath);
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative.last().expect("path has points")
    }

    fn segment_heading(&self, j: usize) -> f64 {
        (self.points[j + 1] - self.points[j]).heading()
    }

    /// Last segment with nonzero length at or before index `j`.
    fn nondegenerate_segment_at_or_before(&self, mut j: usize) -> usize {
        while j > 0 && self.cumulative[j + 1] == self.cumulative[j] {
            j -= 1;
        }
        j
    }

    /// Position and tangent heading at arc length `s`.
    pub fn point_at_arclength(&self, s: f64) -> Result<(Vec2, f64), GeometryError> {
        let total = self.total_length();
        if !(0.0..=total).contains(&s) {
            return Err(GeometryError::Domain { s, total });
        }
        let n = self.points.len();
        let idx = self.cumulative.partition_point(|&c| c <= s);
        if idx >= n {
            let j = self.nondegenerate_segment_at_or_before(n - 2);
            return Ok((self.points[n - 1], self.segment_heading(j)));
        }
        let j = idx - 1;
        let seg_len = self.cumulative[j + 1] - self.cumulative[j];
        let t = (s - self.cumulative[j]) / seg_len;
        let p = if t == 0.0 {
            self.points[j]
        } else {
            self.points[j] + (self.points[j + 1] - self.points[j]) * t
        };
        Ok((p, self.segment_heading(j)))
    }

    /// Closest point on the path to `q`; ties resolve to the smaller arc length.
    pub fn project(&self, q: Vec2) -> Projection {
        let mut best = Projection {
            s: 0.0,
            lateral: 0.0,
            distance: f64::INFINITY,
        };
        for j in 0..self.points.len() - 1 {
            let (a, b) = (self.points[j], self.points[j + 1]);
            let seg = b - a;
            let seg_len = self.cumulative[j + 1] - self.cumulative[j];
            if seg_len == 0.0 {
                continue;
            }
            let (c, t) = closest_on_segment(q, a, b);
            let d = q.distance(c);
            if d < best.distance {
                let dir = seg * (1.0 / seg.norm());
                best = Projection {
                    s: self.cumulative[j] + t * seg_len,
                    lateral: dir.cross(q - c),
                    distance: d,
                };
            }
        }
        best
    }
}

/// Free-function form of [`PathParam::point_at_arclength`].
pub fn point_at_arclength(p: &PathParam, s: f64) -> Result<(Vec2, f64), GeometryError> {
    p.point_at_arclength(s)
}

/// Free-function form of [`PathParam::project`], returning `(s, lateral)`.
pub fn project_to_path(p: &PathParam, q: Vec2) -> (f64, f64) {
    let pr = p.project(q);
    (pr.s, pr.lateral)
}
