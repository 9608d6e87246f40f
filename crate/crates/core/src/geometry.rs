//! Exact 2D distance and overlap computations between oriented-box and
//! circle footprints.
//!
//! All shapes are closed regions: the distance between two shapes is the
//! Euclidean minimum over both regions and clamps to exactly `0.0` when
//! they touch or overlap. Angles are radians everywhere in this module.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Normalize an angle to the half-open interval `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r > PI {
        r -= two_pi;
    } else if r <= -PI {
        r += two_pi;
    }
    r
}

/// A point in world coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Planar pose: position in meters, yaw in radians normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Map a point from this pose's body frame to the world frame.
    pub fn to_world(&self, local: Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        Point2::new(
            self.x + local.x * c - local.y * s,
            self.y + local.x * s + local.y * c,
        )
    }

    /// Map a world point into this pose's body frame.
    pub fn to_body(&self, world: Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        let dx = world.x - self.x;
        let dy = world.y - self.y;
        Point2::new(dx * c + dy * s, -dx * s + dy * c)
    }
}

/// A rectangle with arbitrary position and orientation.
///
/// `length` spans the box along its heading (`center.yaw`), `width` spans
/// it laterally. Both must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Pose2D,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Pose2D, length: f64, width: f64) -> Self {
        Self {
            center,
            length,
            width,
        }
    }

    /// The four corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        [
            self.center.to_world(Point2::new(hl, hw)),
            self.center.to_world(Point2::new(-hl, hw)),
            self.center.to_world(Point2::new(-hl, -hw)),
            self.center.to_world(Point2::new(hl, -hw)),
        ]
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        let local = self.center.to_body(p);
        local.x.abs() <= self.length / 2.0 && local.y.abs() <= self.width / 2.0
    }

    /// Closest point of the closed box region to `p` (is `p` itself when
    /// `p` lies inside).
    pub fn closest_point(&self, p: Point2) -> Point2 {
        let local = self.center.to_body(p);
        let cx = local.x.clamp(-self.length / 2.0, self.length / 2.0);
        let cy = local.y.clamp(-self.width / 2.0, self.width / 2.0);
        self.center.to_world(Point2::new(cx, cy))
    }

    /// Axis-aligned bounds as `(min, max)`.
    pub fn aabb(&self) -> (Point2, Point2) {
        let cs = self.corners();
        let mut min = cs[0];
        let mut max = cs[0];
        for c in &cs[1..] {
            min.x = min.x.min(c.x);
            min.y = min.y.min(c.y);
            max.x = max.x.max(c.x);
            max.y = max.y.max(c.y);
        }
        (min, max)
    }
}

/// A circular footprint described by its center and diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleShape {
    pub center: Point2,
    pub diameter: f64,
}

impl CircleShape {
    pub fn new(center: Point2, diameter: f64) -> Self {
        Self { center, diameter }
    }

    pub fn radius(&self) -> f64 {
        self.diameter / 2.0
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        self.center.distance_to(p) <= self.radius()
    }

    pub fn aabb(&self) -> (Point2, Point2) {
        let r = self.radius();
        (
            Point2::new(self.center.x - r, self.center.y - r),
            Point2::new(self.center.x + r, self.center.y + r),
        )
    }
}

/// Footprint of one obstacle: an oriented box or a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleShape {
    Box(OrientedBox),
    Circle(CircleShape),
}

impl ObstacleShape {
    pub fn contains_point(&self, p: Point2) -> bool {
        match self {
            ObstacleShape::Box(b) => b.contains_point(p),
            ObstacleShape::Circle(c) => c.contains_point(p),
        }
    }

    pub fn aabb(&self) -> (Point2, Point2) {
        match self {
            ObstacleShape::Box(b) => b.aabb(),
            ObstacleShape::Circle(c) => c.aabb(),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> ObstacleShape {
        match *self {
            ObstacleShape::Box(b) => ObstacleShape::Box(OrientedBox::new(
                Pose2D::new(b.center.x + dx, b.center.y + dy, b.center.yaw),
                b.length,
                b.width,
            )),
            ObstacleShape::Circle(c) => ObstacleShape::Circle(CircleShape::new(
                Point2::new(c.center.x + dx, c.center.y + dy),
                c.diameter,
            )),
        }
    }

    /// Scale the shape's dimensions about its center by `factor`.
    pub fn scaled(&self, factor: f64) -> ObstacleShape {
        match *self {
            ObstacleShape::Box(b) => {
                ObstacleShape::Box(OrientedBox::new(b.center, b.length * factor, b.width * factor))
            }
            ObstacleShape::Circle(c) => {
                ObstacleShape::Circle(CircleShape::new(c.center, c.diameter * factor))
            }
        }
    }

    /// Rotate the shape about its center. A no-op for circles.
    pub fn rotated(&self, dyaw: f64) -> ObstacleShape {
        match *self {
            ObstacleShape::Box(b) => ObstacleShape::Box(OrientedBox::new(
                Pose2D::new(b.center.x, b.center.y, b.center.yaw + dyaw),
                b.length,
                b.width,
            )),
            ObstacleShape::Circle(c) => ObstacleShape::Circle(c),
        }
    }
}

/// Squared distance from `p` to segment `ab`.
pub fn point_segment_distance_sq(p: Point2, a: Point2, b: Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len_sq = abx * abx + aby * aby;
    if len_sq == 0.0 {
        return (p.x - a.x).powi(2) + (p.y - a.y).powi(2);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len_sq).clamp(0.0, 1.0);
    let qx = a.x + t * abx;
    let qy = a.y + t * aby;
    (p.x - qx).powi(2) + (p.y - qy).powi(2)
}

fn project_corners(corners: &[Point2; 4], ax: f64, ay: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        let d = c.x * ax + c.y * ay;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Separating-axis overlap test for two boxes. Touching counts as overlap.
fn boxes_overlap(a: &[Point2; 4], b: &[Point2; 4]) -> bool {
    for corners in [a, b] {
        // Opposite rectangle edges are parallel: two axes per box suffice.
        for i in 0..2 {
            let ex = corners[i + 1].x - corners[i].x;
            let ey = corners[i + 1].y - corners[i].y;
            let (ax, ay) = (-ey, ex);
            let (min_a, max_a) = project_corners(a, ax, ay);
            let (min_b, max_b) = project_corners(b, ax, ay);
            if max_a < min_b || max_b < min_a {
                return false;
            }
        }
    }
    true
}

/// Minimum distance between two disjoint convex quads via vertex-edge
/// enumeration. The candidate set is symmetric in the arguments, so the
/// result is bit-identical under argument swap.
fn disjoint_quads_distance(a: &[Point2; 4], b: &[Point2; 4]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (b0, b1) = (b[i], b[(i + 1) % 4]);
        let (a0, a1) = (a[i], a[(i + 1) % 4]);
        for k in 0..4 {
            best = best.min(point_segment_distance_sq(a[k], b0, b1));
            best = best.min(point_segment_distance_sq(b[k], a0, a1));
        }
    }
    best.sqrt()
}

/// Euclidean minimum distance between two closed box regions.
///
/// Returns `0.0` exactly when the boxes touch or overlap; symmetric in its
/// arguments.
pub fn box_box_distance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let ca = a.corners();
    let cb = b.corners();
    if boxes_overlap(&ca, &cb) {
        return 0.0;
    }
    disjoint_quads_distance(&ca, &cb)
}

/// Distance from a box region to a circle region, clamped to `0.0` on
/// overlap.
pub fn box_circle_distance(a: &OrientedBox, c: &CircleShape) -> f64 {
    let closest = a.closest_point(c.center);
    (closest.distance_to(c.center) - c.radius()).max(0.0)
}

/// Distance between two circle regions.
pub fn circle_circle_distance(a: &CircleShape, b: &CircleShape) -> f64 {
    // Radii summed first so the result is bit-identical under argument swap.
    (a.center.distance_to(b.center) - (a.radius() + b.radius())).max(0.0)
}

/// Minimum distance between two obstacle footprints.
pub fn shape_distance(a: &ObstacleShape, b: &ObstacleShape) -> f64 {
    match (a, b) {
        (ObstacleShape::Box(x), ObstacleShape::Box(y)) => box_box_distance(x, y),
        (ObstacleShape::Box(x), ObstacleShape::Circle(y)) => box_circle_distance(x, y),
        (ObstacleShape::Circle(x), ObstacleShape::Box(y)) => box_circle_distance(y, x),
        (ObstacleShape::Circle(x), ObstacleShape::Circle(y)) => circle_circle_distance(x, y),
    }
}

/// Distance from an oriented box (typically the robot footprint) to an
/// obstacle footprint.
pub fn box_shape_distance(a: &OrientedBox, b: &ObstacleShape) -> f64 {
    match b {
        ObstacleShape::Box(y) => box_box_distance(a, y),
        ObstacleShape::Circle(y) => box_circle_distance(a, y),
    }
}

/// Gap between two distinct obstacles.
///
/// Identical to [`shape_distance`]; reported per test because narrow gaps
/// drive scenario difficulty.
pub fn obstacle_gap(a: &ObstacleShape, b: &ObstacleShape) -> f64 {
    shape_distance(a, b)
}

/// Distance from a point to the closed region of an obstacle footprint
/// (`0.0` when the point lies inside).
pub fn point_shape_distance(p: Point2, shape: &ObstacleShape) -> f64 {
    match shape {
        ObstacleShape::Box(b) => {
            if b.contains_point(p) {
                0.0
            } else {
                b.closest_point(p).distance_to(p)
            }
        }
        ObstacleShape::Circle(c) => (c.center.distance_to(p) - c.radius()).max(0.0),
    }
}

/// Closest point of an obstacle region to `p` (is `p` itself when inside).
pub fn closest_point_on_shape(p: Point2, shape: &ObstacleShape) -> Point2 {
    match shape {
        ObstacleShape::Box(b) => b.closest_point(p),
        ObstacleShape::Circle(c) => {
            let d = c.center.distance_to(p);
            if d <= c.radius() {
                p
            } else {
                let t = c.radius() / d;
                Point2::new(
                    c.center.x + (p.x - c.center.x) * t,
                    c.center.y + (p.y - c.center.y) * t,
                )
            }
        }
    }
}
