//! Shared helpers for integration tests: a brute-force distance oracle
//! over sampled boundary points, and reproducible random shape generation.
#![allow(dead_code)]

use navstress::geometry::{CircleShape, ObstacleShape, OrientedBox, Point2, Pose2D};
use rand::Rng;

/// Sample `n` points along the shape's boundary, corners included.
pub fn boundary_points(shape: &ObstacleShape, n: usize) -> Vec<Point2> {
    let mut pts = Vec::with_capacity(n);
    match shape {
        ObstacleShape::Box(b) => {
            let corners = b.corners();
            let per_edge = n / 4;
            for i in 0..4 {
                let a = corners[i];
                let c = corners[(i + 1) % 4];
                for k in 0..per_edge {
                    let t = k as f64 / per_edge as f64;
                    pts.push(Point2::new(a.x + (c.x - a.x) * t, a.y + (c.y - a.y) * t));
                }
            }
        }
        ObstacleShape::Circle(c) => {
            let r = c.diameter / 2.0;
            for k in 0..n {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                pts.push(Point2::new(c.center.x + r * a.cos(), c.center.y + r * a.sin()));
            }
        }
    }
    pts
}

/// Boundary samples plus interior probes, for containment checks.
pub fn containment_probes(shape: &ObstacleShape) -> Vec<Point2> {
    let mut pts = boundary_points(shape, 160);
    match shape {
        ObstacleShape::Box(b) => {
            for i in 0..9 {
                for j in 0..9 {
                    let lx = (i as f64 / 8.0 - 0.5) * b.length;
                    let ly = (j as f64 / 8.0 - 0.5) * b.width;
                    pts.push(b.center.to_world(Point2::new(lx, ly)));
                }
            }
        }
        ObstacleShape::Circle(c) => {
            let r = c.diameter / 2.0;
            pts.push(c.center);
            for ring in 1..=4 {
                let rr = r * ring as f64 / 4.0;
                for k in 0..16 {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                    pts.push(Point2::new(c.center.x + rr * a.cos(), c.center.y + rr * a.sin()));
                }
            }
        }
    }
    pts
}

/// True when sampled probes of one shape land inside the other.
pub fn sampled_intersect(a: &ObstacleShape, b: &ObstacleShape) -> bool {
    containment_probes(a).iter().any(|p| b.contains_point(*p))
        || containment_probes(b).iter().any(|p| a.contains_point(*p))
}

/// Brute-force distance: minimum over `n`x`n` boundary point pairs, zero
/// when the containment sampler detects overlap. Accurate to roughly half
/// a boundary-sample spacing.
pub fn oracle_distance(a: &ObstacleShape, b: &ObstacleShape, n: usize) -> f64 {
    if sampled_intersect(a, b) {
        return 0.0;
    }
    let pa = boundary_points(a, n);
    let pb = boundary_points(b, n);
    let mut best = f64::INFINITY;
    for p in &pa {
        for q in &pb {
            let d2 = (p.x - q.x).powi(2) + (p.y - q.y).powi(2);
            if d2 < best {
                best = d2;
            }
        }
    }
    best.sqrt()
}

/// Random box or circle with centers in [-5, 5]^2 and dimensions in
/// [0.3, 3.0].
pub fn random_shape(rng: &mut impl Rng) -> ObstacleShape {
    let x = rng.random_range(-5.0..5.0);
    let y = rng.random_range(-5.0..5.0);
    if rng.random_bool(0.5) {
        let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let length = rng.random_range(0.3..3.0);
        let width = rng.random_range(0.3..3.0);
        ObstacleShape::Box(OrientedBox::new(Pose2D::new(x, y, yaw), length, width))
    } else {
        let diameter = rng.random_range(0.3..3.0);
        ObstacleShape::Circle(CircleShape::new(Point2::new(x, y), diameter))
    }
}

/// Apply one rigid transform (rotate about the origin by `dtheta`, then
/// translate) to a shape.
pub fn rigid_transform(shape: &ObstacleShape, dx: f64, dy: f64, dtheta: f64) -> ObstacleShape {
    let rot = |p: Point2| {
        let (s, c) = dtheta.sin_cos();
        Point2::new(p.x * c - p.y * s + dx, p.x * s + p.y * c + dy)
    };
    match *shape {
        ObstacleShape::Box(b) => {
            let c = rot(b.center.position());
            ObstacleShape::Box(OrientedBox::new(
                Pose2D::new(c.x, c.y, b.center.yaw + dtheta),
                b.length,
                b.width,
            ))
        }
        ObstacleShape::Circle(circ) => {
            let c = rot(circ.center);
            ObstacleShape::Circle(CircleShape::new(c, circ.diameter))
        }
    }
}
