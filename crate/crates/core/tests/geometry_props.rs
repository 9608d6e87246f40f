//! Property and oracle tests for shape distances.

mod support;

use navstress::geometry::{
    box_box_distance, obstacle_gap, shape_distance, CircleShape, ObstacleShape, OrientedBox,
    Point2, Pose2D,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn box_strategy() -> impl Strategy<Value = ObstacleShape> {
    (
        -5.0..5.0f64,
        -5.0..5.0f64,
        -PI..PI,
        0.3..3.0f64,
        0.3..3.0f64,
    )
        .prop_map(|(x, y, yaw, length, width)| {
            ObstacleShape::Box(OrientedBox::new(Pose2D::new(x, y, yaw), length, width))
        })
}

fn circle_strategy() -> impl Strategy<Value = ObstacleShape> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.3..3.0f64).prop_map(|(x, y, d)| {
        ObstacleShape::Circle(CircleShape::new(Point2::new(x, y), d))
    })
}

fn shape_strategy() -> impl Strategy<Value = ObstacleShape> {
    prop_oneof![box_strategy(), circle_strategy()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distance_is_exactly_symmetric(a in shape_strategy(), b in shape_strategy()) {
        let ab = shape_distance(&a, &b);
        let ba = shape_distance(&b, &a);
        prop_assert_eq!(ab.to_bits(), ba.to_bits());
    }

    #[test]
    fn distance_is_non_negative_and_finite(a in shape_strategy(), b in shape_strategy()) {
        let d = shape_distance(&a, &b);
        prop_assert!(d >= 0.0);
        prop_assert!(d.is_finite());
    }

    #[test]
    fn distance_is_rigid_transform_equivariant(
        a in shape_strategy(),
        b in shape_strategy(),
        dx in -10.0..10.0f64,
        dy in -10.0..10.0f64,
        dtheta in -PI..PI,
    ) {
        let before = shape_distance(&a, &b);
        let after = shape_distance(
            &support::rigid_transform(&a, dx, dy, dtheta),
            &support::rigid_transform(&b, dx, dy, dtheta),
        );
        prop_assert!((before - after).abs() < 1e-9, "before={before} after={after}");
    }

    #[test]
    fn zero_distance_coincides_with_sampled_intersection(
        a in shape_strategy(),
        b in shape_strategy(),
    ) {
        let d = shape_distance(&a, &b);
        if support::sampled_intersect(&a, &b) {
            prop_assert_eq!(d, 0.0);
        }
        if d == 0.0 {
            // Touching regions can evade the containment probes; boundary
            // samples must then come arbitrarily close.
            let near = support::sampled_intersect(&a, &b)
                || support::oracle_distance(&a, &b, 400) <= 2e-2;
            prop_assert!(near);
        }
    }

    #[test]
    fn analytic_distance_agrees_with_boundary_oracle(
        a in shape_strategy(),
        b in shape_strategy(),
    ) {
        let analytic = shape_distance(&a, &b);
        let sampled = support::oracle_distance(&a, &b, 400);
        prop_assert!(
            (analytic - sampled).abs() <= 2e-2,
            "analytic={analytic} sampled={sampled}"
        );
    }
}

#[test]
fn rotated_box_pair_matches_oracle() {
    let a = ObstacleShape::Box(OrientedBox::new(Pose2D::new(0.0, 0.0, PI / 4.0), 1.0, 1.0));
    let b = ObstacleShape::Box(OrientedBox::new(Pose2D::new(3.0, 0.0, 0.0), 1.0, 1.0));
    let analytic = shape_distance(&a, &b);
    let sampled = support::oracle_distance(&a, &b, 400);
    assert!((analytic - sampled).abs() <= 2e-2);
    if let (ObstacleShape::Box(x), ObstacleShape::Box(y)) = (&a, &b) {
        assert!((box_box_distance(x, y) - (2.5 - 0.5f64.sqrt())).abs() < 1e-12);
    }
}

#[test]
fn rotated_box_vs_offset_circle_matches_oracle() {
    let a = ObstacleShape::Box(OrientedBox::new(Pose2D::new(1.0, -2.0, 0.7), 2.0, 0.8));
    let b = ObstacleShape::Circle(CircleShape::new(Point2::new(4.0, 1.5), 1.2));
    let analytic = shape_distance(&a, &b);
    let sampled = support::oracle_distance(&a, &b, 400);
    assert!((analytic - sampled).abs() <= 2e-2);
}

#[test]
fn rotated_gap_matches_oracle() {
    let a = ObstacleShape::Box(OrientedBox::new(Pose2D::new(-1.0, 4.0, 0.5), 1.0, 1.0));
    let b = ObstacleShape::Box(OrientedBox::new(Pose2D::new(1.3, 5.2, -0.3), 1.0, 1.0));
    let analytic = obstacle_gap(&a, &b);
    let sampled = support::oracle_distance(&a, &b, 400);
    assert!((analytic - sampled).abs() <= 2e-2);
}
