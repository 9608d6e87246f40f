//! The navigation algorithms under test, behind one black-box planning
//! interface.
//!
//! Subjects are stateful within a test and reset between tests. Given
//! identical snapshot sequences and parameters, the built-in subjects emit
//! bitwise-identical command sequences.

mod external;
mod refnav_a;
mod refnav_b;

pub use external::ExternalSubject;
pub use refnav_a::RefNavA;
pub use refnav_b::RefNavB;

use crate::geometry::{ObstacleShape, Pose2D};
use crate::scenario::{RobotConfig, TestDefinition};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubjectError {
    #[error("unknown subject kind `{0}`")]
    UnknownSubject(String),
    /// The planner raised, diverged, or broke protocol; the test records
    /// an Error outcome.
    #[error("subject failure: {0}")]
    Failed(String),
}

/// What one subject perceives at one tick. Obstacles are filtered to
/// those within sensing range of the robot center.
#[derive(Debug, Clone)]
pub struct SensorSnapshot {
    /// Simulated time, seconds.
    pub t: f64,
    pub robot_pose: Pose2D,
    pub current_waypoint: Pose2D,
    pub visible_obstacles: Vec<ObstacleShape>,
}

/// Body-frame velocity request. The simulator clamps the translational
/// norm to nominal_speed and |wyaw| to max_yaw_rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    /// Forward, m/s.
    pub vx: f64,
    /// Lateral (left positive), m/s.
    pub vy: f64,
    /// Yaw rate, rad/s.
    pub wyaw: f64,
}

impl VelocityCommand {
    pub const ZERO: VelocityCommand = VelocityCommand {
        vx: 0.0,
        vy: 0.0,
        wyaw: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0 && self.wyaw == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.wyaw.is_finite()
    }

    /// Enforce the command limits from the robot config.
    pub fn clamped(&self, config: &RobotConfig) -> VelocityCommand {
        let speed = (self.vx * self.vx + self.vy * self.vy).sqrt();
        let (vx, vy) = if speed > config.nominal_speed {
            let k = config.nominal_speed / speed;
            (self.vx * k, self.vy * k)
        } else {
            (self.vx, self.vy)
        };
        VelocityCommand {
            vx,
            vy,
            wyaw: self.wyaw.clamp(-config.max_yaw_rate, config.max_yaw_rate),
        }
    }
}

/// One navigation algorithm under test.
pub trait Planner {
    /// Prepare for a fresh test. Called once before the first plan_step.
    fn reset(&mut self, test: &TestDefinition) -> Result<(), SubjectError>;

    /// Decide the next velocity command from the current snapshot.
    fn plan_step(
        &mut self,
        snapshot: &SensorSnapshot,
        config: &RobotConfig,
    ) -> Result<VelocityCommand, SubjectError>;
}

/// Subject selector: a kind plus free-form string parameters, cheap to
/// clone into every worker, which constructs its own planner instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl SubjectSpec {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    /// Identifier used in logs and reports.
    pub fn id(&self) -> &str {
        &self.kind
    }

    pub fn make(&self) -> Result<Box<dyn Planner>, SubjectError> {
        make_subject(&self.kind, &self.params)
    }
}

fn param_f64(
    params: &BTreeMap<String, String>,
    key: &str,
    default: f64,
) -> Result<f64, SubjectError> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| SubjectError::Failed(format!("parameter `{key}`: not a number: {v}"))),
    }
}

/// Construct a fresh planner of the given kind.
///
/// Kinds: `refnav_a` (potential-field planner), `refnav_b`
/// (grid-replanning planner), `external` (subprocess speaking the
/// line-delimited JSON protocol; requires a `cmd` parameter).
pub fn make_subject(
    kind: &str,
    params: &BTreeMap<String, String>,
) -> Result<Box<dyn Planner>, SubjectError> {
    match kind {
        "refnav_a" => Ok(Box::new(RefNavA::from_params(params)?)),
        "refnav_b" => Ok(Box::new(RefNavB::from_params(params)?)),
        "external" => Ok(Box::new(ExternalSubject::from_params(params)?)),
        other => Err(SubjectError::UnknownSubject(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::scenario::builtin_seeds;

    fn free_snapshot(pose: Pose2D, waypoint: Pose2D) -> SensorSnapshot {
        SensorSnapshot {
            t: 0.0,
            robot_pose: pose,
            current_waypoint: waypoint,
            visible_obstacles: vec![],
        }
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let e = make_subject("refnav_c", &BTreeMap::new()).err().unwrap();
        assert!(matches!(e, SubjectError::UnknownSubject(_)));
    }

    #[test]
    fn builtin_kinds_construct() {
        assert!(make_subject("refnav_a", &BTreeMap::new()).is_ok());
        assert!(make_subject("refnav_b", &BTreeMap::new()).is_ok());
    }

    #[test]
    fn clamp_preserves_direction_and_limits_norm() {
        let config = RobotConfig::default();
        let c = VelocityCommand {
            vx: 3.0,
            vy: 4.0,
            wyaw: 9.0,
        }
        .clamped(&config);
        let speed = (c.vx * c.vx + c.vy * c.vy).sqrt();
        assert!((speed - config.nominal_speed).abs() < 1e-12);
        assert!((c.vy / c.vx - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.wyaw, config.max_yaw_rate);
    }

    #[test]
    fn unobstructed_waypoint_ahead_gives_forward_motion() {
        let seed = &builtin_seeds()[0];
        let config = seed.robot;
        let pose = Pose2D::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let wp = Pose2D::new(0.0, 10.0, std::f64::consts::FRAC_PI_2);
        for kind in ["refnav_a", "refnav_b"] {
            let mut p = make_subject(kind, &BTreeMap::new()).unwrap();
            p.reset(seed).unwrap();
            let cmd = p.plan_step(&free_snapshot(pose, wp), &config).unwrap();
            assert!(cmd.vx > 0.0, "{kind} drives forward, got {cmd:?}");
            assert!(cmd.vy.abs() < 1e-9, "{kind} stays centered, got {cmd:?}");
            assert!(cmd.wyaw.abs() < 1e-9, "{kind} holds heading, got {cmd:?}");
        }
    }

    #[test]
    fn within_goal_tolerance_gives_zero_command() {
        let seed = &builtin_seeds()[0];
        let config = seed.robot;
        let wp = Pose2D::new(0.0, 10.0, std::f64::consts::FRAC_PI_2);
        let pose = Pose2D::new(0.05, 9.9, std::f64::consts::FRAC_PI_2);
        assert!(pose.position().distance_to(Point2::new(0.0, 10.0)) < 0.25);
        for kind in ["refnav_a", "refnav_b"] {
            let mut p = make_subject(kind, &BTreeMap::new()).unwrap();
            p.reset(seed).unwrap();
            let cmd = p.plan_step(&free_snapshot(pose, wp), &config).unwrap();
            assert_eq!(cmd, VelocityCommand::ZERO, "{kind} rests at the goal");
        }
    }
}
