//! The declarative test-definition format: parse, validate, and serialize
//! scenarios, plus the bundled seed corpus.
//!
//! Files are YAML with a versioned `schema: 1` field. Lengths are meters;
//! angles and angular rates are degrees at the file boundary and radians
//! in memory. Unknown keys are rejected: silent typos in test configs
//! corrupt benchmarks.

use crate::geometry::{
    box_shape_distance, normalize_angle, CircleShape, ObstacleShape, OrientedBox, Point2, Pose2D,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// Structural problem: missing or unknown field, bad type, wrong schema
    /// version.
    #[error("schema error: {0}")]
    Schema(String),
    /// Well-formed document violating a semantic invariant.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Fixed point of the degrees round-trip for a normalized angle.
///
/// Angles pass through degrees at the file boundary; storing the fixed
/// point of `to_radians . to_degrees` makes parse(serialize(t)) bit-exact.
/// Converges within a handful of iterations for all finite inputs.
pub fn canonical_angle(a: f64) -> f64 {
    let mut x = normalize_angle(a);
    for _ in 0..16 {
        let y = normalize_angle(x.to_degrees().to_radians());
        if y == x {
            break;
        }
        x = y;
    }
    x
}

/// Same fixed-point treatment for angular rates and tolerances, which are
/// not wrapped into (-pi, pi].
pub fn canonical_angular(v: f64) -> f64 {
    let mut x = v;
    for _ in 0..16 {
        let y = x.to_degrees().to_radians();
        if y == x {
            break;
        }
        x = y;
    }
    x
}

/// Robot parameters shared by every test in a suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotConfig {
    /// Footprint box length along the heading, meters.
    pub footprint_length: f64,
    /// Footprint box width, meters.
    pub footprint_width: f64,
    /// Commanded forward speed, m/s.
    pub nominal_speed: f64,
    /// Yaw rate command limit, rad/s.
    pub max_yaw_rate: f64,
    /// Obstacles beyond this range are invisible to the subject, meters.
    pub sensing_radius: f64,
    /// Position tolerance for reaching a waypoint or the goal, meters.
    pub goal_position_tolerance: f64,
    /// Yaw tolerance for the final goal pose, radians.
    pub goal_yaw_tolerance: f64,
    /// Minimum clearance enforced by the safety layer, meters.
    pub safety_margin: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            footprint_length: 1.05,
            footprint_width: 0.55,
            nominal_speed: 0.5,
            max_yaw_rate: 1.0,
            sensing_radius: 5.0,
            goal_position_tolerance: 0.25,
            goal_yaw_tolerance: 0.35,
            safety_margin: 0.05,
        }
    }
}

impl RobotConfig {
    /// The robot's footprint box at a given pose.
    pub fn footprint_at(&self, pose: Pose2D) -> OrientedBox {
        OrientedBox::new(pose, self.footprint_length, self.footprint_width)
    }
}

/// Start pose, waypoint chain (last entry is the goal), and time budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub start: Pose2D,
    pub waypoints: Vec<Pose2D>,
    /// Seconds of simulated time before the run times out.
    pub time_budget: f64,
}

impl Mission {
    pub fn goal(&self) -> Pose2D {
        *self.waypoints.last().expect("mission has at least one waypoint")
    }

    /// Polyline start -> waypoints, as points.
    pub fn polyline(&self) -> Vec<Point2> {
        let mut pts = Vec::with_capacity(self.waypoints.len() + 1);
        pts.push(self.start.position());
        pts.extend(self.waypoints.iter().map(|w| w.position()));
        pts
    }

    /// Total length of the mission polyline, meters.
    pub fn path_length(&self) -> f64 {
        let pts = self.polyline();
        pts.windows(2).map(|w| w[0].distance_to(w[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: String,
    pub shape: ObstacleShape,
}

/// One complete, self-contained navigation test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDefinition {
    pub name: String,
    pub robot: RobotConfig,
    pub mission: Mission,
    pub obstacles: Vec<Obstacle>,
    /// Seed for any stochastic behavior in the subject under test.
    pub rng_seed: u64,
}

impl TestDefinition {
    /// Check every semantic invariant; parse calls this on every document.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::Validation(m));
        if self.name.is_empty() {
            return err("name must not be empty".into());
        }
        if !self
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            return err(format!(
                "name `{}` contains characters outside [A-Za-z0-9_.-]",
                self.name
            ));
        }

        let r = &self.robot;
        for (label, v) in [
            ("robot.footprint_length", r.footprint_length),
            ("robot.footprint_width", r.footprint_width),
            ("robot.nominal_speed", r.nominal_speed),
            ("robot.max_yaw_rate", r.max_yaw_rate),
            ("robot.sensing_radius", r.sensing_radius),
            ("robot.goal_position_tolerance", r.goal_position_tolerance),
            ("robot.goal_yaw_tolerance", r.goal_yaw_tolerance),
            ("robot.safety_margin", r.safety_margin),
            ("mission.time_budget", self.mission.time_budget),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{label} must be finite and > 0, got {v}"));
            }
        }
        if r.goal_position_tolerance >= r.sensing_radius {
            return err(format!(
                "goal_position_tolerance ({}) must be < sensing_radius ({})",
                r.goal_position_tolerance, r.sensing_radius
            ));
        }

        if self.mission.waypoints.is_empty() {
            return err("mission needs at least one waypoint".into());
        }
        let mut prev = self.mission.start;
        for (i, w) in self.mission.waypoints.iter().enumerate() {
            if !(w.x.is_finite() && w.y.is_finite() && w.yaw.is_finite()) {
                return err(format!("waypoint {i} has non-finite coordinates"));
            }
            if w.x == prev.x && w.y == prev.y && w.yaw == prev.yaw {
                return err(format!("waypoint {i} duplicates the pose before it"));
            }
            prev = *w;
        }
        if !(self.mission.start.x.is_finite() && self.mission.start.y.is_finite()) {
            return err("start pose has non-finite coordinates".into());
        }

        let mut seen = std::collections::BTreeSet::new();
        for o in &self.obstacles {
            if !seen.insert(o.id.as_str()) {
                return err(format!("duplicate obstacle id `{}`", o.id));
            }
            match &o.shape {
                ObstacleShape::Box(b) => {
                    if !(b.length.is_finite() && b.length > 0.0)
                        || !(b.width.is_finite() && b.width > 0.0)
                    {
                        return err(format!("obstacle `{}` box dimensions must be > 0", o.id));
                    }
                    if !(b.center.x.is_finite() && b.center.y.is_finite()) {
                        return err(format!("obstacle `{}` center is non-finite", o.id));
                    }
                }
                ObstacleShape::Circle(c) => {
                    if !(c.diameter.is_finite() && c.diameter > 0.0) {
                        return err(format!("obstacle `{}` diameter must be > 0", o.id));
                    }
                    if !(c.center.x.is_finite() && c.center.y.is_finite()) {
                        return err(format!("obstacle `{}` center is non-finite", o.id));
                    }
                }
            }
        }

        let start_fp = r.footprint_at(self.mission.start);
        let goal_fp = r.footprint_at(self.mission.goal());
        for o in &self.obstacles {
            if box_shape_distance(&start_fp, &o.shape) <= 0.0 {
                return err(format!("start footprint touches obstacle `{}`", o.id));
            }
            if box_shape_distance(&goal_fp, &o.shape) <= 0.0 {
                return err(format!("goal footprint touches obstacle `{}`", o.id));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// File format (degrees at the boundary)

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    x: f64,
    y: f64,
    /// Degrees in the file.
    yaw: f64,
}

impl RawPose {
    fn to_pose(&self) -> Pose2D {
        Pose2D {
            x: self.x,
            y: self.y,
            yaw: canonical_angle(self.yaw.to_radians()),
        }
    }

    fn from_pose(p: Pose2D) -> Self {
        Self {
            x: p.x,
            y: p.y,
            yaw: p.yaw.to_degrees(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoxShape {
    center: RawPose,
    length: f64,
    width: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircleShape {
    center: RawPoint,
    diameter: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawShape {
    Box(RawBoxShape),
    Circle(RawCircleShape),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    id: String,
    shape: RawShape,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRobotConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    footprint_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    footprint_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nominal_speed: Option<f64>,
    /// Degrees per second in the file.
    #[serde(skip_serializing_if = "Option::is_none")]
    max_yaw_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sensing_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    goal_position_tolerance: Option<f64>,
    /// Degrees in the file.
    #[serde(skip_serializing_if = "Option::is_none")]
    goal_yaw_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    safety_margin: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMission {
    start: RawPose,
    waypoints: Vec<RawPose>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_budget: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTestDefinition {
    schema: u32,
    name: String,
    rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    robot: Option<RawRobotConfig>,
    mission: RawMission,
    #[serde(default)]
    obstacles: Vec<RawObstacle>,
}

fn shape_from_raw(raw: &RawShape) -> ObstacleShape {
    match raw {
        RawShape::Box(b) => ObstacleShape::Box(OrientedBox::new(
            b.center.to_pose(),
            b.length,
            b.width,
        )),
        RawShape::Circle(c) => ObstacleShape::Circle(CircleShape::new(
            Point2::new(c.center.x, c.center.y),
            c.diameter,
        )),
    }
}

fn shape_to_raw(shape: &ObstacleShape) -> RawShape {
    match shape {
        ObstacleShape::Box(b) => RawShape::Box(RawBoxShape {
            center: RawPose::from_pose(b.center),
            length: b.length,
            width: b.width,
        }),
        ObstacleShape::Circle(c) => RawShape::Circle(RawCircleShape {
            center: RawPoint {
                x: c.center.x,
                y: c.center.y,
            },
            diameter: c.diameter,
        }),
    }
}

/// Parse and fully validate one test-definition document.
///
/// Robot fields and the time budget fall back to defaults when omitted;
/// the default budget is five times the ideal traversal time of the
/// mission polyline.
pub fn parse_test_definition(text: &str) -> Result<TestDefinition, ScenarioError> {
    let raw: RawTestDefinition =
        serde_yaml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    if raw.schema != SCHEMA_VERSION {
        return Err(ScenarioError::Schema(format!(
            "unsupported schema version {} (expected {})",
            raw.schema, SCHEMA_VERSION
        )));
    }

    let defaults = RobotConfig::default();
    let rr = raw.robot.unwrap_or_default();
    let robot = RobotConfig {
        footprint_length: rr.footprint_length.unwrap_or(defaults.footprint_length),
        footprint_width: rr.footprint_width.unwrap_or(defaults.footprint_width),
        nominal_speed: rr.nominal_speed.unwrap_or(defaults.nominal_speed),
        max_yaw_rate: rr
            .max_yaw_rate
            .map(|d| canonical_angular(d.to_radians()))
            .unwrap_or(defaults.max_yaw_rate),
        sensing_radius: rr.sensing_radius.unwrap_or(defaults.sensing_radius),
        goal_position_tolerance: rr
            .goal_position_tolerance
            .unwrap_or(defaults.goal_position_tolerance),
        goal_yaw_tolerance: rr
            .goal_yaw_tolerance
            .map(|d| canonical_angular(d.to_radians()))
            .unwrap_or(defaults.goal_yaw_tolerance),
        safety_margin: rr.safety_margin.unwrap_or(defaults.safety_margin),
    };

    let start = raw.mission.start.to_pose();
    let waypoints: Vec<Pose2D> = raw.mission.waypoints.iter().map(RawPose::to_pose).collect();
    let mut mission = Mission {
        start,
        waypoints,
        time_budget: 0.0,
    };
    mission.time_budget = raw
        .mission
        .time_budget
        .unwrap_or_else(|| 5.0 * mission.path_length() / robot.nominal_speed);

    let t = TestDefinition {
        name: raw.name,
        robot,
        mission,
        obstacles: raw
            .obstacles
            .iter()
            .map(|o| Obstacle {
                id: o.id.clone(),
                shape: shape_from_raw(&o.shape),
            })
            .collect(),
        rng_seed: raw.rng_seed,
    };
    t.validate()?;
    Ok(t)
}

/// Serialize a test definition with every field explicit.
///
/// parse(serialize(t)) == t whenever t's angles are canonical (which parse
/// and the bundled builders guarantee), and the output is byte-stable
/// across repeated round trips.
pub fn serialize_test_definition(t: &TestDefinition) -> String {
    let raw = RawTestDefinition {
        schema: SCHEMA_VERSION,
        name: t.name.clone(),
        rng_seed: t.rng_seed,
        robot: Some(RawRobotConfig {
            footprint_length: Some(t.robot.footprint_length),
            footprint_width: Some(t.robot.footprint_width),
            nominal_speed: Some(t.robot.nominal_speed),
            max_yaw_rate: Some(t.robot.max_yaw_rate.to_degrees()),
            sensing_radius: Some(t.robot.sensing_radius),
            goal_position_tolerance: Some(t.robot.goal_position_tolerance),
            goal_yaw_tolerance: Some(t.robot.goal_yaw_tolerance.to_degrees()),
            safety_margin: Some(t.robot.safety_margin),
        }),
        mission: RawMission {
            start: RawPose::from_pose(t.mission.start),
            waypoints: t
                .mission
                .waypoints
                .iter()
                .map(|w| RawPose::from_pose(*w))
                .collect(),
            time_budget: Some(t.mission.time_budget),
        },
        obstacles: t
            .obstacles
            .iter()
            .map(|o| RawObstacle {
                id: o.id.clone(),
                shape: shape_to_raw(&o.shape),
            })
            .collect(),
    };
    serde_yaml::to_string(&raw).expect("test definitions always serialize")
}

// ---------------------------------------------------------------------------
// Bundled seeds

fn pose_deg(x: f64, y: f64, yaw_deg: f64) -> Pose2D {
    Pose2D {
        x,
        y,
        yaw: canonical_angle(yaw_deg.to_radians()),
    }
}

fn box_obstacle(id: &str, x: f64, y: f64, yaw_deg: f64, length: f64, width: f64) -> Obstacle {
    Obstacle {
        id: id.into(),
        shape: ObstacleShape::Box(OrientedBox::new(pose_deg(x, y, yaw_deg), length, width)),
    }
}

fn circle_obstacle(id: &str, x: f64, y: f64, diameter: f64) -> Obstacle {
    Obstacle {
        id: id.into(),
        shape: ObstacleShape::Circle(CircleShape::new(Point2::new(x, y), diameter)),
    }
}

/// Wall box whose centerline runs from `a` to `b`.
fn wall_between(id: &str, a: Point2, b: Point2, width: f64) -> Obstacle {
    let length = a.distance_to(b);
    let yaw = canonical_angle((b.y - a.y).atan2(b.x - a.x));
    let center = Pose2D {
        x: (a.x + b.x) / 2.0,
        y: (a.y + b.y) / 2.0,
        yaw,
    };
    Obstacle {
        id: id.into(),
        shape: ObstacleShape::Box(OrientedBox::new(center, length, width)),
    }
}

fn seed(
    name: &str,
    rng_seed: u64,
    start: Pose2D,
    waypoints: Vec<Pose2D>,
    time_budget: f64,
    obstacles: Vec<Obstacle>,
) -> TestDefinition {
    let t = TestDefinition {
        name: name.into(),
        robot: RobotConfig::default(),
        mission: Mission {
            start,
            waypoints,
            time_budget,
        },
        obstacles,
        rng_seed,
    };
    debug_assert!(t.validate().is_ok(), "bundled seed `{name}` is invalid");
    t
}

/// The five bundled obstacle configurations. All share the 10 m mission
/// from (0, 0) to (0, 10); obstacle gaps are face-to-face.
pub fn builtin_seeds() -> Vec<TestDefinition> {
    let north = 90.0;
    let straight = |n: &str, s: u64, obstacles: Vec<Obstacle>| {
        seed(
            n,
            s,
            pose_deg(0.0, 0.0, north),
            vec![pose_deg(0.0, 10.0, north)],
            100.0,
            obstacles,
        )
    };

    let boxes1 = straight(
        "boxes1",
        1,
        vec![
            box_obstacle("box_left", -1.5, 5.0, 0.0, 1.0, 1.0),
            box_obstacle("box_right", 1.5, 5.0, 0.0, 1.0, 1.0),
        ],
    );

    // Right box shifted +1 m along the path relative to boxes1.
    let boxes2 = straight(
        "boxes2",
        2,
        vec![
            box_obstacle("box_left", -1.5, 5.0, 0.0, 1.0, 1.0),
            box_obstacle("box_right", 1.5, 6.0, 0.0, 1.0, 1.0),
        ],
    );

    // Wall centerlines at x = +-1.1, width 0.2: inner faces 2 m apart.
    let corridor = straight(
        "corridor",
        3,
        vec![
            box_obstacle("wall_left", -1.1, 5.0, north, 5.0, 0.2),
            box_obstacle("wall_right", 1.1, 5.0, north, 5.0, 0.2),
        ],
    );

    let cylinders = straight(
        "cylinders",
        4,
        vec![
            circle_obstacle("cyl_left", -1.5, 5.0, 1.0),
            circle_obstacle("cyl_right", 1.5, 5.0, 1.0),
        ],
    );

    // Two 2 m-wide passage legs meeting at (5, 5): northeast from the
    // start, then northwest to the goal. Wall centerlines sit 1.1 m off
    // the leg axes (0.2 m thick walls leave a 2 m passage) and are
    // mitered where they meet; every wall overshoots its leg end by 1 m.
    let f = std::f64::consts::FRAC_1_SQRT_2;
    let off = 1.1;
    let miter = off * std::f64::consts::SQRT_2;
    let elbow = Point2::new(5.0, 5.0);
    let goal = Point2::new(0.0, 10.0);
    // Leg 1 runs along u1 = (f, f) with left normal n1 = (-f, f); leg 2
    // along u2 = (-f, f) with left normal n2 = (-f, -f).
    let inner_corner = Point2::new(elbow.x - miter, elbow.y);
    let outer_corner = Point2::new(elbow.x + miter, elbow.y);
    let inner_start = Point2::new(-off * f - f, off * f - f);
    let inner_end = Point2::new(goal.x - off * f - f, goal.y - off * f + f);
    let outer_start = Point2::new(off * f - f, -off * f - f);
    let outer_end = Point2::new(goal.x + off * f - f, goal.y + off * f + f);
    let l_corridor = seed(
        "l_corridor",
        5,
        pose_deg(0.0, 0.0, 45.0),
        vec![pose_deg(5.0, 5.0, 45.0), pose_deg(0.0, 10.0, 135.0)],
        150.0,
        vec![
            wall_between("wall_inner_a", inner_start, inner_corner, 0.2),
            wall_between("wall_inner_b", inner_corner, inner_end, 0.2),
            wall_between("wall_outer_a", outer_start, outer_corner, 0.2),
            wall_between("wall_outer_b", outer_corner, outer_end, 0.2),
        ],
    );

    vec![boxes1, boxes2, corridor, cylinders, l_corridor]
}

// ---------------------------------------------------------------------------
// Test suites

/// How a suite member came to be: the seed its search started from, the
/// iteration that produced it, its parent member, and the mutation applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: String,
    pub iteration: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub mutation: String,
}

impl Provenance {
    /// Provenance of a seed itself (iteration 0, no parent).
    pub fn seed_entry(seed: &str) -> Self {
        Provenance {
            seed: seed.to_string(),
            iteration: 0,
            parent: None,
            mutation: "seed".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteMemberEntry {
    pub name: String,
    /// Test file path, relative to the suite directory.
    pub file: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteManifest {
    pub schema: u32,
    pub name: String,
    /// Subject the suite was generated against (provenance only; suites
    /// re-execute against any subject).
    pub subject: String,
    pub rng_seed: u64,
    pub members: Vec<SuiteMemberEntry>,
}

/// A suite with its member tests in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    pub name: String,
    pub subject: String,
    pub rng_seed: u64,
    pub members: Vec<SuiteMember>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteMember {
    pub name: String,
    pub test: TestDefinition,
    pub provenance: Provenance,
}

impl TestSuite {
    pub fn manifest(&self) -> SuiteManifest {
        SuiteManifest {
            schema: SCHEMA_VERSION,
            name: self.name.clone(),
            subject: self.subject.clone(),
            rng_seed: self.rng_seed,
            members: self
                .members
                .iter()
                .map(|m| SuiteMemberEntry {
                    name: m.name.clone(),
                    file: format!("tests/{}.yaml", m.name),
                    provenance: m.provenance.clone(),
                })
                .collect(),
        }
    }
}

pub fn parse_suite_manifest(text: &str) -> Result<SuiteManifest, ScenarioError> {
    let m: SuiteManifest =
        serde_yaml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    if m.schema != SCHEMA_VERSION {
        return Err(ScenarioError::Schema(format!(
            "unsupported manifest schema version {} (expected {})",
            m.schema, SCHEMA_VERSION
        )));
    }
    let mut names = std::collections::BTreeSet::new();
    for e in &m.members {
        if !names.insert(e.name.as_str()) {
            return Err(ScenarioError::Validation(format!(
                "duplicate suite member name `{}`",
                e.name
            )));
        }
        if e.file.is_empty() || std::path::Path::new(&e.file).is_absolute() {
            return Err(ScenarioError::Validation(format!(
                "member `{}` file path must be relative and non-empty",
                e.name
            )));
        }
    }
    Ok(m)
}

pub fn serialize_suite_manifest(m: &SuiteManifest) -> String {
    serde_yaml::to_string(m).expect("manifests always serialize")
}

/// Write `manifest.yaml` plus one test file per member under `tests/`.
/// Logs, results, and reports are written by their producers.
pub fn write_suite_dir(dir: &std::path::Path, suite: &TestSuite) -> Result<(), ScenarioError> {
    let manifest = suite.manifest();
    std::fs::create_dir_all(dir.join("tests"))?;
    std::fs::write(
        dir.join("manifest.yaml"),
        serialize_suite_manifest(&manifest),
    )?;
    for (member, entry) in suite.members.iter().zip(&manifest.members) {
        std::fs::write(dir.join(&entry.file), serialize_test_definition(&member.test))?;
    }
    Ok(())
}

/// A suite read back from disk. Member parse failures are kept per member
/// so one corrupted file doesn't sink a rerun.
#[derive(Debug)]
pub struct LoadedSuite {
    pub manifest: SuiteManifest,
    /// Parallel to `manifest.members`.
    pub tests: Vec<Result<TestDefinition, ScenarioError>>,
}

pub fn read_suite_dir(dir: &std::path::Path) -> Result<LoadedSuite, ScenarioError> {
    let manifest_path = dir.join("manifest.yaml");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        ScenarioError::Schema(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest = parse_suite_manifest(&text)?;
    let tests = manifest
        .members
        .iter()
        .map(|entry| {
            let text = std::fs::read_to_string(dir.join(&entry.file))
                .map_err(|e| ScenarioError::Schema(format!("cannot read {}: {e}", entry.file)))?;
            let t = parse_test_definition(&text)?;
            if t.name != entry.name {
                return Err(ScenarioError::Validation(format!(
                    "member file {} defines `{}`, manifest expects `{}`",
                    entry.file, t.name, entry.name
                )));
            }
            Ok(t)
        })
        .collect();
    Ok(LoadedSuite { manifest, tests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::obstacle_gap;

    #[test]
    fn seeds_are_five_named_and_validated() {
        let seeds = builtin_seeds();
        let names: Vec<&str> = seeds.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(
            names,
            ["boxes1", "boxes2", "corridor", "cylinders", "l_corridor"]
        );
        for s in &seeds {
            s.validate().unwrap();
            assert_eq!(s.mission.start.position(), Point2::new(0.0, 0.0));
            assert_eq!(s.mission.goal().position(), Point2::new(0.0, 10.0));
            assert_eq!(s.mission.start.position().distance_to(s.mission.goal().position()), 10.0);
        }
    }

    #[test]
    fn seed_gaps_are_two_meters() {
        let seeds = builtin_seeds();
        let gap = |t: &TestDefinition, a: usize, b: usize| {
            obstacle_gap(&t.obstacles[a].shape, &t.obstacles[b].shape)
        };
        assert_eq!(gap(&seeds[0], 0, 1), 2.0);
        assert_eq!(gap(&seeds[1], 0, 1), 2.0);
        assert!((gap(&seeds[2], 0, 1) - 2.0).abs() < 1e-12);
        assert_eq!(gap(&seeds[3], 0, 1), 2.0);
        // L-corridor passage width, leg 1 inner vs outer wall.
        assert!((gap(&seeds[4], 0, 2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn corridor_parses_back_to_expected_geometry() {
        let seeds = builtin_seeds();
        let text = serialize_test_definition(&seeds[2]);
        let t = parse_test_definition(&text).unwrap();
        assert_eq!(t.mission.start.x, 0.0);
        assert_eq!(t.mission.start.y, 0.0);
        assert_eq!(t.mission.goal().y, 10.0);
        assert_eq!(t.obstacles.len(), 2);
        for o in &t.obstacles {
            match &o.shape {
                ObstacleShape::Box(b) => {
                    assert_eq!(b.length, 5.0);
                    assert_eq!(b.width, 0.2);
                }
                _ => panic!("corridor walls are boxes"),
            }
        }
    }

    #[test]
    fn seeds_round_trip_byte_stable() {
        for s in builtin_seeds() {
            let once = serialize_test_definition(&s);
            let reparsed = parse_test_definition(&once).unwrap();
            assert_eq!(reparsed, s, "field-level round trip for `{}`", s.name);
            let twice = serialize_test_definition(&reparsed);
            assert_eq!(once, twice, "byte-stable round trip for `{}`", s.name);
        }
    }

    #[test]
    fn yaw_pi_round_trips() {
        let mut t = builtin_seeds().remove(0);
        t.mission.waypoints[0].yaw = canonical_angle(std::f64::consts::PI);
        assert_eq!(t.mission.waypoints[0].yaw, std::f64::consts::PI);
        let text = serialize_test_definition(&t);
        let back = parse_test_definition(&text).unwrap();
        assert_eq!(back.mission.waypoints[0].yaw, std::f64::consts::PI);
    }

    #[test]
    fn missing_mission_is_a_schema_error_naming_the_path() {
        let doc = "schema: 1\nname: t\nrng_seed: 0\n";
        let e = parse_test_definition(doc).unwrap_err();
        assert!(matches!(e, ScenarioError::Schema(_)));
        assert!(e.to_string().contains("mission"), "{e}");
    }

    #[test]
    fn unknown_key_is_a_schema_error() {
        let doc = "\
schema: 1
name: t
rng_seed: 0
mision_typo: {}
mission:
  start: {x: 0.0, y: 0.0, yaw: 90.0}
  waypoints: [{x: 0.0, y: 10.0, yaw: 90.0}]
";
        let e = parse_test_definition(doc).unwrap_err();
        assert!(matches!(e, ScenarioError::Schema(_)));
        assert!(e.to_string().contains("mision_typo"), "{e}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let doc = "\
schema: 2
name: t
rng_seed: 0
mission:
  start: {x: 0.0, y: 0.0, yaw: 90.0}
  waypoints: [{x: 0.0, y: 10.0, yaw: 90.0}]
";
        let e = parse_test_definition(doc).unwrap_err();
        assert!(matches!(e, ScenarioError::Schema(_)));
    }

    #[test]
    fn start_inside_obstacle_is_a_validation_error() {
        let doc = "\
schema: 1
name: t
rng_seed: 0
mission:
  start: {x: 0.0, y: 0.0, yaw: 90.0}
  waypoints: [{x: 0.0, y: 10.0, yaw: 90.0}]
obstacles:
  - id: blocker
    shape: !box {center: {x: 0.0, y: 0.0, yaw: 0.0}, length: 2.0, width: 2.0}
";
        let e = parse_test_definition(doc).unwrap_err();
        assert!(matches!(e, ScenarioError::Validation(_)));
        assert!(e.to_string().contains("blocker"), "{e}");
    }

    #[test]
    fn defaults_fill_omitted_robot_and_budget() {
        let doc = "\
schema: 1
name: t
rng_seed: 7
robot:
  nominal_speed: 1.0
mission:
  start: {x: 0.0, y: 0.0, yaw: 90.0}
  waypoints: [{x: 0.0, y: 10.0, yaw: 90.0}]
";
        let t = parse_test_definition(doc).unwrap();
        assert_eq!(t.robot.nominal_speed, 1.0);
        assert_eq!(t.robot.footprint_length, 1.05);
        assert_eq!(t.robot.max_yaw_rate, 1.0);
        // 5x the ideal traversal time of the 10 m path at 1 m/s.
        assert_eq!(t.mission.time_budget, 50.0);
    }

    #[test]
    fn duplicate_obstacle_ids_are_rejected() {
        let doc = "\
schema: 1
name: t
rng_seed: 0
mission:
  start: {x: 0.0, y: 0.0, yaw: 90.0}
  waypoints: [{x: 0.0, y: 10.0, yaw: 90.0}]
obstacles:
  - id: a
    shape: !circle {center: {x: 3.0, y: 3.0}, diameter: 1.0}
  - id: a
    shape: !circle {center: {x: -3.0, y: 3.0}, diameter: 1.0}
";
        let e = parse_test_definition(doc).unwrap_err();
        assert!(matches!(e, ScenarioError::Validation(_)));
        assert!(e.to_string().contains("duplicate"), "{e}");
    }

    #[test]
    fn consecutive_duplicate_waypoints_are_rejected() {
        let doc = "\
schema: 1
name: t
rng_seed: 0
mission:
  start: {x: 0.0, y: 0.0, yaw: 90.0}
  waypoints:
    - {x: 0.0, y: 5.0, yaw: 90.0}
    - {x: 0.0, y: 5.0, yaw: 90.0}
";
        let e = parse_test_definition(doc).unwrap_err();
        assert!(matches!(e, ScenarioError::Validation(_)));
    }

    #[test]
    fn tolerance_must_stay_below_sensing_radius() {
        let doc = "\
schema: 1
name: t
rng_seed: 0
robot:
  sensing_radius: 0.2
mission:
  start: {x: 0.0, y: 0.0, yaw: 90.0}
  waypoints: [{x: 0.0, y: 10.0, yaw: 90.0}]
";
        let e = parse_test_definition(doc).unwrap_err();
        assert!(matches!(e, ScenarioError::Validation(_)));
        assert!(e.to_string().contains("sensing_radius"), "{e}");
    }

    fn tiny_suite() -> TestSuite {
        let seeds = builtin_seeds();
        TestSuite {
            name: "tiny".into(),
            subject: "refnav_a".into(),
            rng_seed: 7,
            members: vec![
                SuiteMember {
                    name: "boxes1_000".into(),
                    test: {
                        let mut t = seeds[0].clone();
                        t.name = "boxes1_000".into();
                        t
                    },
                    provenance: Provenance::seed_entry("boxes1"),
                },
                SuiteMember {
                    name: "boxes1_001".into(),
                    test: {
                        let mut t = seeds[0].clone();
                        t.name = "boxes1_001".into();
                        t
                    },
                    provenance: Provenance {
                        seed: "boxes1".into(),
                        iteration: 1,
                        parent: Some("boxes1_000".into()),
                        mutation: "move_obstacle(box_left, +0.300, +0.000)".into(),
                    },
                },
            ],
        }
    }

    #[test]
    fn suite_dir_round_trips() {
        let suite = tiny_suite();
        let dir = tempfile::tempdir().unwrap();
        write_suite_dir(dir.path(), &suite).unwrap();
        let loaded = read_suite_dir(dir.path()).unwrap();
        assert_eq!(loaded.manifest, suite.manifest());
        for (member, test) in suite.members.iter().zip(&loaded.tests) {
            assert_eq!(test.as_ref().unwrap(), &member.test);
        }
        // Re-serialized manifest is byte-identical.
        let bytes = std::fs::read(dir.path().join("manifest.yaml")).unwrap();
        assert_eq!(bytes, serialize_suite_manifest(&loaded.manifest).into_bytes());
    }

    #[test]
    fn corrupted_member_is_isolated() {
        let suite = tiny_suite();
        let dir = tempfile::tempdir().unwrap();
        write_suite_dir(dir.path(), &suite).unwrap();
        std::fs::write(dir.path().join("tests/boxes1_001.yaml"), "schema: [").unwrap();
        let loaded = read_suite_dir(dir.path()).unwrap();
        assert!(loaded.tests[0].is_ok());
        assert!(loaded.tests[1].is_err());
    }

    #[test]
    fn member_name_must_match_its_file() {
        let suite = tiny_suite();
        let dir = tempfile::tempdir().unwrap();
        write_suite_dir(dir.path(), &suite).unwrap();
        let renamed = serialize_test_definition(&{
            let mut t = suite.members[1].test.clone();
            t.name = "other".into();
            t
        });
        std::fs::write(dir.path().join("tests/boxes1_001.yaml"), renamed).unwrap();
        let loaded = read_suite_dir(dir.path()).unwrap();
        assert!(matches!(
            loaded.tests[1],
            Err(ScenarioError::Validation(_))
        ));
    }

    #[test]
    fn duplicate_member_names_are_rejected() {
        let mut manifest = tiny_suite().manifest();
        manifest.members[1].name = manifest.members[0].name.clone();
        let text = serialize_suite_manifest(&manifest);
        assert!(matches!(
            parse_suite_manifest(&text),
            Err(ScenarioError::Validation(_))
        ));
    }
}
