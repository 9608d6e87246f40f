//! Deterministic fixed-step kinematic simulation of one test against one
//! subject, with the collision-safety layer, producing a trajectory log.
//!
//! Time advances in exact dt = 0.05 s ticks (tick i is at (i*5)/100
//! seconds, computed exactly, never accumulated). Each tick: recompute
//! clearance, consume reached waypoints, check terminal conditions, ask
//! the subject for a command, clamp it, run the safety check, then record
//! a sample and integrate. Samples record the clamped command the subject
//! issued at that tick; on a safety halt the run ends with the vetoed
//! command in the final sample, and other terminal samples carry a zero
//! command. The result is a pure function of (test, subject kind, subject
//! parameters) and is bit-identical across runs and machines.

use crate::geometry::{box_shape_distance, normalize_angle, ObstacleShape, OrientedBox, Pose2D};
use crate::scenario::{RobotConfig, TestDefinition};
use crate::subjects::{Planner, SensorSnapshot, VelocityCommand};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

/// Simulation step, seconds.
pub const DT: f64 = 0.05;
/// Safety-layer prediction horizon, seconds.
pub const SAFETY_LOOKAHEAD: f64 = 1.0;
pub const LOG_SCHEMA_VERSION: u32 = 1;

/// Exact time of tick `i` (dt multiples without accumulation error).
fn tick_time(i: u64) -> f64 {
    (i * 5) as f64 / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SafetyStop,
    Collision,
    WaypointReached,
    GoalReached,
    Timeout,
    SubjectError,
}

impl EventKind {
    pub fn is_terminal(self) -> bool {
        !matches!(self, EventKind::WaypointReached)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSample {
    pub t: f64,
    pub pose: Pose2D,
    pub command: VelocityCommand,
    /// Footprint clearance to the nearest obstacle; +inf with no
    /// obstacles (serialized as null).
    pub min_obstacle_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEvent {
    pub t: f64,
    pub kind: EventKind,
}

/// Execution record of one simulated test.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub test_name: String,
    pub subject_id: String,
    pub dt: f64,
    pub samples: Vec<LogSample>,
    pub events: Vec<LogEvent>,
}

impl TrajectoryLog {
    /// The event that ended the run (the last event, by construction).
    pub fn terminal_event(&self) -> Option<LogEvent> {
        self.events.last().copied()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SafetyLayerState {
    /// Prediction horizon, seconds (> 0).
    pub lookahead: f64,
    /// Minimum tolerated predicted clearance, meters.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyDecision {
    Proceed,
    Halt,
}

/// One Euler step: body-frame velocities rotated by yaw.
pub fn integrate(pose: Pose2D, cmd: VelocityCommand, dt: f64) -> Pose2D {
    let (s, c) = pose.yaw.sin_cos();
    Pose2D::new(
        pose.x + (cmd.vx * c - cmd.vy * s) * dt,
        pose.y + (cmd.vx * s + cmd.vy * c) * dt,
        pose.yaw + cmd.wyaw * dt,
    )
}

/// Minimum footprint clearance over the propagated constant-command
/// trajectory, sampled every `step` seconds over `lookahead` seconds.
/// Exposed so tests can compare against a finer-grained propagation.
pub fn propagated_min_distance(
    pose: Pose2D,
    cmd: VelocityCommand,
    obstacles: &[ObstacleShape],
    lookahead: f64,
    step: f64,
    footprint_length: f64,
    footprint_width: f64,
) -> f64 {
    let n = (lookahead / step).round().max(1.0) as usize;
    let mut p = pose;
    let mut min = f64::INFINITY;
    for _ in 0..n {
        p = integrate(p, cmd, step);
        let fp = OrientedBox::new(p, footprint_length, footprint_width);
        for s in obstacles {
            min = min.min(box_shape_distance(&fp, s));
        }
    }
    min
}

/// Predictive collision gate: Halt iff the footprint, propagated along
/// the command for the lookahead horizon (sampled every dt), comes within
/// `margin` of any obstacle. A zero command predicts no motion and always
/// proceeds.
pub fn safety_check(
    pose: Pose2D,
    cmd: VelocityCommand,
    obstacles: &[ObstacleShape],
    state: &SafetyLayerState,
    footprint_length: f64,
    footprint_width: f64,
) -> SafetyDecision {
    if cmd.is_zero() || obstacles.is_empty() {
        return SafetyDecision::Proceed;
    }
    let min = propagated_min_distance(
        pose,
        cmd,
        obstacles,
        state.lookahead,
        DT,
        footprint_length,
        footprint_width,
    );
    if min <= state.margin {
        SafetyDecision::Halt
    } else {
        SafetyDecision::Proceed
    }
}

fn scene_min_distance(config: &RobotConfig, pose: Pose2D, obstacles: &[ObstacleShape]) -> f64 {
    let fp = config.footprint_at(pose);
    obstacles
        .iter()
        .map(|s| box_shape_distance(&fp, s))
        .fold(f64::INFINITY, f64::min)
}

/// Simulate one test to its terminal event.
///
/// Never fails for a valid test: planner failures become a SubjectError
/// terminal event in the log.
pub fn run_test(t: &TestDefinition, subject: &mut dyn Planner, subject_id: &str) -> TrajectoryLog {
    let config = &t.robot;
    let shapes: Vec<ObstacleShape> = t.obstacles.iter().map(|o| o.shape).collect();
    let safety = SafetyLayerState {
        lookahead: SAFETY_LOOKAHEAD,
        margin: config.safety_margin,
    };
    let last_wp = t.mission.waypoints.len() - 1;
    let goal = t.mission.waypoints[last_wp];

    let mut samples: Vec<LogSample> = Vec::new();
    let mut events: Vec<LogEvent> = Vec::new();
    let mut pose = t.mission.start;
    let mut wp_index = 0usize;

    let terminate =
        |samples: &mut Vec<LogSample>, events: &mut Vec<LogEvent>, t, pose, cmd, dist, kind| {
            samples.push(LogSample {
                t,
                pose,
                command: cmd,
                min_obstacle_distance: dist,
            });
            events.push(LogEvent { t, kind });
        };

    if subject.reset(t).is_err() {
        let dist = scene_min_distance(config, pose, &shapes);
        terminate(
            &mut samples,
            &mut events,
            0.0,
            pose,
            VelocityCommand::ZERO,
            dist,
            EventKind::SubjectError,
        );
    } else {
        let mut tick: u64 = 0;
        loop {
            let now = tick_time(tick);
            let min_dist = scene_min_distance(config, pose, &shapes);

            while wp_index < last_wp
                && pose
                    .position()
                    .distance_to(t.mission.waypoints[wp_index].position())
                    <= config.goal_position_tolerance
            {
                events.push(LogEvent {
                    t: now,
                    kind: EventKind::WaypointReached,
                });
                wp_index += 1;
            }

            if min_dist == 0.0 {
                terminate(
                    &mut samples,
                    &mut events,
                    now,
                    pose,
                    VelocityCommand::ZERO,
                    min_dist,
                    EventKind::Collision,
                );
                break;
            }
            if wp_index == last_wp
                && pose.position().distance_to(goal.position()) <= config.goal_position_tolerance
                && normalize_angle(pose.yaw - goal.yaw).abs() <= config.goal_yaw_tolerance
            {
                terminate(
                    &mut samples,
                    &mut events,
                    now,
                    pose,
                    VelocityCommand::ZERO,
                    min_dist,
                    EventKind::GoalReached,
                );
                break;
            }
            if now >= t.mission.time_budget {
                terminate(
                    &mut samples,
                    &mut events,
                    now,
                    pose,
                    VelocityCommand::ZERO,
                    min_dist,
                    EventKind::Timeout,
                );
                break;
            }

            let snapshot = SensorSnapshot {
                t: now,
                robot_pose: pose,
                current_waypoint: t.mission.waypoints[wp_index],
                visible_obstacles: t
                    .obstacles
                    .iter()
                    .map(|o| o.shape)
                    .filter(|s| {
                        crate::geometry::point_shape_distance(pose.position(), s)
                            <= config.sensing_radius
                    })
                    .collect(),
            };
            let cmd = match subject.plan_step(&snapshot, config) {
                Ok(c) if c.is_finite() => c.clamped(config),
                _ => {
                    terminate(
                        &mut samples,
                        &mut events,
                        now,
                        pose,
                        VelocityCommand::ZERO,
                        min_dist,
                        EventKind::SubjectError,
                    );
                    break;
                }
            };

            if safety_check(
                pose,
                cmd,
                &shapes,
                &safety,
                config.footprint_length,
                config.footprint_width,
            ) == SafetyDecision::Halt
            {
                terminate(
                    &mut samples,
                    &mut events,
                    now,
                    pose,
                    cmd,
                    min_dist,
                    EventKind::SafetyStop,
                );
                break;
            }

            samples.push(LogSample {
                t: now,
                pose,
                command: cmd,
                min_obstacle_distance: min_dist,
            });
            pose = integrate(pose, cmd, DT);
            tick += 1;
        }
    }

    TrajectoryLog {
        test_name: t.name.clone(),
        subject_id: subject_id.to_string(),
        dt: DT,
        samples,
        events,
    }
}

// ---------------------------------------------------------------------------
// Log file format: newline-delimited JSON

#[derive(Debug, Error)]
pub enum LogFormatError {
    #[error("log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("log line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("log schema version {found} unsupported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("log truncated: {0}")]
    Truncated(String),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogRecord {
    Header {
        schema: u32,
        test_name: String,
        subject_id: String,
        dt: f64,
    },
    Sample {
        t: f64,
        pose: Pose2D,
        command: VelocityCommand,
        /// None encodes +inf (no obstacles in the scenario).
        min_obstacle_distance: Option<f64>,
    },
    Event {
        t: f64,
        kind: EventKind,
    },
    /// Trailer with record counts, so clean truncation is detectable.
    End {
        samples: usize,
        events: usize,
    },
}

/// Write the log as newline-delimited JSON records: header, samples,
/// events, end trailer.
pub fn write_log(log: &TrajectoryLog, out: &mut impl Write) -> std::io::Result<()> {
    let mut emit = |r: &LogRecord| -> std::io::Result<()> {
        let line = serde_json::to_string(r).expect("log records always serialize");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")
    };
    emit(&LogRecord::Header {
        schema: LOG_SCHEMA_VERSION,
        test_name: log.test_name.clone(),
        subject_id: log.subject_id.clone(),
        dt: log.dt,
    })?;
    for s in &log.samples {
        emit(&LogRecord::Sample {
            t: s.t,
            pose: s.pose,
            command: s.command,
            min_obstacle_distance: s.min_obstacle_distance.is_finite().then_some(s.min_obstacle_distance),
        })?;
    }
    for e in &log.events {
        emit(&LogRecord::Event { t: e.t, kind: e.kind })?;
    }
    emit(&LogRecord::End {
        samples: log.samples.len(),
        events: log.events.len(),
    })
}

pub fn write_log_file(log: &TrajectoryLog, path: &Path) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_log(log, &mut out)?;
    out.flush()
}

/// Read a log written by [`write_log`], verifying the header version and
/// the end-trailer record counts.
pub fn read_log(input: &mut impl BufRead) -> Result<TrajectoryLog, LogFormatError> {
    let mut log: Option<TrajectoryLog> = None;
    let mut ended = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if ended {
            return Err(LogFormatError::Malformed {
                line: i + 1,
                message: "content after end record".into(),
            });
        }
        let record: LogRecord =
            serde_json::from_str(&line).map_err(|e| LogFormatError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
        match (record, log.as_mut()) {
            (
                LogRecord::Header {
                    schema,
                    test_name,
                    subject_id,
                    dt,
                },
                None,
            ) => {
                if schema != LOG_SCHEMA_VERSION {
                    return Err(LogFormatError::Version {
                        found: schema,
                        expected: LOG_SCHEMA_VERSION,
                    });
                }
                log = Some(TrajectoryLog {
                    test_name,
                    subject_id,
                    dt,
                    samples: Vec::new(),
                    events: Vec::new(),
                });
            }
            (LogRecord::Header { .. }, Some(_)) => {
                return Err(LogFormatError::Malformed {
                    line: i + 1,
                    message: "duplicate header".into(),
                });
            }
            (_, None) => {
                return Err(LogFormatError::Malformed {
                    line: i + 1,
                    message: "first record must be the header".into(),
                });
            }
            (
                LogRecord::Sample {
                    t,
                    pose,
                    command,
                    min_obstacle_distance,
                },
                Some(l),
            ) => l.samples.push(LogSample {
                t,
                pose,
                command,
                min_obstacle_distance: min_obstacle_distance.unwrap_or(f64::INFINITY),
            }),
            (LogRecord::Event { t, kind }, Some(l)) => l.events.push(LogEvent { t, kind }),
            (LogRecord::End { samples, events }, Some(l)) => {
                if samples != l.samples.len() || events != l.events.len() {
                    return Err(LogFormatError::Truncated(format!(
                        "end record expects {samples} samples / {events} events, found {} / {}",
                        l.samples.len(),
                        l.events.len()
                    )));
                }
                ended = true;
            }
        }
    }
    let Some(log) = log else {
        return Err(LogFormatError::Truncated("empty log".into()));
    };
    if !ended {
        return Err(LogFormatError::Truncated("missing end record".into()));
    }
    Ok(log)
}

pub fn read_log_file(path: &Path) -> Result<TrajectoryLog, LogFormatError> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    read_log(&mut input)
}
