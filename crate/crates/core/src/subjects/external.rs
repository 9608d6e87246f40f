//! Subprocess-backed subject speaking line-delimited JSON, the hook by
//! which an out-of-tree navigation stack attaches without code changes.
//!
//! One `reset` message per test, then one `plan` request per tick; every
//! message is a single JSON line on the child's standard streams. Angles
//! cross this boundary in radians. Protocol failures (exit, EOF, bad
//! JSON, non-finite command) surface as SubjectError and classify the
//! test as Error.

use super::{Planner, SensorSnapshot, SubjectError, VelocityCommand};
use crate::geometry::{ObstacleShape, Pose2D};
use crate::scenario::{RobotConfig, TestDefinition};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

pub struct ExternalSubject {
    cmd: String,
    args: Vec<String>,
    child: Option<Child>,
    to_child: Option<ChildStdin>,
    from_child: Option<BufReader<ChildStdout>>,
}

#[derive(Serialize)]
struct WireRobot {
    footprint_length: f64,
    footprint_width: f64,
    nominal_speed: f64,
    max_yaw_rate: f64,
    sensing_radius: f64,
    goal_position_tolerance: f64,
    goal_yaw_tolerance: f64,
    safety_margin: f64,
}

impl WireRobot {
    fn from_config(c: &RobotConfig) -> Self {
        Self {
            footprint_length: c.footprint_length,
            footprint_width: c.footprint_width,
            nominal_speed: c.nominal_speed,
            max_yaw_rate: c.max_yaw_rate,
            sensing_radius: c.sensing_radius,
            goal_position_tolerance: c.goal_position_tolerance,
            goal_yaw_tolerance: c.goal_yaw_tolerance,
            safety_margin: c.safety_margin,
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum WireRequest<'a> {
    Reset {
        name: &'a str,
        rng_seed: u64,
        robot: WireRobot,
        start: Pose2D,
        waypoints: &'a [Pose2D],
        time_budget: f64,
    },
    Plan {
        t: f64,
        robot_pose: Pose2D,
        current_waypoint: Pose2D,
        visible_obstacles: &'a [ObstacleShape],
    },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum WireResponse {
    Ready {},
    Command { vx: f64, vy: f64, wyaw: f64 },
}

impl ExternalSubject {
    pub fn from_params(params: &BTreeMap<String, String>) -> Result<Self, SubjectError> {
        let cmd = params
            .get("cmd")
            .ok_or_else(|| SubjectError::Failed("external subject requires a `cmd` parameter".into()))?
            .clone();
        let args = params
            .get("args")
            .map(|a| a.split_whitespace().map(str::to_string).collect())
            .unwrap_or_default();
        Ok(Self {
            cmd,
            args,
            child: None,
            to_child: None,
            from_child: None,
        })
    }

    fn ensure_spawned(&mut self) -> Result<(), SubjectError> {
        if self.child.is_some() {
            return Ok(());
        }
        let mut child = Command::new(&self.cmd)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| SubjectError::Failed(format!("spawning `{}`: {e}", self.cmd)))?;
        self.to_child = child.stdin.take();
        self.from_child = child.stdout.take().map(BufReader::new);
        self.child = Some(child);
        Ok(())
    }

    fn exchange(&mut self, request: &WireRequest) -> Result<WireResponse, SubjectError> {
        let fail = |what: String| SubjectError::Failed(what);
        let line = serde_json::to_string(request).expect("protocol requests always serialize");
        let stdin = self
            .to_child
            .as_mut()
            .ok_or_else(|| fail("subject process has no stdin".into()))?;
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush())
            .map_err(|e| fail(format!("writing to subject: {e}")))?;
        let stdout = self
            .from_child
            .as_mut()
            .ok_or_else(|| fail("subject process has no stdout".into()))?;
        let mut reply = String::new();
        let n = stdout
            .read_line(&mut reply)
            .map_err(|e| fail(format!("reading from subject: {e}")))?;
        if n == 0 {
            return Err(fail("subject closed its stdout".into()));
        }
        serde_json::from_str(reply.trim())
            .map_err(|e| fail(format!("bad response from subject: {e}: {}", reply.trim())))
    }
}

impl Planner for ExternalSubject {
    fn reset(&mut self, test: &TestDefinition) -> Result<(), SubjectError> {
        self.ensure_spawned()?;
        let response = self.exchange(&WireRequest::Reset {
            name: &test.name,
            rng_seed: test.rng_seed,
            robot: WireRobot::from_config(&test.robot),
            start: test.mission.start,
            waypoints: &test.mission.waypoints,
            time_budget: test.mission.time_budget,
        })?;
        match response {
            WireResponse::Ready {} => Ok(()),
            WireResponse::Command { .. } => Err(SubjectError::Failed(
                "subject answered reset with a command".into(),
            )),
        }
    }

    fn plan_step(
        &mut self,
        snapshot: &SensorSnapshot,
        _config: &RobotConfig,
    ) -> Result<VelocityCommand, SubjectError> {
        let response = self.exchange(&WireRequest::Plan {
            t: snapshot.t,
            robot_pose: snapshot.robot_pose,
            current_waypoint: snapshot.current_waypoint,
            visible_obstacles: &snapshot.visible_obstacles,
        })?;
        match response {
            WireResponse::Command { vx, vy, wyaw } => {
                let cmd = VelocityCommand { vx, vy, wyaw };
                if !cmd.is_finite() {
                    return Err(SubjectError::Failed(format!(
                        "subject sent a non-finite command: {cmd:?}"
                    )));
                }
                Ok(cmd)
            }
            WireResponse::Ready {} => Err(SubjectError::Failed(
                "subject answered plan with ready".into(),
            )),
        }
    }
}

impl Drop for ExternalSubject {
    fn drop(&mut self) {
        self.to_child = None; // closing stdin lets a well-behaved child exit
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
