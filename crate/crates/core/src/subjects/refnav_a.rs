//! RefNav-A: a memoryless attractive-repulsive potential-field planner.
//!
//! The deliberately weaker subject. It steers toward the current waypoint
//! and away from every obstacle within its influence radius, with no
//! replanning and no memory, so it stalls in local minima and oscillates
//! laterally in narrow gaps.

use super::{param_f64, Planner, SensorSnapshot, SubjectError, VelocityCommand};
use crate::geometry::{closest_point_on_shape, normalize_angle, point_shape_distance, Point2};
use crate::scenario::{RobotConfig, TestDefinition};
use std::collections::BTreeMap;

pub struct RefNavA {
    /// Attraction gain toward the waypoint.
    k_attract: f64,
    /// Repulsion gain away from obstacles.
    k_repulse: f64,
    /// Obstacles farther than this exert no force, meters.
    influence: f64,
    /// Proportional gain steering the heading into the motion direction.
    k_yaw: f64,
}

impl RefNavA {
    pub fn from_params(params: &BTreeMap<String, String>) -> Result<Self, SubjectError> {
        Ok(Self {
            k_attract: param_f64(params, "k_attract", 1.0)?,
            k_repulse: param_f64(params, "k_repulse", 0.3)?,
            influence: param_f64(params, "influence", 1.5)?,
            k_yaw: param_f64(params, "k_yaw", 2.0)?,
        })
    }
}

impl Planner for RefNavA {
    fn reset(&mut self, _test: &TestDefinition) -> Result<(), SubjectError> {
        Ok(())
    }

    fn plan_step(
        &mut self,
        snapshot: &SensorSnapshot,
        config: &RobotConfig,
    ) -> Result<VelocityCommand, SubjectError> {
        let pose = snapshot.robot_pose;
        let here = pose.position();
        let wp = snapshot.current_waypoint;
        let to_wp = Point2::new(wp.x - here.x, wp.y - here.y);
        let d_wp = (to_wp.x * to_wp.x + to_wp.y * to_wp.y).sqrt();

        if d_wp <= config.goal_position_tolerance {
            // Only the final alignment remains.
            let yaw_err = normalize_angle(wp.yaw - pose.yaw);
            if yaw_err.abs() <= config.goal_yaw_tolerance {
                return Ok(VelocityCommand::ZERO);
            }
            return Ok(VelocityCommand {
                vx: 0.0,
                vy: 0.0,
                wyaw: self.k_yaw * yaw_err,
            });
        }

        let mut fx = self.k_attract * to_wp.x / d_wp;
        let mut fy = self.k_attract * to_wp.y / d_wp;
        for shape in &snapshot.visible_obstacles {
            let d = point_shape_distance(here, shape);
            if d >= self.influence {
                continue;
            }
            let near = closest_point_on_shape(here, shape);
            let (mut ax, mut ay) = (here.x - near.x, here.y - near.y);
            let len = (ax * ax + ay * ay).sqrt();
            if len > 1e-12 {
                ax /= len;
                ay /= len;
            } else {
                // Center swallowed by the shape: push away from its middle.
                let (lo, hi) = shape.aabb();
                let cx = (lo.x + hi.x) / 2.0;
                let cy = (lo.y + hi.y) / 2.0;
                let l = ((here.x - cx).powi(2) + (here.y - cy).powi(2)).sqrt();
                if l > 1e-12 {
                    ax = (here.x - cx) / l;
                    ay = (here.y - cy) / l;
                } else {
                    ax = 1.0;
                    ay = 0.0;
                }
            }
            let d_eff = d.max(0.05);
            let mag = self.k_repulse * (1.0 / d_eff - 1.0 / self.influence) / d_eff;
            fx += mag * ax;
            fy += mag * ay;
        }

        let f_norm = (fx * fx + fy * fy).sqrt();
        if f_norm < 1e-6 {
            // Local minimum: the field gives no direction. Freeze (and let
            // the mission time out) rather than invent one.
            return Ok(VelocityCommand::ZERO);
        }
        let speed = config.nominal_speed * f_norm.min(1.0);
        let (s, c) = pose.yaw.sin_cos();
        let vx = (fx * c + fy * s) / f_norm * speed;
        let vy = (-fx * s + fy * c) / f_norm * speed;
        let heading_err = normalize_angle(fy.atan2(fx) - pose.yaw);
        Ok(VelocityCommand {
            vx,
            vy,
            wyaw: self.k_yaw * heading_err,
        })
    }
}
