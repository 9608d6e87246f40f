//! RefNav-B: an occupancy-grid shortest-path replanner with pure-pursuit
//! tracking.
//!
//! The stronger subject. Every second of simulated time it rebuilds a
//! 0.1 m occupancy grid from the obstacles currently in view, inflates
//! them by half the footprint diagonal plus the safety margin plus a
//! fixed clearance, plans a shortest 8-connected path to the current
//! waypoint, and follows that path with a fixed-lookahead tracker.

use super::{param_f64, Planner, SensorSnapshot, SubjectError, VelocityCommand};
use crate::geometry::{normalize_angle, point_shape_distance, ObstacleShape, Point2};
use crate::scenario::{RobotConfig, TestDefinition};
use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::collections::BinaryHeap;

pub struct RefNavB {
    cell_size: f64,
    replan_interval: f64,
    lookahead: f64,
    k_yaw: f64,
    /// Extra inflation beyond footprint half-diagonal + safety margin.
    clearance: f64,
    /// Grid bounds padding around the mission and visible obstacles.
    pad: f64,
    // State within one test.
    mission_lo: Point2,
    mission_hi: Point2,
    path: Vec<Point2>,
    last_plan_t: f64,
    planned_wp: Option<(u64, u64)>,
}

struct Grid {
    origin: Point2,
    nx: usize,
    ny: usize,
    cell: f64,
    blocked: Vec<bool>,
}

impl Grid {
    fn index_of(&self, p: Point2) -> Option<usize> {
        let ix = ((p.x - self.origin.x) / self.cell).floor();
        let iy = ((p.y - self.origin.y) / self.cell).floor();
        if ix < 0.0 || iy < 0.0 || ix >= self.nx as f64 || iy >= self.ny as f64 {
            return None;
        }
        Some(iy as usize * self.nx + ix as usize)
    }

    fn center(&self, id: usize) -> Point2 {
        let ix = id % self.nx;
        let iy = id / self.nx;
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell,
            self.origin.y + (iy as f64 + 0.5) * self.cell,
        )
    }

    /// Nearest free cell to `id`, scanning rings outward in a fixed order.
    fn nearest_free(&self, id: usize) -> Option<usize> {
        if !self.blocked[id] {
            return Some(id);
        }
        let (cx, cy) = ((id % self.nx) as i64, (id / self.nx) as i64);
        let max_r = self.nx.max(self.ny) as i64;
        for r in 1..=max_r {
            let mut best: Option<(i64, usize)> = None;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs().max(dy.abs()) != r {
                        continue;
                    }
                    let (x, y) = (cx + dx, cy + dy);
                    if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
                        continue;
                    }
                    let cand = y as usize * self.nx + x as usize;
                    if !self.blocked[cand] {
                        let d2 = dx * dx + dy * dy;
                        if best.is_none_or(|(bd2, bid)| d2 < bd2 || (d2 == bd2 && cand < bid)) {
                            best = Some((d2, cand));
                        }
                    }
                }
            }
            if let Some((_, cand)) = best {
                return Some(cand);
            }
        }
        None
    }
}

impl RefNavB {
    pub fn from_params(params: &BTreeMap<String, String>) -> Result<Self, SubjectError> {
        Ok(Self {
            cell_size: param_f64(params, "cell_size", 0.1)?,
            replan_interval: param_f64(params, "replan_interval", 1.0)?,
            lookahead: param_f64(params, "lookahead", 0.6)?,
            k_yaw: param_f64(params, "k_yaw", 2.0)?,
            clearance: param_f64(params, "clearance", 0.1)?,
            pad: param_f64(params, "pad", 3.0)?,
            mission_lo: Point2::new(0.0, 0.0),
            mission_hi: Point2::new(0.0, 0.0),
            path: Vec::new(),
            last_plan_t: f64::NEG_INFINITY,
            planned_wp: None,
        })
    }

    fn inflation(&self, config: &RobotConfig) -> f64 {
        let half_diag =
            (config.footprint_length.powi(2) + config.footprint_width.powi(2)).sqrt() / 2.0;
        half_diag + config.safety_margin + self.clearance
    }

    /// True when the segment keeps `inflate` clearance from every
    /// obstacle, sampled at half-cell spacing.
    fn line_clear(&self, a: Point2, b: Point2, obstacles: &[ObstacleShape], inflate: f64) -> bool {
        let d = a.distance_to(b);
        let steps = (d / (self.cell_size / 2.0)).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let p = Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
            for s in obstacles {
                if point_shape_distance(p, s) <= inflate {
                    return false;
                }
            }
        }
        true
    }

    fn build_grid(
        &self,
        here: Point2,
        waypoint: Point2,
        obstacles: &[ObstacleShape],
        config: &RobotConfig,
    ) -> Grid {
        let mut lo = Point2::new(
            self.mission_lo.x.min(here.x).min(waypoint.x),
            self.mission_lo.y.min(here.y).min(waypoint.y),
        );
        let mut hi = Point2::new(
            self.mission_hi.x.max(here.x).max(waypoint.x),
            self.mission_hi.y.max(here.y).max(waypoint.y),
        );
        for s in obstacles {
            let (slo, shi) = s.aabb();
            lo.x = lo.x.min(slo.x);
            lo.y = lo.y.min(slo.y);
            hi.x = hi.x.max(shi.x);
            hi.y = hi.y.max(shi.y);
        }
        lo.x -= self.pad;
        lo.y -= self.pad;
        hi.x += self.pad;
        hi.y += self.pad;
        // Anchor cell edges to world-origin multiples so the lattice is
        // stable across replans.
        let ox = (lo.x / self.cell_size).floor() * self.cell_size;
        let oy = (lo.y / self.cell_size).floor() * self.cell_size;
        let nx = ((hi.x - ox) / self.cell_size).ceil() as usize + 1;
        let ny = ((hi.y - oy) / self.cell_size).ceil() as usize + 1;

        let inflate = self.inflation(config);
        let mut blocked = vec![false; nx * ny];
        for s in obstacles {
            let (slo, shi) = s.aabb();
            let x0 = (((slo.x - inflate - ox) / self.cell_size).floor().max(0.0)) as usize;
            let y0 = (((slo.y - inflate - oy) / self.cell_size).floor().max(0.0)) as usize;
            let x1 = ((((shi.x + inflate - ox) / self.cell_size).ceil()) as usize).min(nx - 1);
            let y1 = ((((shi.y + inflate - oy) / self.cell_size).ceil()) as usize).min(ny - 1);
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    let id = iy * nx + ix;
                    if blocked[id] {
                        continue;
                    }
                    let c = Point2::new(
                        ox + (ix as f64 + 0.5) * self.cell_size,
                        oy + (iy as f64 + 0.5) * self.cell_size,
                    );
                    if point_shape_distance(c, s) <= inflate {
                        blocked[id] = true;
                    }
                }
            }
        }
        Grid {
            origin: Point2::new(ox, oy),
            nx,
            ny,
            cell: self.cell_size,
            blocked,
        }
    }

    /// A* over the 8-connected grid, 10/14 integer costs, octile
    /// heuristic, ties broken on (f, h, cell id). Diagonal moves require
    /// both orthogonal neighbors free.
    fn shortest_path(grid: &Grid, from: usize, to: usize) -> Option<Vec<usize>> {
        let nx = grid.nx as i64;
        let ny = grid.ny as i64;
        let h = |id: usize| -> u32 {
            let dx = ((id % grid.nx) as i64 - (to % grid.nx) as i64).unsigned_abs() as u32;
            let dy = ((id / grid.nx) as i64 - (to / grid.nx) as i64).unsigned_abs() as u32;
            let (lo, hi) = (dx.min(dy), dx.max(dy));
            14 * lo + 10 * (hi - lo)
        };
        let mut g = vec![u32::MAX; grid.blocked.len()];
        let mut came = vec![usize::MAX; grid.blocked.len()];
        let mut closed = vec![false; grid.blocked.len()];
        let mut open = BinaryHeap::new();
        g[from] = 0;
        open.push(Reverse((h(from), h(from), from)));
        while let Some(Reverse((_, _, cur))) = open.pop() {
            if closed[cur] {
                continue;
            }
            closed[cur] = true;
            if cur == to {
                let mut path = vec![cur];
                let mut p = cur;
                while came[p] != usize::MAX {
                    p = came[p];
                    path.push(p);
                }
                path.reverse();
                return Some(path);
            }
            let (cx, cy) = ((cur % grid.nx) as i64, (cur / grid.nx) as i64);
            for (dx, dy, step) in [
                (1i64, 0i64, 10u32),
                (-1, 0, 10),
                (0, 1, 10),
                (0, -1, 10),
                (1, 1, 14),
                (1, -1, 14),
                (-1, 1, 14),
                (-1, -1, 14),
            ] {
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= nx || y >= ny {
                    continue;
                }
                let nb = y as usize * grid.nx + x as usize;
                if grid.blocked[nb] || closed[nb] {
                    continue;
                }
                if step == 14 {
                    let side_a = cy * nx + x;
                    let side_b = y * nx + cx;
                    if grid.blocked[side_a as usize] || grid.blocked[side_b as usize] {
                        continue;
                    }
                }
                let cand = g[cur].saturating_add(step);
                if cand < g[nb] {
                    g[nb] = cand;
                    came[nb] = cur;
                    open.push(Reverse((cand + h(nb), h(nb), nb)));
                }
            }
        }
        None
    }

    fn replan(&mut self, snapshot: &SensorSnapshot, config: &RobotConfig) {
        let here = snapshot.robot_pose.position();
        let wp = snapshot.current_waypoint.position();
        let grid = self.build_grid(here, wp, &snapshot.visible_obstacles, config);
        self.path.clear();
        self.last_plan_t = snapshot.t;
        self.planned_wp = Some((wp.x.to_bits(), wp.y.to_bits()));

        let (Some(start_raw), Some(goal_raw)) = (grid.index_of(here), grid.index_of(wp)) else {
            return;
        };
        let (Some(start), Some(goal)) = (grid.nearest_free(start_raw), grid.nearest_free(goal_raw))
        else {
            return;
        };
        let Some(cells) = Self::shortest_path(&grid, start, goal) else {
            return;
        };
        self.path = cells.into_iter().map(|id| grid.center(id)).collect();
        self.path.push(wp);
    }

    /// First path point at least `lookahead` from the robot, walking
    /// forward from the nearest path vertex.
    fn pursuit_target(&self, here: Point2) -> Point2 {
        let nearest = self
            .path
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| {
                a.distance_to(here)
                    .partial_cmp(&b.distance_to(here))
                    .unwrap()
                    .then(i.cmp(j))
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        for p in &self.path[nearest..] {
            if p.distance_to(here) >= self.lookahead {
                return *p;
            }
        }
        *self.path.last().expect("pursuit called with a path")
    }
}

impl Planner for RefNavB {
    fn reset(&mut self, test: &TestDefinition) -> Result<(), SubjectError> {
        let mut lo = test.mission.start.position();
        let mut hi = lo;
        for w in &test.mission.waypoints {
            lo.x = lo.x.min(w.x);
            lo.y = lo.y.min(w.y);
            hi.x = hi.x.max(w.x);
            hi.y = hi.y.max(w.y);
        }
        self.mission_lo = lo;
        self.mission_hi = hi;
        self.path.clear();
        self.last_plan_t = f64::NEG_INFINITY;
        self.planned_wp = None;
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
        let d_wp = here.distance_to(wp.position());

        if d_wp <= config.goal_position_tolerance {
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

        // With line of sight to the waypoint, skip the grid and head
        // straight for it; this also keeps open-field motion exact.
        let direct = self.line_clear(
            here,
            wp.position(),
            &snapshot.visible_obstacles,
            self.inflation(config),
        );
        if !direct {
            let wp_bits = (wp.x.to_bits(), wp.y.to_bits());
            if snapshot.t - self.last_plan_t >= self.replan_interval - 1e-9
                || self.planned_wp != Some(wp_bits)
                || self.path.is_empty()
            {
                self.replan(snapshot, config);
            }
            if self.path.is_empty() {
                // No route through the inflated grid: hold still.
                return Ok(VelocityCommand::ZERO);
            }
        }

        let target = if direct {
            wp.position()
        } else {
            self.pursuit_target(here)
        };
        let (dx, dy) = (target.x - here.x, target.y - here.y);
        let dist = (dx * dx + dy * dy).sqrt();
        if dist < 1e-9 {
            return Ok(VelocityCommand::ZERO);
        }
        // Slow down on final approach to the waypoint.
        let speed = config.nominal_speed * (d_wp / 0.5).min(1.0);
        let (s, c) = pose.yaw.sin_cos();
        let vx = (dx * c + dy * s) / dist * speed;
        let vy = (-dx * s + dy * c) / dist * speed;
        let heading_err = normalize_angle(dy.atan2(dx) - pose.yaw);
        Ok(VelocityCommand {
            vx,
            vy,
            wyaw: self.k_yaw * heading_err,
        })
    }
}
