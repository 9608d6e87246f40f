//! Evolve a seed test into a challenging suite: (1+lambda) hill-climbing
//! with restarts, minimizing the robot's minimum obstacle clearance, with
//! failure outcomes outranking any low-clearance success.
//!
//! Every evaluated candidate (the seed and all mutants, including NoOp
//! re-evaluations) enters the archive, and the archive is the returned
//! suite. Randomness is consumed only in the single-threaded mutation
//! phase, so results are reproducible for a given (seed, subject, config,
//! rng_seed) regardless of worker count.

use crate::scenario::{
    canonical_angle, Provenance, ScenarioError, SuiteMember, TestDefinition, TestSuite,
};
use crate::simulator::TrajectoryLog;
use crate::subjects::SubjectSpec;
use crate::testbench::{run_batch, TestOutcome, TestResult, TestbenchError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("search config: {0}")]
    Config(String),
    #[error(transparent)]
    Testbench(#[from] TestbenchError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    /// Minimum clearance of the evaluating run, meters; lower = harder.
    /// +inf when the scenario has no obstacles.
    pub value: f64,
    pub outcome_at_eval: TestOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mutation {
    MoveObstacle { id: String, dx: f64, dy: f64 },
    ResizeObstacle { id: String, scale: f64 },
    RotateObstacle { id: String, angle: f64 },
    MoveWaypoint { index: usize, dx: f64, dy: f64 },
    /// Twenty resamples failed validation; the parent is kept unchanged.
    NoOp,
}

impl Mutation {
    /// Stable manifest form; rotations reported in degrees.
    pub fn describe(&self) -> String {
        match self {
            Mutation::MoveObstacle { id, dx, dy } => {
                format!("move_obstacle({id}, {dx:+.3}, {dy:+.3})")
            }
            Mutation::ResizeObstacle { id, scale } => {
                format!("resize_obstacle({id}, x{scale:.3})")
            }
            Mutation::RotateObstacle { id, angle } => {
                format!("rotate_obstacle({id}, {:+.1}deg)", angle.to_degrees())
            }
            Mutation::MoveWaypoint { index, dx, dy } => {
                format!("move_waypoint({index}, {dx:+.3}, {dy:+.3})")
            }
            Mutation::NoOp => "noop".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub iterations: u32,
    /// Offspring evaluated per iteration.
    pub lambda: u32,
    /// Stale iterations before the incumbent restarts from the seed.
    pub restart_after: u32,
    /// Obstacle translation range, meters per axis.
    pub move_range: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub rotate_range_deg: f64,
    /// Waypoint translation range, meters per axis.
    pub waypoint_range: f64,
    pub allow_waypoint_mutation: bool,
    pub weight_move: f64,
    pub weight_resize: f64,
    pub weight_rotate: f64,
    pub weight_waypoint: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 21,
            lambda: 4,
            restart_after: 5,
            move_range: 0.5,
            scale_min: 0.8,
            scale_max: 1.25,
            rotate_range_deg: 30.0,
            waypoint_range: 0.5,
            allow_waypoint_mutation: false,
            weight_move: 2.0,
            weight_resize: 1.0,
            weight_rotate: 1.0,
            weight_waypoint: 1.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::Config(m.into()));
        if self.lambda < 1 {
            return bad("lambda must be at least 1");
        }
        if self.restart_after < 1 {
            return bad("restart_after must be at least 1");
        }
        for (name, v) in [
            ("move_range", self.move_range),
            ("rotate_range_deg", self.rotate_range_deg),
            ("waypoint_range", self.waypoint_range),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be finite and non-negative"));
            }
        }
        if !(self.scale_min.is_finite()
            && self.scale_max.is_finite()
            && self.scale_min > 0.0
            && self.scale_min <= self.scale_max)
        {
            return bad("scale range must satisfy 0 < scale_min <= scale_max");
        }
        for (name, w) in [
            ("weight_move", self.weight_move),
            ("weight_resize", self.weight_resize),
            ("weight_rotate", self.weight_rotate),
            ("weight_waypoint", self.weight_waypoint),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return bad(&format!("{name} must be finite and non-negative"));
            }
        }
        if self.weight_move + self.weight_resize + self.weight_rotate <= 0.0 {
            return bad("at least one obstacle mutation weight must be positive");
        }
        Ok(())
    }
}

pub fn parse_search_config(text: &str) -> Result<SearchConfig, GeneratorError> {
    let config: SearchConfig =
        serde_yaml::from_str(text).map_err(|e| GeneratorError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn fitness_of(result: &TestResult) -> Fitness {
    Fitness {
        value: result
            .metrics
            .as_ref()
            .map(|m| m.min_obstacle_distance)
            .unwrap_or(f64::INFINITY),
        outcome_at_eval: result.outcome,
    }
}

/// Failures dominate: a run the safety layer halted or that collided is a
/// better find than any low-clearance success. Errors rank worst.
fn class_rank(outcome: TestOutcome) -> u8 {
    match outcome {
        TestOutcome::SafetyStop | TestOutcome::Collision => 0,
        TestOutcome::Success | TestOutcome::Timeout => 1,
        TestOutcome::Error => 2,
    }
}

type Rank = (u8, u8, f64);

fn rank_of(result: &TestResult, fitness: &Fitness, predicate: Option<&Predicate>) -> Rank {
    let hit = match predicate {
        Some(p) => {
            if p(result) {
                0
            } else {
                1
            }
        }
        None => 0,
    };
    (hit, class_rank(fitness.outcome_at_eval), fitness.value)
}

fn strictly_better(a: Rank, b: Rank) -> bool {
    a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
}

/// One deterministic evaluation of a test against a fresh subject.
pub fn evaluate(t: &TestDefinition, spec: &SubjectSpec) -> (TestResult, Fitness) {
    let (result, _) = crate::testbench::evaluate_test(t, spec);
    let fitness = fitness_of(&result);
    (result, fitness)
}

/// Apply one mutation; angles stay canonical so mutated tests round-trip
/// through YAML bit-exactly.
pub fn apply_mutation(t: &TestDefinition, m: &Mutation) -> TestDefinition {
    let mut out = t.clone();
    match m {
        Mutation::MoveObstacle { id, dx, dy } => {
            let o = out
                .obstacles
                .iter_mut()
                .find(|o| &o.id == id)
                .expect("mutation targets an existing obstacle");
            o.shape = o.shape.translated(*dx, *dy);
        }
        Mutation::ResizeObstacle { id, scale } => {
            let o = out
                .obstacles
                .iter_mut()
                .find(|o| &o.id == id)
                .expect("mutation targets an existing obstacle");
            o.shape = o.shape.scaled(*scale);
        }
        Mutation::RotateObstacle { id, angle } => {
            let o = out
                .obstacles
                .iter_mut()
                .find(|o| &o.id == id)
                .expect("mutation targets an existing obstacle");
            o.shape = match o.shape.rotated(*angle) {
                crate::geometry::ObstacleShape::Box(mut b) => {
                    b.center.yaw = canonical_angle(b.center.yaw);
                    crate::geometry::ObstacleShape::Box(b)
                }
                c => c,
            };
        }
        Mutation::MoveWaypoint { index, dx, dy } => {
            let w = &mut out.mission.waypoints[*index];
            w.x += dx;
            w.y += dy;
        }
        Mutation::NoOp => {}
    }
    out
}

fn draw_mutation(t: &TestDefinition, config: &SearchConfig, rng: &mut ChaCha8Rng) -> Mutation {
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Move,
        Resize,
        Rotate,
        Waypoint,
    }
    let has_obstacles = !t.obstacles.is_empty();
    let has_boxes = t
        .obstacles
        .iter()
        .any(|o| matches!(o.shape, crate::geometry::ObstacleShape::Box(_)));
    // Only non-final waypoints move; the goal stays put.
    let movable_waypoints = t.mission.waypoints.len().saturating_sub(1);
    let mut kinds: Vec<(Kind, f64)> = Vec::new();
    if has_obstacles {
        kinds.push((Kind::Move, config.weight_move));
        kinds.push((Kind::Resize, config.weight_resize));
        if has_boxes {
            kinds.push((Kind::Rotate, config.weight_rotate));
        }
    }
    if config.allow_waypoint_mutation && movable_waypoints > 0 {
        kinds.push((Kind::Waypoint, config.weight_waypoint));
    }
    kinds.retain(|(_, w)| *w > 0.0);
    if kinds.is_empty() {
        return Mutation::NoOp;
    }
    let total: f64 = kinds.iter().map(|(_, w)| w).sum();
    let mut x = rng.random_range(0.0..total);
    let mut kind = kinds[kinds.len() - 1].0;
    for (k, w) in &kinds {
        if x < *w {
            kind = *k;
            break;
        }
        x -= w;
    }
    match kind {
        Kind::Move => {
            let o = &t.obstacles[rng.random_range(0..t.obstacles.len())];
            Mutation::MoveObstacle {
                id: o.id.clone(),
                dx: rng.random_range(-config.move_range..=config.move_range),
                dy: rng.random_range(-config.move_range..=config.move_range),
            }
        }
        Kind::Resize => {
            let o = &t.obstacles[rng.random_range(0..t.obstacles.len())];
            Mutation::ResizeObstacle {
                id: o.id.clone(),
                scale: rng.random_range(config.scale_min..=config.scale_max),
            }
        }
        Kind::Rotate => {
            let boxes: Vec<&crate::scenario::Obstacle> = t
                .obstacles
                .iter()
                .filter(|o| matches!(o.shape, crate::geometry::ObstacleShape::Box(_)))
                .collect();
            let o = boxes[rng.random_range(0..boxes.len())];
            let r = config.rotate_range_deg.to_radians();
            Mutation::RotateObstacle {
                id: o.id.clone(),
                angle: rng.random_range(-r..=r),
            }
        }
        Kind::Waypoint => Mutation::MoveWaypoint {
            index: rng.random_range(0..movable_waypoints),
            dx: rng.random_range(-config.waypoint_range..=config.waypoint_range),
            dy: rng.random_range(-config.waypoint_range..=config.waypoint_range),
        },
    }
}

/// Draw one mutation producing a valid test, resampling up to 20 times;
/// after that the parent is returned unchanged with a NoOp marker.
pub fn mutate(
    t: &TestDefinition,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> (TestDefinition, Mutation) {
    for _ in 0..20 {
        let m = draw_mutation(t, config, rng);
        if m == Mutation::NoOp {
            break;
        }
        let candidate = apply_mutation(t, &m);
        if candidate.validate().is_ok() {
            return (candidate, m);
        }
    }
    (t.clone(), Mutation::NoOp)
}

/// One archived search step: which member was the incumbent after the
/// iteration, and whether staleness forced a restart from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Archive index of the incumbent after selection.
    pub incumbent: usize,
    pub restarted: bool,
}

pub struct GeneratedSuite {
    pub suite: TestSuite,
    /// Parallel to `suite.members`.
    pub evaluations: Vec<(TestResult, Fitness, TrajectoryLog)>,
    /// Archive index of the lowest-fitness-value member (earliest wins ties).
    pub best: usize,
    pub trace: Vec<IterationRecord>,
}

impl GeneratedSuite {
    pub fn seed_fitness(&self) -> &Fitness {
        &self.evaluations[0].1
    }

    pub fn best_fitness(&self) -> &Fitness {
        &self.evaluations[self.best].1
    }
}

pub type Predicate = dyn Fn(&TestResult) -> bool;

pub fn generate_suite(
    seed: &TestDefinition,
    spec: &SubjectSpec,
    config: &SearchConfig,
    rng_seed: u64,
    workers: usize,
) -> Result<GeneratedSuite, GeneratorError> {
    targeted_generate(seed, spec, None, config, rng_seed, workers)
}

/// Same search loop as [`generate_suite`], with selection preferring
/// predicate-satisfying results over all others, then lower rank.
pub fn targeted_generate(
    seed: &TestDefinition,
    spec: &SubjectSpec,
    predicate: Option<&Predicate>,
    config: &SearchConfig,
    rng_seed: u64,
    workers: usize,
) -> Result<GeneratedSuite, GeneratorError> {
    config.validate()?;
    seed.validate()
        .map_err(|e: ScenarioError| GeneratorError::Config(format!("invalid seed: {e}")))?;
    spec.make()
        .map_err(|e| GeneratorError::Testbench(TestbenchError::Worker(e.to_string())))?;

    let member_name = |i: usize| format!("{}_{:03}", seed.name, i);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut members: Vec<SuiteMember> = Vec::new();
    let mut evaluations: Vec<(TestResult, Fitness, TrajectoryLog)> = Vec::new();
    let mut ranks: Vec<Rank> = Vec::new();

    let mut seed_member = seed.clone();
    seed_member.name = member_name(0);
    let (result, log) = run_batch(&[&seed_member], spec, 1)?.remove(0);
    let fitness = fitness_of(&result);
    ranks.push(rank_of(&result, &fitness, predicate));
    members.push(SuiteMember {
        name: seed_member.name.clone(),
        test: seed_member,
        provenance: Provenance::seed_entry(&seed.name),
    });
    evaluations.push((result, fitness, log));

    let mut incumbent = 0usize;
    let mut stale_count = 0u32;
    let mut trace = Vec::with_capacity(config.iterations as usize);

    for iteration in 1..=config.iterations {
        // Mutation phase: single-threaded, sole consumer of the RNG.
        let parent = incumbent;
        let mut children: Vec<TestDefinition> = Vec::with_capacity(config.lambda as usize);
        let mut applied: Vec<Mutation> = Vec::with_capacity(config.lambda as usize);
        for k in 0..config.lambda as usize {
            let (mut child, m) = mutate(&members[parent].test, config, &mut rng);
            child.name = member_name(members.len() + k);
            children.push(child);
            applied.push(m);
        }

        let refs: Vec<&TestDefinition> = children.iter().collect();
        let batch = run_batch(&refs, spec, workers)?;

        let mut best_child: Option<(usize, Rank)> = None;
        for ((child, mutation), (result, log)) in
            children.into_iter().zip(applied).zip(batch)
        {
            let fitness = fitness_of(&result);
            let rank = rank_of(&result, &fitness, predicate);
            let idx = members.len();
            ranks.push(rank);
            members.push(SuiteMember {
                name: child.name.clone(),
                test: child,
                provenance: Provenance {
                    seed: seed.name.clone(),
                    iteration,
                    parent: Some(members[parent].name.clone()),
                    mutation: mutation.describe(),
                },
            });
            evaluations.push((result, fitness, log));
            if best_child.is_none_or(|(_, r)| strictly_better(rank, r)) {
                best_child = Some((idx, rank));
            }
        }

        let (champion, champion_rank) = best_child.expect("lambda >= 1");
        let mut restarted = false;
        if strictly_better(champion_rank, ranks[incumbent]) {
            incumbent = champion;
            stale_count = 0;
        } else {
            stale_count += 1;
            if stale_count >= config.restart_after {
                incumbent = 0;
                stale_count = 0;
                restarted = true;
            }
        }
        trace.push(IterationRecord {
            iteration,
            incumbent,
            restarted,
        });
    }

    let best = evaluations
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.value.partial_cmp(&b.1.value).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    Ok(GeneratedSuite {
        suite: TestSuite {
            name: format!("ts_{}", seed.name),
            subject: spec.id().to_string(),
            rng_seed,
            members,
        },
        evaluations,
        best,
        trace,
    })
}
