//! Execute tests and suites, classify outcomes, compute per-test metrics,
//! aggregate suite statistics, and compare reports.
//!
//! Classification and metrics are pure functions over (log, test). Suite
//! execution fans out to a bounded worker pool and merges results in
//! suite order, so reports never depend on worker count or scheduling.

pub mod plot;
pub mod report;

use crate::geometry::{obstacle_gap, point_segment_distance_sq, Point2};
use crate::scenario::{LoadedSuite, TestDefinition};
use crate::simulator::{run_test, EventKind, TrajectoryLog};
use crate::subjects::SubjectSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TestbenchError {
    /// Structurally or semantically impossible log (e.g. truncated tail,
    /// non-monotonic time, a goal event outside goal tolerances).
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("empty suite")]
    EmptySuite,
    #[error("empty results")]
    EmptyResults,
    #[error("suite mismatch: {0}")]
    SuiteMismatch(String),
    #[error("worker failure: {0}")]
    Worker(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestOutcome {
    Success,
    SafetyStop,
    Timeout,
    Collision,
    Error,
}

impl TestOutcome {
    pub const ALL: [TestOutcome; 5] = [
        TestOutcome::Success,
        TestOutcome::SafetyStop,
        TestOutcome::Timeout,
        TestOutcome::Collision,
        TestOutcome::Error,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TestOutcome::Success => "success",
            TestOutcome::SafetyStop => "safety_stop",
            TestOutcome::Timeout => "timeout",
            TestOutcome::Collision => "collision",
            TestOutcome::Error => "error",
        }
    }
}

impl std::fmt::Display for TestOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// +inf encodes "not applicable" (no obstacles / fewer than two) and is
/// serialized as null.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestMetrics {
    #[serde(with = "inf_as_null")]
    pub min_obstacle_distance: f64,
    #[serde(with = "inf_as_null")]
    pub min_obstacle_gap: f64,
    pub path_length: f64,
    pub deviation: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestResult {
    pub test_name: String,
    pub subject_id: String,
    pub outcome: TestOutcome,
    /// Absent when no log exists (unreadable member, failed setup).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TestMetrics>,
    /// Log file path relative to the suite directory, when one was kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_path: Option<String>,
}

/// Structural well-formedness shared by classification and metrics.
fn check_log(log: &TrajectoryLog) -> Result<(), TestbenchError> {
    let malformed = |m: &str| Err(TestbenchError::MalformedLog(m.into()));
    if log.samples.is_empty() {
        return malformed("no samples");
    }
    if !(log.dt.is_finite() && log.dt > 0.0) {
        return malformed("non-positive dt");
    }
    for s in &log.samples {
        let finite = s.t.is_finite()
            && s.pose.x.is_finite()
            && s.pose.y.is_finite()
            && s.pose.yaw.is_finite()
            && s.command.is_finite();
        if !finite || s.min_obstacle_distance.is_nan() || s.min_obstacle_distance < 0.0 {
            return malformed("non-finite sample");
        }
    }
    for pair in log.samples.windows(2) {
        if pair[1].t <= pair[0].t {
            return malformed("sample times not strictly increasing");
        }
    }
    let Some(terminal) = log.events.last() else {
        return malformed("no terminal event");
    };
    if !terminal.kind.is_terminal() {
        return malformed("last event is not terminal");
    }
    for e in &log.events[..log.events.len() - 1] {
        if e.kind.is_terminal() {
            return malformed("terminal event before the end of the log");
        }
    }
    for pair in log.events.windows(2) {
        if pair[1].t < pair[0].t {
            return malformed("event times decrease");
        }
    }
    let t0 = log.samples[0].t;
    let t1 = log.samples[log.samples.len() - 1].t;
    if log.events.iter().any(|e| e.t < t0 || e.t > t1) {
        return malformed("event outside the sampled time range");
    }
    if terminal.t != t1 {
        return malformed("terminal event not at the final sample time");
    }
    Ok(())
}

/// Map a complete log to exactly one outcome category.
pub fn classify_outcome(
    log: &TrajectoryLog,
    t: &TestDefinition,
) -> Result<TestOutcome, TestbenchError> {
    check_log(log)?;
    let terminal = log.events.last().unwrap();
    match terminal.kind {
        EventKind::SafetyStop => Ok(TestOutcome::SafetyStop),
        EventKind::Timeout => Ok(TestOutcome::Timeout),
        EventKind::Collision => Ok(TestOutcome::Collision),
        EventKind::SubjectError => Ok(TestOutcome::Error),
        EventKind::GoalReached => {
            // Success requires the recorded final pose to actually satisfy
            // both goal tolerances; a goal event without them is a log no
            // correct run can produce.
            let final_pose = log.samples.last().unwrap().pose;
            let goal = *t.mission.waypoints.last().unwrap();
            let pos_ok = final_pose.position().distance_to(goal.position())
                <= t.robot.goal_position_tolerance;
            let yaw_ok = crate::geometry::normalize_angle(final_pose.yaw - goal.yaw).abs()
                <= t.robot.goal_yaw_tolerance;
            if pos_ok && yaw_ok {
                Ok(TestOutcome::Success)
            } else {
                Err(TestbenchError::MalformedLog(
                    "goal event with final pose outside goal tolerances".into(),
                ))
            }
        }
        EventKind::WaypointReached => unreachable!("checked terminal"),
    }
}

fn polyline_deviation(p: Point2, polyline: &[Point2]) -> f64 {
    polyline
        .windows(2)
        .map(|seg| point_segment_distance_sq(p, seg[0], seg[1]))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Per-test metrics, recomputable bit-equal from a written log.
pub fn compute_metrics(
    log: &TrajectoryLog,
    t: &TestDefinition,
) -> Result<TestMetrics, TestbenchError> {
    check_log(log)?;
    let min_obstacle_distance = log
        .samples
        .iter()
        .map(|s| s.min_obstacle_distance)
        .fold(f64::INFINITY, f64::min);

    let mut min_obstacle_gap = f64::INFINITY;
    for (i, a) in t.obstacles.iter().enumerate() {
        for b in &t.obstacles[i + 1..] {
            min_obstacle_gap = min_obstacle_gap.min(obstacle_gap(&a.shape, &b.shape));
        }
    }

    let path_length = log
        .samples
        .windows(2)
        .map(|pair| pair[0].pose.position().distance_to(pair[1].pose.position()))
        .fold(0.0, |acc, d| acc + d);

    let mut polyline = vec![t.mission.start.position()];
    polyline.extend(t.mission.waypoints.iter().map(|w| w.position()));
    let deviation = log
        .samples
        .iter()
        .map(|s| polyline_deviation(s.pose.position(), &polyline))
        .fold(0.0, f64::max);

    Ok(TestMetrics {
        min_obstacle_distance,
        min_obstacle_gap,
        path_length,
        deviation,
        duration: log.samples.last().unwrap().t,
    })
}

/// Run one test against a fresh subject built from `spec`.
///
/// Panics if the spec cannot construct a subject; callers validate specs
/// with `spec.make()` before fanning out work.
pub fn evaluate_test(t: &TestDefinition, spec: &SubjectSpec) -> (TestResult, TrajectoryLog) {
    let mut subject = spec.make().expect("subject spec validated before execution");
    let log = run_test(t, subject.as_mut(), spec.id());
    let outcome = classify_outcome(&log, t).expect("simulated logs are well-formed");
    let metrics = compute_metrics(&log, t).expect("simulated logs are well-formed");
    (
        TestResult {
            test_name: t.name.clone(),
            subject_id: spec.id().to_string(),
            outcome,
            metrics: Some(metrics),
            log_path: None,
        },
        log,
    )
}

/// Evaluate a batch concurrently; results come back in input order
/// regardless of worker scheduling. Each worker builds its own subject
/// per test, so subjects never share state.
pub fn run_batch(
    tests: &[&TestDefinition],
    spec: &SubjectSpec,
    workers: usize,
) -> Result<Vec<(TestResult, TrajectoryLog)>, TestbenchError> {
    let n = tests.len();
    let workers = workers.clamp(1, n.max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<(TestResult, TrajectoryLog)>>> =
        (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| -> Result<(), TestbenchError> {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let out = evaluate_test(tests[i], spec);
                    *slots[i].lock().unwrap() = Some(out);
                })
            })
            .collect();
        for h in handles {
            h.join()
                .map_err(|_| TestbenchError::Worker("a worker thread panicked".into()))?;
        }
        Ok(())
    })?;
    Ok(slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("all slots filled"))
        .collect())
}

/// Execute every suite member. Unreadable members become Error results;
/// when `out_root` is given, logs land in `<out_root>/logs/<name>.jsonl`
/// and result paths record the relative location.
pub fn run_suite(
    suite: &LoadedSuite,
    spec: &SubjectSpec,
    workers: usize,
    out_root: Option<&Path>,
) -> Result<Vec<TestResult>, TestbenchError> {
    if suite.manifest.members.is_empty() {
        return Err(TestbenchError::EmptySuite);
    }
    spec.make()
        .map_err(|e| TestbenchError::Worker(e.to_string()))?;

    let runnable: Vec<&TestDefinition> = suite.tests.iter().flatten().collect();
    let mut batch = run_batch(&runnable, spec, workers)?.into_iter();

    if let Some(root) = out_root {
        std::fs::create_dir_all(root.join("logs"))?;
    }
    let mut results = Vec::with_capacity(suite.manifest.members.len());
    for (entry, parsed) in suite.manifest.members.iter().zip(&suite.tests) {
        match parsed {
            Ok(_) => {
                let (mut result, log) = batch.next().expect("one batch entry per parsed member");
                if let Some(root) = out_root {
                    let rel = format!("logs/{}.jsonl", entry.name);
                    crate::simulator::write_log_file(&log, &root.join(&rel))?;
                    result.log_path = Some(rel);
                }
                results.push(result);
            }
            Err(_) => results.push(TestResult {
                test_name: entry.name.clone(),
                subject_id: spec.id().to_string(),
                outcome: TestOutcome::Error,
                metrics: None,
                log_path: None,
            }),
        }
    }
    Ok(results)
}

// ---------------------------------------------------------------------------
// Aggregation

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryShare {
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeBreakdown {
    pub total: usize,
    pub success: CategoryShare,
    pub safety_stop: CategoryShare,
    pub timeout: CategoryShare,
    pub collision: CategoryShare,
    pub error: CategoryShare,
}

impl OutcomeBreakdown {
    pub fn from_outcomes<'a>(outcomes: impl Iterator<Item = &'a TestOutcome>) -> Self {
        let mut counts = [0usize; 5];
        let mut total = 0usize;
        for o in outcomes {
            counts[*o as usize] += 1;
            total += 1;
        }
        let share = |c: usize| CategoryShare {
            count: c,
            percent: if total == 0 {
                0.0
            } else {
                c as f64 * 100.0 / total as f64
            },
        };
        OutcomeBreakdown {
            total,
            success: share(counts[0]),
            safety_stop: share(counts[1]),
            timeout: share(counts[2]),
            collision: share(counts[3]),
            error: share(counts[4]),
        }
    }

    pub fn share(&self, outcome: TestOutcome) -> CategoryShare {
        match outcome {
            TestOutcome::Success => self.success,
            TestOutcome::SafetyStop => self.safety_stop,
            TestOutcome::Timeout => self.timeout,
            TestOutcome::Collision => self.collision,
            TestOutcome::Error => self.error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricStats {
    #[serde(with = "inf_as_null")]
    pub min: f64,
    #[serde(with = "inf_as_null")]
    pub max: f64,
    #[serde(with = "inf_as_null")]
    pub mean: f64,
}

impl MetricStats {
    fn over(values: impl Iterator<Item = f64>) -> Option<MetricStats> {
        let mut n = 0usize;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in values {
            n += 1;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        (n > 0).then(|| MetricStats {
            min,
            max,
            mean: sum / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSummary {
    pub min_obstacle_distance: Option<MetricStats>,
    pub min_obstacle_gap: Option<MetricStats>,
    pub path_length: Option<MetricStats>,
    pub deviation: Option<MetricStats>,
    pub duration: Option<MetricStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyRow {
    pub family: String,
    pub outcomes: OutcomeBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: String,
    pub subject: String,
    /// Member test names in suite order; reports are comparable only when
    /// these match exactly.
    pub members: Vec<String>,
    pub overall: OutcomeBreakdown,
    pub families: Vec<FamilyRow>,
    pub metrics: MetricsSummary,
}

/// Scenario family of a member name: the name with one trailing `_<digits>`
/// group removed (`corridor_042` -> `corridor`).
pub fn family_of(name: &str) -> &str {
    if let Some(pos) = name.rfind('_') {
        let tail = &name[pos + 1..];
        if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            return &name[..pos];
        }
    }
    name
}

pub fn aggregate(
    results: &[TestResult],
    suite_name: &str,
) -> Result<SuiteReport, TestbenchError> {
    if results.is_empty() {
        return Err(TestbenchError::EmptyResults);
    }
    let subject = results[0].subject_id.clone();
    let overall = OutcomeBreakdown::from_outcomes(results.iter().map(|r| &r.outcome));

    let mut family_names: Vec<&str> = results.iter().map(|r| family_of(&r.test_name)).collect();
    family_names.sort_unstable();
    family_names.dedup();
    let families = family_names
        .into_iter()
        .map(|fam| FamilyRow {
            family: fam.to_string(),
            outcomes: OutcomeBreakdown::from_outcomes(
                results
                    .iter()
                    .filter(|r| family_of(&r.test_name) == fam)
                    .map(|r| &r.outcome),
            ),
        })
        .collect();

    let stat = |f: fn(&TestMetrics) -> f64| {
        MetricStats::over(results.iter().filter_map(|r| r.metrics.as_ref()).map(f))
    };
    let metrics = MetricsSummary {
        min_obstacle_distance: stat(|m| m.min_obstacle_distance),
        min_obstacle_gap: stat(|m| m.min_obstacle_gap),
        path_length: stat(|m| m.path_length),
        deviation: stat(|m| m.deviation),
        duration: stat(|m| m.duration),
    };

    Ok(SuiteReport {
        schema: REPORT_SCHEMA_VERSION,
        suite: suite_name.to_string(),
        subject,
        members: results.iter().map(|r| r.test_name.clone()).collect(),
        overall,
        families,
        metrics,
    })
}

// ---------------------------------------------------------------------------
// Report comparison

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRow {
    pub family: String,
    pub a_success: f64,
    pub b_success: f64,
    /// b_success - a_success, percentage points.
    pub d_success: f64,
    pub a_safety_stop: f64,
    pub b_safety_stop: f64,
    pub d_safety_stop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportComparison {
    pub subject_a: String,
    pub subject_b: String,
    pub overall: ComparisonRow,
    pub families: Vec<ComparisonRow>,
}

pub fn compare_reports(
    a: &SuiteReport,
    b: &SuiteReport,
) -> Result<ReportComparison, TestbenchError> {
    if a.members != b.members {
        return Err(TestbenchError::SuiteMismatch(format!(
            "reports cover different suites ({} vs {} members)",
            a.members.len(),
            b.members.len()
        )));
    }
    let row = |family: &str, oa: &OutcomeBreakdown, ob: &OutcomeBreakdown| ComparisonRow {
        family: family.to_string(),
        a_success: oa.success.percent,
        b_success: ob.success.percent,
        d_success: ob.success.percent - oa.success.percent,
        a_safety_stop: oa.safety_stop.percent,
        b_safety_stop: ob.safety_stop.percent,
        d_safety_stop: ob.safety_stop.percent - oa.safety_stop.percent,
    };
    let families = a
        .families
        .iter()
        .zip(&b.families)
        .map(|(fa, fb)| {
            debug_assert_eq!(fa.family, fb.family, "same members give same families");
            row(&fa.family, &fa.outcomes, &fb.outcomes)
        })
        .collect();
    Ok(ReportComparison {
        subject_a: a.subject.clone(),
        subject_b: b.subject.clone(),
        overall: row("overall", &a.overall, &b.overall),
        families,
    })
}
