//! Report rendering: machine-readable JSON plus an aligned text table of
//! per-family outcome percentages and metric statistics.

use super::{MetricStats, OutcomeBreakdown, ReportComparison, SuiteReport};
use std::fmt::Write;

pub fn report_json(r: &SuiteReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("reports always serialize");
    s.push('\n');
    s
}

pub fn parse_report_json(text: &str) -> Result<SuiteReport, super::TestbenchError> {
    let r: SuiteReport = serde_json::from_str(text)
        .map_err(|e| super::TestbenchError::SuiteMismatch(format!("unreadable report: {e}")))?;
    if r.schema != super::REPORT_SCHEMA_VERSION {
        return Err(super::TestbenchError::SuiteMismatch(format!(
            "unsupported report schema version {} (expected {})",
            r.schema,
            super::REPORT_SCHEMA_VERSION
        )));
    }
    Ok(r)
}

fn outcome_cells(out: &mut String, o: &OutcomeBreakdown) {
    for share in [o.success, o.safety_stop, o.timeout, o.collision, o.error] {
        write!(out, "  {:>5.1}%", share.percent).unwrap();
    }
}

pub fn format_report(r: &SuiteReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "suite: {}    subject: {}    tests: {}",
        r.suite, r.subject, r.overall.total
    )
    .unwrap();
    out.push('\n');

    let name_w = r
        .families
        .iter()
        .map(|f| f.family.len())
        .chain(["scenario".len(), "overall".len()])
        .max()
        .unwrap();
    writeln!(
        out,
        "{:<name_w$}  tests   succ.  s-stop   t-out   coll.   error",
        "scenario"
    )
    .unwrap();
    for row in &r.families {
        write!(out, "{:<name_w$}  {:>5}", row.family, row.outcomes.total).unwrap();
        outcome_cells(&mut out, &row.outcomes);
        out.push('\n');
    }
    write!(out, "{:<name_w$}  {:>5}", "overall", r.overall.total).unwrap();
    outcome_cells(&mut out, &r.overall);
    out.push('\n');
    out.push('\n');

    writeln!(out, "{:<23}      min       max      mean", "metric").unwrap();
    let stat_cell = |v: f64| {
        if v.is_finite() {
            format!("{v:>9.3}")
        } else {
            format!("{:>9}", "-")
        }
    };
    let mut metric_row = |label: &str, s: &Option<MetricStats>| {
        match s {
            Some(s) => writeln!(
                out,
                "{label:<23}{}{}{}",
                stat_cell(s.min),
                stat_cell(s.max),
                stat_cell(s.mean)
            ),
            None => writeln!(
                out,
                "{label:<23}{:>9}{:>9}{:>9}",
                "-", "-", "-"
            ),
        }
        .unwrap();
    };
    metric_row("min_obstacle_distance", &r.metrics.min_obstacle_distance);
    metric_row("min_obstacle_gap", &r.metrics.min_obstacle_gap);
    metric_row("path_length", &r.metrics.path_length);
    metric_row("deviation", &r.metrics.deviation);
    metric_row("duration", &r.metrics.duration);
    out
}

pub fn format_comparison(c: &ReportComparison) -> String {
    let mut out = String::new();
    writeln!(out, "comparison: {} vs {}", c.subject_a, c.subject_b).unwrap();
    out.push('\n');
    let name_w = c
        .families
        .iter()
        .map(|f| f.family.len())
        .chain(["scenario".len(), "overall".len()])
        .max()
        .unwrap();
    writeln!(
        out,
        "{:<name_w$}  succ. a  succ. b   d-succ  sstop a  sstop b  d-sstop",
        "scenario"
    )
    .unwrap();
    let mut row = |r: &super::ComparisonRow| {
        writeln!(
            out,
            "{:<name_w$}  {:>6.1}%  {:>6.1}%  {:>+6.1}  {:>6.1}%  {:>6.1}%  {:>+6.1}",
            r.family, r.a_success, r.b_success, r.d_success, r.a_safety_stop, r.b_safety_stop,
            r.d_safety_stop
        )
        .unwrap();
    };
    for r in &c.families {
        row(r);
    }
    row(&c.overall);
    out
}

#[cfg(test)]
mod tests {
    use super::super::{aggregate, TestOutcome, TestResult};
    use super::*;

    fn results() -> Vec<TestResult> {
        let mk = |name: &str, outcome| TestResult {
            test_name: name.into(),
            subject_id: "refnav_a".into(),
            outcome,
            metrics: Some(super::super::TestMetrics {
                min_obstacle_distance: 0.4,
                min_obstacle_gap: 1.8,
                path_length: 10.5,
                deviation: 0.4,
                duration: 21.0,
            }),
            log_path: None,
        };
        vec![
            mk("boxes1_000", TestOutcome::Success),
            mk("boxes1_001", TestOutcome::SafetyStop),
            mk("corridor_000", TestOutcome::Success),
            mk("corridor_001", TestOutcome::Timeout),
        ]
    }

    #[test]
    fn table_has_family_rows_and_overall() {
        let report = aggregate(&results(), "ts").unwrap();
        let text = format_report(&report);
        assert!(text.contains("boxes1"), "{text}");
        assert!(text.contains("corridor"), "{text}");
        assert!(text.contains("overall"), "{text}");
        assert!(text.contains("s-stop"), "{text}");
        assert!(text.contains(" 50.0%"), "{text}");
        assert!(text.contains("min_obstacle_distance"), "{text}");
    }

    #[test]
    fn report_json_round_trips() {
        let report = aggregate(&results(), "ts").unwrap();
        let json = report_json(&report);
        let back = parse_report_json(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn wrong_report_schema_is_rejected() {
        let report = aggregate(&results(), "ts").unwrap();
        let json = report_json(&report).replace("\"schema\": 1", "\"schema\": 9");
        assert!(parse_report_json(&json).is_err());
    }
}
