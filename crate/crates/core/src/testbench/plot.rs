//! Deterministic SVG rendering: top-down trajectory plots with the robot
//! footprint drawn to scale, and two-sided comparison bar charts.

use super::ReportComparison;
use crate::geometry::{ObstacleShape, Point2};
use crate::scenario::TestDefinition;
use crate::simulator::TrajectoryLog;
use std::fmt::Write;

/// Pixels per meter.
const SCALE: f64 = 60.0;
const PAD: f64 = 1.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

struct Bounds {
    lo: Point2,
    hi: Point2,
}

impl Bounds {
    fn new() -> Self {
        Bounds {
            lo: Point2::new(f64::INFINITY, f64::INFINITY),
            hi: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn add(&mut self, p: Point2) {
        self.lo.x = self.lo.x.min(p.x);
        self.lo.y = self.lo.y.min(p.y);
        self.hi.x = self.hi.x.max(p.x);
        self.hi.y = self.hi.y.max(p.y);
    }
}

/// Top-down plot: obstacles as filled shapes, the trajectory as a band as
/// wide as the robot footprint, start/goal markers, and annotations for
/// the minimum obstacle distance and minimum obstacle gap.
pub fn render_plot(log: &TrajectoryLog, t: &TestDefinition) -> String {
    let mut b = Bounds::new();
    b.add(t.mission.start.position());
    for w in &t.mission.waypoints {
        b.add(w.position());
    }
    for s in &log.samples {
        b.add(s.pose.position());
    }
    for o in &t.obstacles {
        let (lo, hi) = o.shape.aabb();
        b.add(lo);
        b.add(hi);
    }
    b.lo.x -= PAD;
    b.lo.y -= PAD;
    b.hi.x += PAD;
    b.hi.y += PAD;

    let px = |x: f64| (x - b.lo.x) * SCALE;
    let py = |y: f64| (b.hi.y - y) * SCALE;
    let width = px(b.hi.x);
    let height = py(b.lo.y);

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    )
    .unwrap();
    writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#fbfbfc\"/>",
        fmt(width),
        fmt(height)
    )
    .unwrap();

    for o in &t.obstacles {
        match &o.shape {
            ObstacleShape::Box(bx) => {
                let pts: Vec<String> = bx
                    .corners()
                    .iter()
                    .map(|c| format!("{},{}", fmt(px(c.x)), fmt(py(c.y))))
                    .collect();
                writeln!(
                    svg,
                    "<polygon points=\"{}\" fill=\"#9aa3ad\" stroke=\"#5c646d\" stroke-width=\"1\"/>",
                    pts.join(" ")
                )
                .unwrap();
            }
            ObstacleShape::Circle(c) => {
                writeln!(
                    svg,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#9aa3ad\" stroke=\"#5c646d\" stroke-width=\"1\"/>",
                    fmt(px(c.center.x)),
                    fmt(py(c.center.y)),
                    fmt(c.radius() * SCALE)
                )
                .unwrap();
            }
        }
    }

    // Mission polyline and waypoint diamonds.
    let mut mpts = vec![t.mission.start.position()];
    mpts.extend(t.mission.waypoints.iter().map(|w| w.position()));
    let mission_path: Vec<String> = mpts
        .iter()
        .map(|p| format!("{},{}", fmt(px(p.x)), fmt(py(p.y))))
        .collect();
    writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#b48ead\" stroke-width=\"2\" stroke-dasharray=\"7 5\"/>",
        mission_path.join(" ")
    )
    .unwrap();
    for w in &t.mission.waypoints {
        let (cx, cy) = (px(w.x), py(w.y));
        writeln!(
            svg,
            "<polygon points=\"{},{} {},{} {},{} {},{}\" fill=\"#b48ead\"/>",
            fmt(cx),
            fmt(cy - 6.0),
            fmt(cx + 6.0),
            fmt(cy),
            fmt(cx),
            fmt(cy + 6.0),
            fmt(cx - 6.0),
            fmt(cy)
        )
        .unwrap();
    }

    // Goal tolerance ring.
    let goal = t.mission.waypoints.last().unwrap();
    writeln!(
        svg,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#7fa86f\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"/>",
        fmt(px(goal.x)),
        fmt(py(goal.y)),
        fmt(t.robot.goal_position_tolerance * SCALE)
    )
    .unwrap();

    // Trajectory: a band at footprint width, plus a thin centerline.
    let traj: Vec<String> = log
        .samples
        .iter()
        .map(|s| format!("{},{}", fmt(px(s.pose.x)), fmt(py(s.pose.y))))
        .collect();
    let band = traj.join(" ");
    writeln!(
        svg,
        "<polyline points=\"{band}\" fill=\"none\" stroke=\"#5e81ac\" stroke-opacity=\"0.45\" stroke-width=\"{}\" stroke-linecap=\"round\" stroke-linejoin=\"round\"/>",
        fmt(t.robot.footprint_width * SCALE)
    )
    .unwrap();
    writeln!(
        svg,
        "<polyline points=\"{band}\" fill=\"none\" stroke=\"#2e4a72\" stroke-width=\"1.5\"/>"
    )
    .unwrap();

    // Start and goal markers.
    let start = t.mission.start.position();
    writeln!(
        svg,
        "<circle cx=\"{}\" cy=\"{}\" r=\"6\" fill=\"#7fa86f\"/>",
        fmt(px(start.x)),
        fmt(py(start.y))
    )
    .unwrap();
    let (gx, gy) = (px(goal.x), py(goal.y));
    for (dx0, dy0, dx1, dy1) in [(-6.0, -6.0, 6.0, 6.0), (-6.0, 6.0, 6.0, -6.0)] {
        writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#b04a4a\" stroke-width=\"2.5\"/>",
            fmt(gx + dx0),
            fmt(gy + dy0),
            fmt(gx + dx1),
            fmt(gy + dy1)
        )
        .unwrap();
    }

    // Closest-approach marker and annotations.
    let closest = log
        .samples
        .iter()
        .min_by(|a, b| {
            a.min_obstacle_distance
                .partial_cmp(&b.min_obstacle_distance)
                .unwrap()
        })
        .filter(|s| s.min_obstacle_distance.is_finite());
    if let Some(s) = closest {
        writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"7\" fill=\"none\" stroke=\"#d08770\" stroke-width=\"2\"/>",
            fmt(px(s.pose.x)),
            fmt(py(s.pose.y))
        )
        .unwrap();
    }

    let terminal = log
        .events
        .last()
        .map(|e| format!("{:?}", e.kind))
        .unwrap_or_else(|| "incomplete".into());
    let mut lines = vec![format!(
        "{} vs {} ({} @ {} s)",
        log.test_name,
        log.subject_id,
        terminal,
        fmt(log.samples.last().map(|s| s.t).unwrap_or(0.0))
    )];
    if let Some(s) = closest {
        lines.push(format!("min distance: {:.3} m", s.min_obstacle_distance));
    }
    let mut min_gap = f64::INFINITY;
    for (i, a) in t.obstacles.iter().enumerate() {
        for b2 in &t.obstacles[i + 1..] {
            min_gap = min_gap.min(crate::geometry::obstacle_gap(&a.shape, &b2.shape));
        }
    }
    if min_gap.is_finite() {
        lines.push(format!("min gap: {min_gap:.3} m"));
    }
    for (i, line) in lines.iter().enumerate() {
        writeln!(
            svg,
            "<text x=\"10\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#30343a\">{line}</text>",
            20 + i * 18
        )
        .unwrap();
    }

    svg.push_str("</svg>\n");
    svg
}

/// Two-sided bar chart: per scenario family, success rates grow upward
/// and safety-stop rates grow downward, one bar pair per subject.
pub fn comparison_chart(c: &ReportComparison) -> String {
    const HALF: f64 = 150.0;
    const BAR_W: f64 = 22.0;
    const PAIR_GAP: f64 = 6.0;
    const GROUP_GAP: f64 = 34.0;
    const MARGIN_L: f64 = 64.0;
    const MARGIN_TOP: f64 = 46.0;
    const LEGEND_W: f64 = 190.0;

    let n = c.families.len();
    let group_w = 2.0 * BAR_W + PAIR_GAP;
    let width = MARGIN_L + n as f64 * (group_w + GROUP_GAP) + LEGEND_W;
    let height = MARGIN_TOP + 2.0 * HALF + 60.0;
    let axis_y = MARGIN_TOP + HALF;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    )
    .unwrap();
    writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#fbfbfc\"/>",
        fmt(width),
        fmt(height)
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" fill=\"#30343a\">success (up) / safety-stop (down): {} vs {}</text>",
        fmt(MARGIN_L),
        c.subject_a,
        c.subject_b
    )
    .unwrap();

    let plot_right = MARGIN_L + n as f64 * (group_w + GROUP_GAP);
    for pct in [25.0, 50.0, 75.0, 100.0] {
        for sign in [-1.0, 1.0] {
            let y = axis_y - sign * pct * HALF / 100.0;
            writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#d7dbe0\" stroke-width=\"1\"/>",
                fmt(MARGIN_L),
                fmt(y),
                fmt(plot_right),
                fmt(y)
            )
            .unwrap();
            writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#6b7178\" text-anchor=\"end\">{}%</text>",
                fmt(MARGIN_L - 6.0),
                fmt(y + 4.0),
                pct as u32
            )
            .unwrap();
        }
    }

    let colors_up = ["#5e81ac", "#88c0d0"];
    let colors_down = ["#bf616a", "#d08770"];
    for (i, row) in c.families.iter().enumerate() {
        let x0 = MARGIN_L + i as f64 * (group_w + GROUP_GAP) + GROUP_GAP / 2.0;
        let pairs = [
            (row.a_success, row.a_safety_stop, 0usize),
            (row.b_success, row.b_safety_stop, 1usize),
        ];
        for (j, (succ, sstop, color)) in pairs.into_iter().enumerate() {
            let x = x0 + j as f64 * (BAR_W + PAIR_GAP);
            let up_h = succ * HALF / 100.0;
            let down_h = sstop * HALF / 100.0;
            writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                fmt(x),
                fmt(axis_y - up_h),
                fmt(BAR_W),
                fmt(up_h),
                colors_up[color]
            )
            .unwrap();
            writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                fmt(x),
                fmt(axis_y),
                fmt(BAR_W),
                fmt(down_h),
                colors_down[color]
            )
            .unwrap();
        }
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#30343a\" text-anchor=\"middle\">{}</text>",
            fmt(x0 + group_w / 2.0),
            fmt(MARGIN_TOP + 2.0 * HALF + 22.0),
            row.family
        )
        .unwrap();
    }

    writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#30343a\" stroke-width=\"1.5\"/>",
        fmt(MARGIN_L),
        fmt(axis_y),
        fmt(plot_right),
        fmt(axis_y)
    )
    .unwrap();

    let legend = [
        (colors_up[0], format!("{} success", c.subject_a)),
        (colors_up[1], format!("{} success", c.subject_b)),
        (colors_down[0], format!("{} safety-stop", c.subject_a)),
        (colors_down[1], format!("{} safety-stop", c.subject_b)),
    ];
    for (i, (color, label)) in legend.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + i as f64 * 20.0;
        writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>",
            fmt(plot_right + 16.0),
            fmt(y)
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#30343a\">{label}</text>",
            fmt(plot_right + 34.0),
            fmt(y + 10.0)
        )
        .unwrap();
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::super::{compare_reports, evaluate_test};
    use super::*;
    use crate::scenario::builtin_seeds;
    use crate::subjects::SubjectSpec;

    fn corridor_plot() -> String {
        let seeds = builtin_seeds();
        let corridor = seeds.iter().find(|s| s.name == "corridor").unwrap();
        let (_, log) = evaluate_test(corridor, &SubjectSpec::new("refnav_b"));
        render_plot(&log, corridor)
    }

    #[test]
    fn corridor_plot_has_walls_band_and_annotations() {
        let svg = corridor_plot();
        let wall_count = svg.matches("fill=\"#9aa3ad\"").count();
        assert_eq!(wall_count, 2, "two wall rectangles");
        // Footprint width 0.55 m at 60 px/m.
        assert!(svg.contains("stroke-width=\"33.00\""), "{svg}");
        assert!(svg.contains("min distance:"));
        assert!(svg.contains("min gap:"));
    }

    #[test]
    fn corridor_plot_is_byte_stable() {
        assert_eq!(corridor_plot(), corridor_plot());
    }

    #[test]
    fn corridor_plot_matches_golden_file() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden/corridor_plot.svg");
        let golden = std::fs::read_to_string(path).unwrap();
        assert_eq!(corridor_plot(), golden);
    }

    #[test]
    fn empty_obstacle_plot_omits_gap_annotation() {
        let mut t = builtin_seeds().remove(0);
        t.obstacles.clear();
        let (_, log) = evaluate_test(&t, &SubjectSpec::new("refnav_b"));
        let svg = render_plot(&log, &t);
        assert!(!svg.contains("min gap:"));
        assert!(!svg.contains("min distance:"));
        assert!(svg.contains("<svg "));
    }

    #[test]
    fn chart_draws_four_bars_per_family() {
        let mk = |subject: &str, succ: f64, sstop: f64| {
            let results: Vec<_> = (0..10)
                .map(|i| super::super::TestResult {
                    test_name: format!("fam_{i}"),
                    subject_id: subject.into(),
                    outcome: if (i as f64) < succ / 10.0 {
                        super::super::TestOutcome::Success
                    } else if (i as f64) < (succ + sstop) / 10.0 {
                        super::super::TestOutcome::SafetyStop
                    } else {
                        super::super::TestOutcome::Timeout
                    },
                    metrics: None,
                    log_path: None,
                })
                .collect();
            super::super::aggregate(&results, "ts").unwrap()
        };
        let a = mk("alpha", 40.0, 40.0);
        let b = mk("beta", 70.0, 10.0);
        let cmp = compare_reports(&a, &b).unwrap();
        let svg = comparison_chart(&cmp);
        let bars = svg.matches("<rect ").count();
        // Background + 4 legend swatches + 4 bars per family.
        assert_eq!(bars, 1 + 4 + 4 * cmp.families.len(), "{svg}");
        assert!(svg.contains("alpha"));
        assert!(svg.contains("beta"));
    }
}
