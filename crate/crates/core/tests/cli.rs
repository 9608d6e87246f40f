//! End-to-end checks of the command-line binary: exit codes, artifact
//! layout, and the generate/rerun/compare workflow.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use navstress::scenario::{parse_suite_manifest, parse_test_definition};
use navstress::simulator::read_log_file;
use navstress::testbench::report::parse_report_json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_navstress"))
}

fn run_ok(args: &[&str], cwd: &Path) -> Output {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    assert!(
        out.status.success(),
        "navstress {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("not killed by signal")
}

fn seeds_dir(root: &Path) -> PathBuf {
    let dir = root.join("seeds");
    run_ok(&["seeds", "--out", dir.to_str().unwrap()], root);
    dir
}

#[test]
fn seeds_materializes_the_bundled_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = seeds_dir(tmp.path());
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "boxes1.yaml",
            "boxes2.yaml",
            "corridor.yaml",
            "cylinders.yaml",
            "l_corridor.yaml"
        ]
    );
    for name in names {
        let text = std::fs::read_to_string(dir.join(&name)).unwrap();
        parse_test_definition(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn run_prints_the_outcome_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let out_dir = tmp.path().join("single");
    let out = run_ok(
        &[
            "run",
            seeds.join("corridor.yaml").to_str().unwrap(),
            "--subject",
            "refnav_b",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("corridor vs refnav_b: success"), "{stdout}");
    assert!(stdout.contains("min obstacle distance:"), "{stdout}");

    let log = read_log_file(&out_dir.join("log.jsonl")).unwrap();
    assert_eq!(log.test_name, "corridor");
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("result.json")).unwrap())
            .unwrap();
    assert_eq!(result["outcome"], "success");
    assert_eq!(result["log_path"], "log.jsonl");
    let svg = std::fs::read_to_string(out_dir.join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(out_dir.join("run_meta.yaml").exists());
}

#[test]
fn bad_inputs_and_usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = bin()
        .args(["run", "no_such_test.yaml"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no_such_test.yaml"));

    let unknown_flag = bin().args(["seeds", "--bogus"]).output().unwrap();
    assert_eq!(exit_code(&unknown_flag), 1);

    let unknown_command = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(exit_code(&unknown_command), 1);

    let unknown_subject = bin()
        .args(["run", "x.yaml", "--subject", "nope"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&unknown_subject), 1);
}

#[test]
fn existing_out_targets_need_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = seeds_dir(tmp.path());
    let again = bin()
        .args(["seeds", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(exit_code(&again), 1);
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    run_ok(
        &["seeds", "--out", dir.to_str().unwrap(), "--force"],
        tmp.path(),
    );
}

#[test]
fn generate_zero_iterations_keeps_only_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let suite = tmp.path().join("ts");
    run_ok(
        &[
            "generate",
            seeds.join("boxes1.yaml").to_str().unwrap(),
            "--iterations",
            "0",
            "--out",
            suite.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let manifest =
        parse_suite_manifest(&std::fs::read_to_string(suite.join("manifest.yaml")).unwrap())
            .unwrap();
    assert_eq!(manifest.members.len(), 1);
    assert_eq!(manifest.members[0].name, "boxes1_000");
    assert_eq!(manifest.members[0].provenance.mutation, "seed");
}

#[test]
fn generate_then_rerun_reproduces_the_report_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let suite = tmp.path().join("ts");
    run_ok(
        &[
            "generate",
            seeds.join("boxes1.yaml").to_str().unwrap(),
            "--iterations",
            "2",
            "--rng-seed",
            "7",
            "--out",
            suite.to_str().unwrap(),
        ],
        tmp.path(),
    );

    let rerun1 = tmp.path().join("rerun1");
    run_ok(
        &[
            "rerun",
            suite.to_str().unwrap(),
            "--workers",
            "1",
            "--out",
            rerun1.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let rerun8 = tmp.path().join("rerun8");
    let out = bin()
        .args(["rerun", suite.to_str().unwrap(), "--out", rerun8.to_str().unwrap()])
        .env("NAVSTRESS_WORKERS", "8")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());

    let report = |dir: &Path| std::fs::read(dir.join("report.json")).unwrap();
    assert_eq!(report(&suite), report(&rerun1));
    assert_eq!(report(&rerun1), report(&rerun8));

    for entry in std::fs::read_dir(suite.join("results")).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(suite.join("results").join(&name)).unwrap();
        let b = std::fs::read(rerun1.join("results").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
}

#[test]
fn identical_generate_invocations_write_identical_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let seed = seeds.join("cylinders.yaml");
    for out in ["a", "b"] {
        run_ok(
            &[
                "generate",
                seed.to_str().unwrap(),
                "--iterations",
                "2",
                "--out",
                tmp.path().join(out).to_str().unwrap(),
            ],
            tmp.path(),
        );
    }
    let manifest = |d: &str| std::fs::read(tmp.path().join(d).join("manifest.yaml")).unwrap();
    assert_eq!(manifest("a"), manifest("b"));
}

#[test]
fn compare_prints_deltas_and_rejects_mismatched_suites() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let suite = tmp.path().join("ts");
    run_ok(
        &[
            "generate",
            seeds.join("boxes1.yaml").to_str().unwrap(),
            "--iterations",
            "1",
            "--out",
            suite.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let rerun_b = tmp.path().join("on_b");
    run_ok(
        &[
            "rerun",
            suite.to_str().unwrap(),
            "--subject",
            "refnav_b",
            "--out",
            rerun_b.to_str().unwrap(),
        ],
        tmp.path(),
    );

    let chart = tmp.path().join("chart.svg");
    let out = run_ok(
        &[
            "compare",
            suite.join("report.json").to_str().unwrap(),
            rerun_b.join("report.json").to_str().unwrap(),
            "--out",
            chart.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("refnav_a vs refnav_b"), "{stdout}");
    assert!(std::fs::read_to_string(&chart).unwrap().starts_with("<svg"));

    let other = tmp.path().join("other");
    run_ok(
        &[
            "generate",
            seeds.join("corridor.yaml").to_str().unwrap(),
            "--iterations",
            "0",
            "--out",
            other.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let mismatch = bin()
        .args([
            "compare",
            suite.join("report.json").to_str().unwrap(),
            other.join("report.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(exit_code(&mismatch), 1);
}

#[test]
fn report_command_prints_table_and_json_views() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let suite = tmp.path().join("ts");
    run_ok(
        &[
            "generate",
            seeds.join("boxes1.yaml").to_str().unwrap(),
            "--iterations",
            "0",
            "--out",
            suite.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let table = run_ok(&["report", suite.to_str().unwrap()], tmp.path());
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.contains("suite: ts_boxes1"), "{text}");

    let json = run_ok(
        &["report", suite.to_str().unwrap(), "--json"],
        tmp.path(),
    );
    let parsed = parse_report_json(&String::from_utf8(json.stdout).unwrap()).unwrap();
    assert_eq!(parsed.suite, "ts_boxes1");
}

#[test]
fn plot_command_renders_a_member_log() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let suite = tmp.path().join("ts");
    run_ok(
        &[
            "generate",
            seeds.join("corridor.yaml").to_str().unwrap(),
            "--iterations",
            "0",
            "--out",
            suite.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let svg = tmp.path().join("member.svg");
    run_ok(
        &[
            "plot",
            suite.join("tests/corridor_000.yaml").to_str().unwrap(),
            suite.join("logs/corridor_000.jsonl").to_str().unwrap(),
            "--out",
            svg.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let rendered = std::fs::read_to_string(&svg).unwrap();
    assert!(rendered.contains("min distance:"));
    assert!(rendered.contains("min gap:"));
}

#[test]
fn external_subject_runs_over_the_subprocess_protocol() {
    let planner = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/external_planner.py");
    let python = ["python3", "python"]
        .iter()
        .find(|p| {
            Command::new(p)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .copied();
    let Some(python) = python else {
        eprintln!("skipping: no python interpreter on PATH");
        return;
    };

    let tmp = tempfile::tempdir().unwrap();
    let seeds = seeds_dir(tmp.path());
    let out = run_ok(
        &[
            "run",
            seeds.join("boxes1.yaml").to_str().unwrap(),
            "--subject",
            "external",
            "--cmd",
            &format!("{python} {}", planner.display()),
        ],
        tmp.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("boxes1 vs external: success"), "{stdout}");
}
