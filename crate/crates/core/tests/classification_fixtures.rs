//! Handcrafted trajectory logs with known classifications: every outcome
//! category, both goal-tolerance boundaries, and logs no correct run can
//! produce (which must be rejected as malformed rather than guessed at).

use navstress::scenario::parse_test_definition;
use navstress::simulator::read_log_file;
use navstress::testbench::{classify_outcome, TestOutcome, TestbenchError};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn expected_outcomes() -> BTreeMap<String, String> {
    let text = std::fs::read_to_string(fixtures_dir().join("logs/expected.yaml")).unwrap();
    serde_yaml::from_str(&text).unwrap()
}

#[test]
fn every_fixture_classifies_as_recorded() {
    let scenario = parse_test_definition(
        &std::fs::read_to_string(fixtures_dir().join("classify_scenario.yaml")).unwrap(),
    )
    .unwrap();
    let expected = expected_outcomes();
    assert!(expected.len() >= 12, "fixture corpus shrank");

    let mut mismatches = Vec::new();
    for (name, want) in &expected {
        let log = read_log_file(&fixtures_dir().join(format!("logs/{name}.jsonl")))
            .unwrap_or_else(|e| panic!("fixture {name} unreadable: {e}"));
        let got = match classify_outcome(&log, &scenario) {
            Ok(outcome) => outcome.label().to_string(),
            Err(TestbenchError::MalformedLog(_)) => "malformed".to_string(),
            Err(e) => format!("unexpected error: {e}"),
        };
        if &got != want {
            mismatches.push(format!("{name}: expected {want}, got {got}"));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn fixture_corpus_covers_all_categories_and_malformed() {
    let expected = expected_outcomes();
    let mut seen: Vec<&str> = expected.values().map(String::as_str).collect();
    seen.sort_unstable();
    seen.dedup();
    for want in TestOutcome::ALL.iter().map(|o| o.label()).chain(["malformed"]) {
        assert!(seen.contains(&want), "no fixture for {want}");
    }
}
