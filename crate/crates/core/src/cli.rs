//! Command-line front end: run single tests, evolve suites, rerun them for
//! regression, and render reports, comparisons, and plots.
//!
//! Progress goes to stderr; machine-readable output goes to files and
//! stdout. Exit codes: 0 success, 1 validation or usage error, 2 execution
//! error. Existing --out targets are only overwritten with --force.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::generator::{targeted_generate, Predicate, SearchConfig};
use crate::scenario::{
    builtin_seeds, parse_test_definition, read_suite_dir, write_suite_dir, TestDefinition,
};
use crate::simulator::{read_log_file, write_log_file};
use crate::subjects::SubjectSpec;
use crate::testbench::plot::{comparison_chart, render_plot};
use crate::testbench::report::{format_comparison, format_report, parse_report_json, report_json};
use crate::testbench::{
    aggregate, compare_reports, evaluate_test, run_suite, TestOutcome, TestResult,
};

enum CliError {
    /// Bad input from the user: exit 1.
    Validation(String),
    /// Failure while executing or writing: exit 2.
    Execution(String),
}

#[derive(Parser)]
#[command(
    name = "navstress",
    version,
    about = "Search-based stress testing for 2D navigation planners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SubjectArgs {
    /// Planner under test: refnav_a, refnav_b, or external
    #[arg(long, default_value = "refnav_a")]
    subject: String,
    /// Command line for the external subject, split on whitespace
    /// (requires --subject external)
    #[arg(long)]
    cmd: Option<String>,
}

impl SubjectArgs {
    fn spec(&self) -> Result<SubjectSpec, CliError> {
        if self.cmd.is_some() && self.subject != "external" {
            return Err(CliError::Validation(
                "--cmd only applies with --subject external".into(),
            ));
        }
        let mut spec = SubjectSpec::new(&self.subject);
        if let Some(cmd) = &self.cmd {
            let mut words = cmd.split_whitespace();
            let program = words.next().ok_or_else(|| {
                CliError::Validation("--cmd must name a program to run".into())
            })?;
            spec = spec.with_param("cmd", program);
            let args = words.collect::<Vec<_>>().join(" ");
            if !args.is_empty() {
                spec = spec.with_param("args", &args);
            }
        }
        spec.make()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Args)]
struct WorkerArgs {
    /// Worker threads for test execution
    #[arg(long, env = "NAVSTRESS_WORKERS", default_value_t = 4)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one test and print its outcome and metrics
    Run {
        /// Test definition YAML
        test: PathBuf,
        #[command(flatten)]
        subject: SubjectArgs,
        /// Directory for log, result, plot, and metadata files
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing --out target
        #[arg(long)]
        force: bool,
    },
    /// Evolve a seed test into a suite of challenging variants
    Generate {
        /// Seed test definition YAML
        seed: PathBuf,
        #[command(flatten)]
        subject: SubjectArgs,
        /// Search configuration YAML (flags below override its fields)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Search iterations
        #[arg(long)]
        iterations: Option<u32>,
        /// Offspring per iteration
        #[arg(long)]
        lambda: Option<u32>,
        /// Seed for the search's random number generator
        #[arg(long, default_value_t = 42)]
        rng_seed: u64,
        /// Steer the search toward one outcome: success, safety_stop,
        /// timeout, collision, or error
        #[arg(long)]
        target: Option<String>,
        /// Suite directory to create
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing --out target
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Re-execute a generated suite against a subject
    Rerun {
        /// Suite directory (manifest.yaml plus tests/)
        suite: PathBuf,
        #[command(flatten)]
        subject: SubjectArgs,
        /// Directory for logs, results, and the report
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing --out target
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Print a stored suite report
    Report {
        /// report.json, or a directory containing one
        path: PathBuf,
        /// Print the report as JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Compare two suite reports over the same suite
    Compare {
        /// Baseline report.json
        report_a: PathBuf,
        /// Candidate report.json
        report_b: PathBuf,
        /// Write a two-sided bar chart SVG here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing --out target
        #[arg(long)]
        force: bool,
    },
    /// Render a trajectory log over its test scenario as SVG
    Plot {
        /// Test definition YAML
        test: PathBuf,
        /// Trajectory log (.jsonl)
        log: PathBuf,
        /// SVG file to write
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing --out target
        #[arg(long)]
        force: bool,
    },
    /// Write the bundled seed tests into a directory for editing
    Seeds {
        /// Directory to create the seed YAML files in
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing --out target
        #[arg(long)]
        force: bool,
    },
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Execution(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            test,
            subject,
            out,
            force,
        } => cmd_run(&test, &subject, out.as_deref(), force),
        Command::Generate {
            seed,
            subject,
            config,
            iterations,
            lambda,
            rng_seed,
            target,
            out,
            force,
            workers,
        } => cmd_generate(
            &seed,
            &subject,
            config.as_deref(),
            iterations,
            lambda,
            rng_seed,
            target.as_deref(),
            &out,
            force,
            workers.workers,
        ),
        Command::Rerun {
            suite,
            subject,
            out,
            force,
            workers,
        } => cmd_rerun(&suite, &subject, &out, force, workers.workers),
        Command::Report { path, json } => cmd_report(&path, json),
        Command::Compare {
            report_a,
            report_b,
            out,
            force,
        } => cmd_compare(&report_a, &report_b, out.as_deref(), force),
        Command::Plot {
            test,
            log,
            out,
            force,
        } => cmd_plot(&test, &log, &out, force),
        Command::Seeds { out, force } => cmd_seeds(&out, force),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_test(path: &Path) -> Result<TestDefinition, CliError> {
    parse_test_definition(&read_input(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Refuse to touch an existing output target unless --force was given,
/// then make sure the directory exists.
fn claim_out_dir(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Validation(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    fs::create_dir_all(path).map_err(|e| execution(path, e))
}

fn claim_out_file(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Validation(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| execution(parent, e))?;
    }
    Ok(())
}

fn execution(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Execution(format!("{}: {e}", path.display()))
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| execution(path, e))
}

/// Wall-clock state lives only here; every other output is deterministic.
#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    tool_version: &'a str,
    subject: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    timestamp_unix: u64,
}

fn write_meta(
    dir: &Path,
    command: &str,
    subject: &str,
    rng_seed: Option<u64>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let meta = RunMeta {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        subject,
        rng_seed,
        workers,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let text = serde_yaml::to_string(&meta)
        .map_err(|e| CliError::Execution(format!("run metadata: {e}")))?;
    write_out(&dir.join("run_meta.yaml"), &text)
}

fn result_json(result: &TestResult) -> Result<String, CliError> {
    serde_json::to_string_pretty(result)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Execution(format!("result serialization: {e}")))
}

fn write_results(dir: &Path, results: &[TestResult]) -> Result<(), CliError> {
    let results_dir = dir.join("results");
    fs::create_dir_all(&results_dir).map_err(|e| execution(&results_dir, e))?;
    for r in results {
        write_out(
            &results_dir.join(format!("{}.json", r.test_name)),
            &result_json(r)?,
        )?;
    }
    Ok(())
}

fn write_report(dir: &Path, results: &[TestResult], suite_name: &str) -> Result<(), CliError> {
    let report = aggregate(results, suite_name)
        .map_err(|e| CliError::Execution(format!("report aggregation: {e}")))?;
    write_out(&dir.join("report.json"), &report_json(&report))?;
    let table = format_report(&report);
    write_out(&dir.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn fmt_meters(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3} m")
    } else {
        "n/a".into()
    }
}

fn parse_outcome(label: &str) -> Result<TestOutcome, CliError> {
    TestOutcome::ALL
        .into_iter()
        .find(|o| o.label() == label)
        .ok_or_else(|| {
            CliError::Validation(format!(
                "unknown outcome {label:?}; expected one of success, safety_stop, \
                 timeout, collision, error"
            ))
        })
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_run(
    test_path: &Path,
    subject: &SubjectArgs,
    out: Option<&Path>,
    force: bool,
) -> Result<(), CliError> {
    let t = load_test(test_path)?;
    let spec = subject.spec()?;
    if let Some(dir) = out {
        claim_out_dir(dir, force)?;
    }

    let (mut result, log) = evaluate_test(&t, &spec);

    println!("{} vs {}: {}", result.test_name, result.subject_id, result.outcome);
    if let Some(m) = &result.metrics {
        println!("  min obstacle distance: {}", fmt_meters(m.min_obstacle_distance));
        println!("  min obstacle gap:      {}", fmt_meters(m.min_obstacle_gap));
        println!("  path length:           {}", fmt_meters(m.path_length));
        println!("  deviation:             {}", fmt_meters(m.deviation));
        println!("  duration:              {:.2} s", m.duration);
    }

    if let Some(dir) = out {
        let log_rel = "log.jsonl";
        write_log_file(&log, &dir.join(log_rel)).map_err(|e| execution(dir, e))?;
        result.log_path = Some(log_rel.into());
        write_out(&dir.join("result.json"), &result_json(&result)?)?;
        write_out(&dir.join("plot.svg"), &render_plot(&log, &t))?;
        write_meta(dir, "run", spec.id(), None, None)?;
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    seed_path: &Path,
    subject: &SubjectArgs,
    config_path: Option<&Path>,
    iterations: Option<u32>,
    lambda: Option<u32>,
    rng_seed: u64,
    target: Option<&str>,
    out: &Path,
    force: bool,
    workers: usize,
) -> Result<(), CliError> {
    let seed = load_test(seed_path)?;
    let spec = subject.spec()?;
    let mut config = match config_path {
        Some(p) => crate::generator::parse_search_config(&read_input(p)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
        None => SearchConfig::default(),
    };
    if let Some(n) = iterations {
        config.iterations = n;
    }
    if let Some(n) = lambda {
        config.lambda = n;
    }
    let target = target.map(parse_outcome).transpose()?;
    claim_out_dir(out, force)?;

    eprintln!(
        "generating from seed {} against {} ({} iterations x {} offspring, rng_seed {rng_seed})",
        seed.name,
        spec.id(),
        config.iterations,
        config.lambda
    );
    let predicate_fn;
    let predicate: Option<&Predicate> = match target {
        Some(outcome) => {
            predicate_fn = move |r: &TestResult| r.outcome == outcome;
            Some(&predicate_fn)
        }
        None => None,
    };
    let generated = targeted_generate(&seed, &spec, predicate, &config, rng_seed, workers)
        .map_err(|e| match e {
            crate::generator::GeneratorError::Config(m) => CliError::Validation(m),
            crate::generator::GeneratorError::Testbench(m) => CliError::Execution(m.to_string()),
        })?;

    write_suite_dir(out, &generated.suite).map_err(|e| execution(out, e))?;
    let logs_dir = out.join("logs");
    fs::create_dir_all(&logs_dir).map_err(|e| execution(&logs_dir, e))?;
    let mut results = Vec::with_capacity(generated.evaluations.len());
    for (member, (result, _, log)) in generated.suite.members.iter().zip(&generated.evaluations) {
        let rel = format!("logs/{}.jsonl", member.name);
        write_log_file(log, &out.join(&rel)).map_err(|e| execution(out, e))?;
        let mut result = result.clone();
        result.log_path = Some(rel);
        results.push(result);
    }
    write_results(out, &results)?;
    write_report(out, &results, &generated.suite.name)?;
    write_meta(out, "generate", spec.id(), Some(rng_seed), Some(workers))?;

    let best = &generated.suite.members[generated.best];
    eprintln!(
        "suite {}: {} members, best fitness {:.3} ({}) at {}",
        generated.suite.name,
        generated.suite.members.len(),
        generated.best_fitness().value,
        generated.best_fitness().outcome_at_eval,
        best.name
    );
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn cmd_rerun(
    suite_dir: &Path,
    subject: &SubjectArgs,
    out: &Path,
    force: bool,
    workers: usize,
) -> Result<(), CliError> {
    let loaded = read_suite_dir(suite_dir)
        .map_err(|e| CliError::Validation(format!("{}: {e}", suite_dir.display())))?;
    let spec = subject.spec()?;
    claim_out_dir(out, force)?;

    eprintln!(
        "rerunning suite {} ({} members) against {}",
        loaded.manifest.name,
        loaded.manifest.members.len(),
        spec.id()
    );
    let results = run_suite(&loaded, &spec, workers, Some(out))
        .map_err(|e| CliError::Execution(e.to_string()))?;
    write_results(out, &results)?;
    write_report(out, &results, &loaded.manifest.name)?;
    write_meta(out, "rerun", spec.id(), None, Some(workers))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn cmd_report(path: &Path, json: bool) -> Result<(), CliError> {
    let file = if path.is_dir() {
        path.join("report.json")
    } else {
        path.to_path_buf()
    };
    let report = parse_report_json(&read_input(&file)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", file.display())))?;
    if json {
        print!("{}", report_json(&report));
    } else {
        print!("{}", format_report(&report));
    }
    Ok(())
}

fn cmd_compare(
    report_a: &Path,
    report_b: &Path,
    out: Option<&Path>,
    force: bool,
) -> Result<(), CliError> {
    let load = |p: &Path| {
        parse_report_json(&read_input(p)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
    };
    let a = load(report_a)?;
    let b = load(report_b)?;
    if let Some(svg) = out {
        claim_out_file(svg, force)?;
    }
    let comparison =
        compare_reports(&a, &b).map_err(|e| CliError::Validation(e.to_string()))?;
    print!("{}", format_comparison(&comparison));
    if let Some(svg) = out {
        write_out(svg, &comparison_chart(&comparison))?;
        eprintln!("wrote {}", svg.display());
    }
    Ok(())
}

fn cmd_plot(test: &Path, log: &Path, out: &Path, force: bool) -> Result<(), CliError> {
    let t = load_test(test)?;
    let trajectory = read_log_file(log)
        .map_err(|e| CliError::Validation(format!("{}: {e}", log.display())))?;
    claim_out_file(out, force)?;
    write_out(out, &render_plot(&trajectory, &t))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn cmd_seeds(out: &Path, force: bool) -> Result<(), CliError> {
    claim_out_dir(out, force)?;
    for seed in builtin_seeds() {
        let path = out.join(format!("{}.yaml", seed.name));
        write_out(&path, &crate::scenario::serialize_test_definition(&seed))?;
        println!("{}", path.display());
    }
    Ok(())
}
