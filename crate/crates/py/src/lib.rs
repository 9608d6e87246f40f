//! Python bindings over the core workflow: parse or build tests, run them
//! against a subject, evolve suites, and render artifacts. Thin wrappers;
//! all semantics live in the core crate.

use std::path::Path;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use navstress::generator::{self, SearchConfig};
use navstress::geometry;
use navstress::scenario::{
    self, builtin_seeds as core_builtin_seeds, TestDefinition,
};
use navstress::simulator::{write_log, TrajectoryLog};
use navstress::subjects::SubjectSpec;
use navstress::testbench::{self, plot, TestResult};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn subject_spec(subject: &str, cmd: Option<&str>) -> PyResult<SubjectSpec> {
    if cmd.is_some() && subject != "external" {
        return Err(value_err("cmd only applies with subject=\"external\""));
    }
    let mut spec = SubjectSpec::new(subject);
    if let Some(cmd) = cmd {
        let mut words = cmd.split_whitespace();
        let program = words
            .next()
            .ok_or_else(|| value_err("cmd must name a program to run"))?;
        spec = spec.with_param("cmd", program);
        let args = words.collect::<Vec<_>>().join(" ");
        if !args.is_empty() {
            spec = spec.with_param("args", &args);
        }
    }
    spec.make().map_err(value_err)?;
    Ok(spec)
}

/// One navigation test scenario: robot, mission, obstacles, time budget.
#[pyclass(frozen, module = "navstress_py")]
struct Test {
    inner: TestDefinition,
}

#[pymethods]
impl Test {
    /// Parse and validate a test definition from YAML text.
    #[staticmethod]
    fn from_yaml(text: &str) -> PyResult<Self> {
        scenario::parse_test_definition(text)
            .map(|inner| Test { inner })
            .map_err(value_err)
    }

    fn to_yaml(&self) -> String {
        scenario::serialize_test_definition(&self.inner)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn time_budget(&self) -> f64 {
        self.inner.mission.time_budget
    }

    #[getter]
    fn waypoint_count(&self) -> usize {
        self.inner.mission.waypoints.len()
    }

    #[getter]
    fn obstacle_ids(&self) -> Vec<String> {
        self.inner.obstacles.iter().map(|o| o.id.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Test(name={:?}, obstacles={}, waypoints={})",
            self.inner.name,
            self.inner.obstacles.len(),
            self.inner.mission.waypoints.len()
        )
    }
}

fn metrics_dict<'py>(
    py: Python<'py>,
    result: &TestResult,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let Some(m) = &result.metrics else {
        return Ok(None);
    };
    let dict = PyDict::new(py);
    let set = |key: &str, v: f64| -> PyResult<()> {
        if v.is_finite() {
            dict.set_item(key, v)
        } else {
            dict.set_item(key, py.None())
        }
    };
    set("min_obstacle_distance", m.min_obstacle_distance)?;
    set("min_obstacle_gap", m.min_obstacle_gap)?;
    set("path_length", m.path_length)?;
    set("deviation", m.deviation)?;
    set("duration", m.duration)?;
    Ok(Some(dict))
}

/// Outcome, metrics, and trajectory of one executed test.
#[pyclass(frozen, module = "navstress_py")]
struct RunResult {
    result: TestResult,
    log: TrajectoryLog,
    test: TestDefinition,
}

#[pymethods]
impl RunResult {
    #[getter]
    fn test_name(&self) -> &str {
        &self.result.test_name
    }

    #[getter]
    fn subject(&self) -> &str {
        &self.result.subject_id
    }

    /// Outcome label: success, safety_stop, timeout, collision, or error.
    #[getter]
    fn outcome(&self) -> &'static str {
        self.result.outcome.label()
    }

    /// Metric dict, or None for error runs; infinite clearances map to None.
    #[getter]
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        metrics_dict(py, &self.result)
    }

    /// The trajectory log in its line-delimited JSON file format.
    fn log_ndjson(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_log(&self.log, &mut buf).map_err(runtime_err)?;
        String::from_utf8(buf).map_err(runtime_err)
    }

    fn save_log(&self, path: &str) -> PyResult<()> {
        navstress::simulator::write_log_file(&self.log, Path::new(path)).map_err(runtime_err)
    }

    /// Render the run over its scenario as an SVG document.
    fn plot_svg(&self) -> String {
        plot::render_plot(&self.log, &self.test)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(test={:?}, subject={:?}, outcome={:?})",
            self.result.test_name,
            self.result.subject_id,
            self.result.outcome.label()
        )
    }
}

/// A generated suite: every evaluated candidate with its provenance.
#[pyclass(frozen, module = "navstress_py")]
struct Suite {
    generated: generator::GeneratedSuite,
}

#[pymethods]
impl Suite {
    #[getter]
    fn name(&self) -> &str {
        &self.generated.suite.name
    }

    #[getter]
    fn subject(&self) -> &str {
        &self.generated.suite.subject
    }

    #[getter]
    fn rng_seed(&self) -> u64 {
        self.generated.suite.rng_seed
    }

    fn __len__(&self) -> usize {
        self.generated.suite.members.len()
    }

    fn member_names(&self) -> Vec<String> {
        self.generated
            .suite
            .members
            .iter()
            .map(|m| m.name.clone())
            .collect()
    }

    fn member(&self, index: usize) -> PyResult<Test> {
        self.generated
            .suite
            .members
            .get(index)
            .map(|m| Test {
                inner: m.test.clone(),
            })
            .ok_or_else(|| PyKeyError::new_err(index))
    }

    /// Outcome labels, parallel to member_names().
    fn outcomes(&self) -> Vec<&'static str> {
        self.generated
            .evaluations
            .iter()
            .map(|(r, _, _)| r.outcome.label())
            .collect()
    }

    /// Fitness values (minimum clearance, lower = harder), parallel to
    /// member_names(); None for runs without obstacles in range.
    fn fitness_values(&self) -> Vec<Option<f64>> {
        self.generated
            .evaluations
            .iter()
            .map(|(_, f, _)| f.value.is_finite().then_some(f.value))
            .collect()
    }

    fn provenance<'py>(&self, py: Python<'py>, index: usize) -> PyResult<Bound<'py, PyDict>> {
        let member = self
            .generated
            .suite
            .members
            .get(index)
            .ok_or_else(|| PyKeyError::new_err(index))?;
        let dict = PyDict::new(py);
        dict.set_item("seed", &member.provenance.seed)?;
        dict.set_item("iteration", member.provenance.iteration)?;
        dict.set_item("parent", member.provenance.parent.as_deref())?;
        dict.set_item("mutation", &member.provenance.mutation)?;
        Ok(dict)
    }

    #[getter]
    fn best_index(&self) -> usize {
        self.generated.best
    }

    #[getter]
    fn best_fitness(&self) -> Option<f64> {
        let v = self.generated.best_fitness().value;
        v.is_finite().then_some(v)
    }

    /// Write manifest.yaml and tests/ under `path`.
    fn write_dir(&self, path: &str) -> PyResult<()> {
        scenario::write_suite_dir(Path::new(path), &self.generated.suite).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Suite(name={:?}, members={}, subject={:?})",
            self.generated.suite.name,
            self.generated.suite.members.len(),
            self.generated.suite.subject
        )
    }
}

/// The five bundled seed scenarios.
#[pyfunction]
fn builtin_seeds() -> Vec<Test> {
    core_builtin_seeds()
        .into_iter()
        .map(|inner| Test { inner })
        .collect()
}

/// Execute one test against a subject and return its outcome, metrics,
/// and trajectory.
#[pyfunction]
#[pyo3(signature = (test, subject = "refnav_a", cmd = None))]
fn run_test(py: Python<'_>, test: &Test, subject: &str, cmd: Option<&str>) -> PyResult<RunResult> {
    let spec = subject_spec(subject, cmd)?;
    let t = test.inner.clone();
    let (result, log) = py.detach(|| testbench::evaluate_test(&t, &spec));
    Ok(RunResult {
        result,
        log,
        test: t,
    })
}

/// Evolve a seed into a suite of challenging variants.
#[pyfunction]
#[pyo3(signature = (
    seed,
    subject = "refnav_a",
    cmd = None,
    iterations = None,
    lambda_ = None,
    rng_seed = 42,
    workers = 4,
    target = None,
))]
#[allow(clippy::too_many_arguments)]
fn generate_suite(
    py: Python<'_>,
    seed: &Test,
    subject: &str,
    cmd: Option<&str>,
    iterations: Option<u32>,
    lambda_: Option<u32>,
    rng_seed: u64,
    workers: usize,
    target: Option<&str>,
) -> PyResult<Suite> {
    let spec = subject_spec(subject, cmd)?;
    let mut config = SearchConfig::default();
    if let Some(n) = iterations {
        config.iterations = n;
    }
    if let Some(n) = lambda_ {
        config.lambda = n;
    }
    let target = target
        .map(|label| {
            testbench::TestOutcome::ALL
                .into_iter()
                .find(|o| o.label() == label)
                .ok_or_else(|| value_err(format!("unknown outcome {label:?}")))
        })
        .transpose()?;
    let seed = seed.inner.clone();
    let generated = py
        .detach(|| match target {
            Some(outcome) => {
                let predicate = move |r: &TestResult| r.outcome == outcome;
                generator::targeted_generate(&seed, &spec, Some(&predicate), &config, rng_seed, workers)
            }
            None => generator::generate_suite(&seed, &spec, &config, rng_seed, workers),
        })
        .map_err(|e| match e {
            generator::GeneratorError::Config(m) => value_err(m),
            other => runtime_err(other),
        })?;
    Ok(Suite { generated })
}

/// Analytic clearance between two obstacles of a test, by id.
#[pyfunction]
fn obstacle_gap(test: &Test, a: &str, b: &str) -> PyResult<f64> {
    let find = |id: &str| {
        test.inner
            .obstacles
            .iter()
            .find(|o| o.id == id)
            .ok_or_else(|| PyKeyError::new_err(id.to_string()))
    };
    Ok(geometry::obstacle_gap(&find(a)?.shape, &find(b)?.shape))
}

#[pymodule]
fn navstress_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Test>()?;
    m.add_class::<RunResult>()?;
    m.add_class::<Suite>()?;
    m.add_function(wrap_pyfunction!(builtin_seeds, m)?)?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(generate_suite, m)?)?;
    m.add_function(wrap_pyfunction!(obstacle_gap, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
